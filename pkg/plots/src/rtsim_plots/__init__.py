"""Figure generation for rtsim simulation logs (rts-log-v1 files)."""

__version__ = "0.1.0"

SCHEMA_VERSION = "rts-log-v1"
