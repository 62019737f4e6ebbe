"""rtsim: resilient multi-robot multi-target tracking simulator."""

__version__ = "0.1.0"

from .config import ScenarioConfig, load_scenario
from .sim import compute_metrics, run
from .simlog import SimLog

__all__ = ["ScenarioConfig", "SimLog", "compute_metrics", "load_scenario", "run", "__version__"]
