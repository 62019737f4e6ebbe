"""The numba kernels and the RTS_NO_NUMBA pure-Python path must agree."""

import json
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from rtsim import kernels
from rtsim.accel import USE_NUMBA

_PROBE = textwrap.dedent(
    """
    import json
    import numpy as np
    from rtsim import kernels
    from rtsim.accel import USE_NUMBA
    from rtsim.config import load_scenario
    from rtsim.sim import run

    out = {"use_numba": USE_NUMBA}
    out["erf_inv"] = [kernels.erf_inv(y) for y in (0.0, 0.3, 0.9, -0.5)]
    out["margin"] = kernels.chance_margin(1.2, -0.3, 0.1, 0.0, 0.3, 0.05, 0.25, 0.4, 0.9)
    out["risk"] = kernels.gauss_risk(0.5, 0.2, 0.0, 0.0, 0.4, 0.1, 0.3)
    log = run(load_scenario("fig4_sensing", seed=0, max_steps=40))
    out["mse"] = [rec.mse for rec in log.steps]
    out["traj"] = [rec.robot_xy.tolist() for rec in log.steps[-3:]]
    print(json.dumps(out))
    """
)


def _probe(no_numba):
    env = dict(os.environ)
    if no_numba:
        env["RTS_NO_NUMBA"] = "1"
    else:
        env.pop("RTS_NO_NUMBA", None)
    proc = subprocess.run(
        [sys.executable, "-c", _PROBE], capture_output=True, text=True, env=env,
        timeout=600,
    )
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().split("\n")[-1])


@pytest.mark.slow
def test_numba_and_python_paths_agree():
    fast = _probe(no_numba=False)
    slow = _probe(no_numba=True)
    assert fast["use_numba"] is True
    assert slow["use_numba"] is False
    np.testing.assert_allclose(fast["erf_inv"], slow["erf_inv"], atol=1e-12)
    np.testing.assert_allclose(fast["margin"], slow["margin"], atol=1e-12)
    np.testing.assert_allclose(fast["risk"], slow["risk"], atol=1e-12)
    np.testing.assert_allclose(fast["mse"], slow["mse"], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(fast["traj"], slow["traj"], atol=1e-9)


def test_kernels_basic_values_in_current_mode():
    # independent closed-form checks, valid on either path
    assert kernels.erf_inv(0.0) == 0.0
    assert kernels.eig_max_2x2(2.0, 0.0, 1.0) == 2.0
    assert kernels.gauss_risk(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0) == pytest.approx(
        1.0 / (2.0 * np.pi)
    )
    assert isinstance(USE_NUMBA, bool)
