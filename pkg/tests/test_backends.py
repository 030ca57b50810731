"""The compiled kernel and the pure-Python twin must be bit-identical."""

import subprocess
import sys

import numpy as np
import pytest
from numpy.random import PCG64

from hetq.sim import _engine_py

_engine = pytest.importorskip("hetq.sim._engine")

CASES = [
    # (policy, k, lam_i, mu_i, lam_t, mu_t, p, horizon_kind, horizon, warmup)
    (0, 3, 6.0, 20.0, 5.6, 8.0, 1.0, 1, 5_000.0, 0.1),
    (1, 4, 2.0, 8.0, 1.0, 4.0, 0.6, 1, 5_000.0, 0.0),
    (2, 2, 9.0, 40.0, 1.0, 4.0, 0.5, 1, 5_000.0, 0.2),
    (0, 1, 1.0, 1.0, 1.0, 2.0, 0.0, 0, 2_000.0, 0.1),
    (1, 3, 3.0, 9.0, 1.0, 6.0, 0.9, 0, 2_000.0, 0.5),
]


@pytest.mark.parametrize("case", CASES)
def test_run_system_twin_outputs_identical(case):
    out_c = _engine.run_system(PCG64(4242), *case, 10**6)
    out_py = _engine_py.run_system(PCG64(4242), *case, 10**6)
    assert len(out_c) == len(out_py)
    for a, b in zip(out_c, out_py):
        if isinstance(a, np.ndarray):
            np.testing.assert_array_equal(a, b)
        else:
            assert a == b


@pytest.mark.parametrize("lam,mu,k", [(0.0, 4.0, 1), (4.0, 4.0, 2), (2.0, 4.0, 6)])
def test_run_busy_periods_twin_outputs_identical(lam, mu, k):
    out_c = _engine.run_busy_periods(PCG64(99), lam, mu, k, 50_000)
    out_py = _engine_py.run_busy_periods(PCG64(99), lam, mu, k, 50_000)
    assert out_c == out_py


def test_backend_env_override_selects_python():
    code = "import hetq.sim; print(hetq.sim.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "HETQ_BACKEND": "py"},
    )
    assert out.stdout.strip() == "py"


def test_default_backend_is_compiled_here():
    import hetq.sim

    assert hetq.sim.BACKEND == "c"
