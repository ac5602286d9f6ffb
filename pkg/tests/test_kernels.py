"""Both kernel backends, and the plain-Python loop source, agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest

from spikecol import _accel, kernels
from spikecol.plasticity import StdpParams, _tables


def sim_case(seed, n=30, T=60, noise=True):
    r = np.random.default_rng(seed)
    W = r.normal(0, 8, (n, n))
    ext = np.where(r.random((T, n)) < 0.05, 100.0, 0.0)
    nz = r.standard_normal((T, n)) * 10 if noise else np.zeros((0, 0))
    f = lambda v: np.full(n, v)
    u0 = r.uniform(-75, -38, n)
    return (W, ext, nz, f(10.0), f(5.0), f(-67.0), f(-75.0), f(-37.0), f(0.7), 1.0, u0,
            r.random(n) < 0.2)


def pair_case(seed, T=50, n_pre=12, n_post=7, tau_e=250.0):
    r = np.random.default_rng(seed)
    pre = r.random((T, n_pre)) < 0.08
    post = r.random((T, n_post)) < 0.08
    p = StdpParams()
    return (pre, post, *_tables(T, p, 1.0, tau_e), p.a_plus, p.a_minus)


def backends(which):
    out = {"loops": getattr(kernels, f"_{which}_loops"),
           "numpy": getattr(kernels, f"{which}_numpy" if which == "simulate" else "pair_stdp_numpy")}
    nb = kernels.simulate_numba if which == "simulate" else kernels.pair_stdp_numba
    if nb is not None:
        out["numba"] = nb
    return out


def assert_same(results):
    ref = results[0]
    for other in results[1:]:
        for a, b in zip(ref, other):
            if isinstance(a, np.ndarray):
                assert a.dtype == b.dtype and np.array_equal(a, b)
            else:
                assert a == b


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("noise", [True, False])
def test_simulate_backends_agree(seed, noise):
    args = sim_case(seed, noise=noise)
    assert_same([fn(*args) for fn in backends("simulate").values()])


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("tau_e", [None, 250.0])
def test_pairing_backends_agree(seed, tau_e):
    args = pair_case(seed, tau_e=tau_e)
    assert_same([fn(*args) for fn in backends("pair").values()])


def test_simulate_fault_step_agrees():
    args = list(sim_case(0, noise=False))
    args[1] = args[1].copy()
    args[1][7, 3] = np.inf
    out = [fn(*args) for fn in backends("simulate").values()]
    assert {o[2] for o in out} == {7}


def test_backend_flag_disables_numba():
    env = dict(os.environ, SPIKECOL_DISABLE_NUMBA="1")
    code = "from spikecol import _accel, kernels; print(_accel.backend(), kernels.simulate_numba)"
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert res.stdout.split() == ["numpy", "None"]


def test_default_backend_reports_numba_when_available():
    assert _accel.backend() == ("numba" if _accel.HAS_NUMBA else "numpy")
    assert kernels.simulate is (kernels.simulate_numba if _accel.HAS_NUMBA else kernels.simulate_numpy)
