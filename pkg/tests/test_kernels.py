"""Backend equivalence and env-flag selection for the hot kernels."""

import numpy as np
import pytest

from dcl import _kernels


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    gains = rng.exponential(size=(500, 6))
    L = rng.integers(0, 7, 500)
    powers = rng.uniform(0.5, 3.0, 6)
    return gains, L, powers


needs_numba = pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")


@needs_numba
def test_mi_trials_backends_agree():
    gains, L, powers = _inputs()
    a = _kernels.NUMPY_IMPL["mi_trials"](gains, L, powers)
    b = _kernels.NUMBA_IMPL["mi_trials"](gains, L, powers)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)


@needs_numba
def test_parallel_rate_backends_agree():
    rng = np.random.default_rng(1)
    gains = rng.exponential(size=(200, 30, 4))
    L = rng.integers(0, 5, (200, 30))
    a = _kernels.NUMPY_IMPL["parallel_rate_trials"](gains, L, 0.07)
    b = _kernels.NUMBA_IMPL["parallel_rate_trials"](gains, L, 0.07)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@needs_numba
def test_repetition_backends_agree():
    gains, L, _ = _inputs(2)
    a_coded, a_rep = _kernels.NUMPY_IMPL["repetition_pair"](gains, L, 0.05)
    b_coded, b_rep = _kernels.NUMBA_IMPL["repetition_pair"](gains, L, 0.05)
    np.testing.assert_allclose(a_coded, b_coded, rtol=1e-13)
    np.testing.assert_allclose(a_rep, b_rep, rtol=1e-13)


def test_env_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("DCL_DISABLE_NUMBA", "1")
    assert _kernels.active_backend() == "numpy"
    monkeypatch.delenv("DCL_DISABLE_NUMBA")
    if _kernels.NUMBA_AVAILABLE:
        assert _kernels.active_backend() == "numba"


def test_numpy_path_empty_prefix():
    gains = np.array([[1.0, 2.0]])
    L = np.array([0])
    out = _kernels.NUMPY_IMPL["mi_trials"](gains, L, np.array([1.0, 1.0]))
    assert out[0] == 0.0
