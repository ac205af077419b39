"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable DCL_DISABLE_NUMBA is unset/0; set DCL_DISABLE_NUMBA=1 to force
the numpy path.  Within one backend every kernel is deterministic and
independent of thread scheduling (callers partition work by fixed trial
index, never by worker).  Across backends results agree to rounding
because numpy reductions are pairwise while the loops are sequential.

Kernel contracts:
  mi_trials(gains, L, powers)          per-trial rate (1/K) sum_{i<L} log1p(g*p)
  parallel_rate_trials(gains, L, p)    per-trial total rate over N sub-channels
  repetition_pair(gains, L, p)         (per-block coding rate, repetition rate)
"""

import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    _HAVE_NUMBA = False


def numba_disabled_by_env() -> bool:
    return os.environ.get("DCL_DISABLE_NUMBA", "0").strip() not in ("", "0")


NUMBA_AVAILABLE = _HAVE_NUMBA


def _prefix_take(cumulative: np.ndarray, L: np.ndarray) -> np.ndarray:
    # cumulative has a leading zero column; row t picks entry L[t]
    return cumulative[np.arange(L.shape[0]), L]


def _mi_trials_np(gains: np.ndarray, L: np.ndarray, powers: np.ndarray) -> np.ndarray:
    n, K = gains.shape
    logs = np.log1p(gains * powers)
    cum = np.concatenate([np.zeros((n, 1)), np.cumsum(logs, axis=1)], axis=1)
    return _prefix_take(cum, L) / K


def _parallel_rate_trials_np(gains: np.ndarray, L: np.ndarray, power: float) -> np.ndarray:
    n, N, K = gains.shape
    logs = np.log1p(gains * power)
    cum = np.concatenate([np.zeros((n, N, 1)), np.cumsum(logs, axis=2)], axis=2)
    per_sub = np.take_along_axis(cum, L[:, :, None], axis=2)[:, :, 0]
    return per_sub.sum(axis=1) / K


def _repetition_pair_np(gains: np.ndarray, L: np.ndarray, power: float):
    n, K = gains.shape
    logs = np.log1p(gains * power)
    cum_log = np.concatenate([np.zeros((n, 1)), np.cumsum(logs, axis=1)], axis=1)
    cum_gain = np.concatenate([np.zeros((n, 1)), np.cumsum(gains, axis=1)], axis=1)
    mi_coded = _prefix_take(cum_log, L) / K
    mi_rep = np.log1p(power * _prefix_take(cum_gain, L)) / K
    return mi_coded, mi_rep


if _HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _mi_trials_nb(gains, L, powers, out):  # pragma: no cover - compiled
        n, K = gains.shape
        for t in range(n):
            s = 0.0
            for i in range(L[t]):
                s += np.log1p(gains[t, i] * powers[i])
            out[t] = s / K

    @numba.njit(cache=True, nogil=True)
    def _parallel_rate_trials_nb(gains, L, power, out):  # pragma: no cover - compiled
        n, N, K = gains.shape
        for t in range(n):
            total = 0.0
            for i in range(N):
                for k in range(L[t, i]):
                    total += np.log1p(gains[t, i, k] * power)
            out[t] = total / K

    @numba.njit(cache=True, nogil=True)
    def _repetition_pair_nb(gains, L, power, out_coded, out_rep):  # pragma: no cover
        n, K = gains.shape
        for t in range(n):
            s_log = 0.0
            s_gain = 0.0
            for i in range(L[t]):
                s_log += np.log1p(gains[t, i] * power)
                s_gain += gains[t, i]
            out_coded[t] = s_log / K
            out_rep[t] = np.log1p(power * s_gain) / K

    def _mi_trials_numba(gains, L, powers):
        out = np.empty(gains.shape[0])
        _mi_trials_nb(gains, L, powers, out)
        return out

    def _parallel_rate_trials_numba(gains, L, power):
        out = np.empty(gains.shape[0])
        _parallel_rate_trials_nb(gains, L, float(power), out)
        return out

    def _repetition_pair_numba(gains, L, power):
        out_coded = np.empty(gains.shape[0])
        out_rep = np.empty(gains.shape[0])
        _repetition_pair_nb(gains, L, float(power), out_coded, out_rep)
        return out_coded, out_rep

    NUMPY_IMPL = {
        "mi_trials": _mi_trials_np,
        "parallel_rate_trials": _parallel_rate_trials_np,
        "repetition_pair": _repetition_pair_np,
    }
    NUMBA_IMPL = {
        "mi_trials": _mi_trials_numba,
        "parallel_rate_trials": _parallel_rate_trials_numba,
        "repetition_pair": _repetition_pair_numba,
    }
else:  # pragma: no cover - exercised only without numba
    NUMPY_IMPL = {
        "mi_trials": _mi_trials_np,
        "parallel_rate_trials": _parallel_rate_trials_np,
        "repetition_pair": _repetition_pair_np,
    }
    NUMBA_IMPL = None


def active_backend() -> str:
    if NUMBA_AVAILABLE and not numba_disabled_by_env():
        return "numba"
    return "numpy"


def _dispatch(name):
    def call(*args):
        if active_backend() == "numba":
            return NUMBA_IMPL[name](*args)
        return NUMPY_IMPL[name](*args)

    call.__name__ = name
    return call


mi_trials = _dispatch("mi_trials")
parallel_rate_trials = _dispatch("parallel_rate_trials")
repetition_pair = _dispatch("repetition_pair")
