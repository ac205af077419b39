"""Fading and attack distributions, reproducible sampling, per-frame rate.

A frame spans K fading blocks.  An attack at (normalized) time T wipes out
the current and remaining blocks, so L = min(K, floor(T)) blocks survive.
All gains and powers are linear-scale nonnegative reals; dB conversion
happens only at the CLI boundary.

Sampling is driven by counter-based Philox substreams keyed on
(seed, stream_id, substream index), so draws are pure functions of those
integers and never depend on worker count or scheduling.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError, ModelError, PreconditionError

_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# fading models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RayleighFading:
    """Rayleigh amplitude fading: the power gain is exponential with `rate`."""

    rate: float = 1.0

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ModelError(f"rate must be positive and finite, got {self.rate}")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    @property
    def variance(self) -> float:
        return 1.0 / self.rate**2

    def mgf(self, s: float) -> float:
        if s >= self.rate:
            raise DomainError(f"mgf defined for s < {self.rate}, got {s}")
        return 1.0 / (1.0 - s / self.rate)

    def gains_from_uniforms(self, u):
        return -np.log1p(-u) / self.rate


@dataclass(frozen=True)
class LogNormalFading:
    """Standard log-normal fading: log(gain) ~ N(0, 1), so the median gain is 1."""

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = ndtr(np.log(x[pos]))
        return out

    @property
    def mean(self) -> float:
        return math.exp(0.5)

    @property
    def variance(self) -> float:
        return (math.e - 1.0) * math.e

    def gains_from_uniforms(self, u):
        return np.exp(ndtri(u))


@dataclass(frozen=True)
class IdenticalFading:
    """One gain drawn per frame and shared by all blocks (fully correlated fading)."""

    base: "FadingModel"

    def __post_init__(self):
        if isinstance(self.base, IdenticalFading):
            raise ModelError("IdenticalFading cannot wrap itself")

    def cdf(self, x):
        return self.base.cdf(x)

    @property
    def mean(self) -> float:
        return self.base.mean

    @property
    def variance(self) -> float:
        return self.base.variance

    def gains_from_uniforms(self, u):
        return self.base.gains_from_uniforms(u)


FadingModel = RayleighFading | LogNormalFading | IdenticalFading


# ---------------------------------------------------------------------------
# attack models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialAttack:
    """Attack time exponentially distributed with the given rate."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ModelError(f"rate must be positive and finite, got {self.rate}")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-self.rate * np.maximum(t, 0.0)), 0.0)

    def inverse_cdf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate


@dataclass(frozen=True)
class NeverAttack:
    """No attack ever happens: G(t) = 0 for all finite t."""

    def cdf(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def inverse_cdf(self, u):
        return np.full_like(np.asarray(u, dtype=float), np.inf)


@dataclass(frozen=True)
class EmpiricalAttack:
    """Piecewise-constant right-continuous attack CDF given as a table.

    `times` must be strictly increasing and positive so that G(0) = 0;
    `cdf_values` are the CDF levels reached at each time.
    """

    times: tuple[float, ...]
    cdf_values: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        g = np.asarray(self.cdf_values, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or t.size == 0:
            raise ModelError("times and cdf_values must be equal-length 1-D tables")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(g))):
            raise ModelError("attack table contains non-finite values")
        if t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise ModelError("times must be strictly increasing and positive")
        if np.any(g < 0) or np.any(g > 1) or np.any(np.diff(g) < 0):
            raise ModelError("cdf_values must be a non-decreasing table in [0, 1]")
        object.__setattr__(self, "times", tuple(float(x) for x in t))
        object.__setattr__(self, "cdf_values", tuple(float(x) for x in g))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.times), t, side="right")
        table = np.concatenate([[0.0], np.asarray(self.cdf_values)])
        return table[idx]

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        g = np.asarray(self.cdf_values)
        t = np.asarray(self.times)
        idx = np.searchsorted(g, u, side="left")
        out = np.where(idx < t.size, t[np.minimum(idx, t.size - 1)], np.inf)
        return np.where(u <= 0, t[0] if g[0] > 0 else np.inf, out)


AttackModel = ExponentialAttack | NeverAttack | EmpiricalAttack


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightVector:
    """Probabilities of the attack landing per block interval.

    w[i] = Pr(i < T <= i+1) for i < K, and w[K] = Pr(T > K).  Identifying
    Pr(L = i) with w[i] differs from the floor(T) sampler only on a set of
    measure zero for continuous attack times.
    """

    K: int
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "w", arr)
        if arr.shape != (self.K + 1,):
            raise ModelError(f"weight vector must have K+1 entries, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ModelError("weights contain non-finite values")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise ModelError(f"weights sum to {arr.sum()}, expected 1")

    @property
    def w0(self) -> float:
        return float(self.w[0])

    @property
    def w_survive(self) -> float:
        """Probability that no attack lands within the K blocks."""
        return float(self.w[self.K])


def block_weights(attack: AttackModel, K: int) -> WeightVector:
    """Attack-interval weights w[i] = G(i+1) - G(i), with w[K] = 1 - G(K)."""
    if K < 1:
        raise PreconditionError(f"K must be >= 1, got {K}")
    grid = attack.cdf(np.arange(K + 1, dtype=float))
    if not np.all(np.isfinite(grid)):
        raise ModelError("attack CDF returned non-finite values")
    w = np.empty(K + 1)
    w[:K] = np.diff(grid)
    w[K] = 1.0 - grid[K]
    return WeightVector(K=K, w=w)


def surviving_moments(attack: AttackModel, K: int) -> tuple[float, float]:
    """Exact mean and variance of L from the block-weight pmf."""
    wv = block_weights(attack, K)
    i = np.arange(K + 1, dtype=float)
    mu = float(np.dot(i, wv.w))
    var = float(np.dot(i * i, wv.w) - mu * mu)
    return mu, max(var, 0.0)


@dataclass(frozen=True)
class PowerVector:
    """Per-block transmit powers under an average-power budget P."""

    K: int
    p: np.ndarray = field(repr=False)
    P: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)
        if arr.shape != (self.K,):
            raise PreconditionError(f"power vector must have K entries, got {arr.shape}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise DomainError("powers must be finite and nonnegative")
        if arr.sum() > self.K * self.P + 1e-9:
            raise PreconditionError(
                f"budget violated: sum(p)={arr.sum():.6g} > K*P={self.K * self.P:.6g}"
            )

    @classmethod
    def uniform(cls, K: int, P: float) -> "PowerVector":
        return cls(K=K, p=np.full(K, float(P)), P=float(P))


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream; substreams are indexed deterministically."""

    seed: int
    stream_id: int = 0

    def substream(self, index: int) -> np.random.Generator:
        key = np.random.SeedSequence(
            [self.seed & _MASK64, self.stream_id & _MASK64, index & _MASK64]
        )
        return np.random.Generator(np.random.Philox(key))

    def generator(self) -> np.random.Generator:
        return self.substream(0)


# ---------------------------------------------------------------------------
# sampling and the per-frame rate
# ---------------------------------------------------------------------------


def surviving_from_uniforms(attack: AttackModel, K: int, u: np.ndarray) -> np.ndarray:
    """Map uniforms through the attack inverse CDF to L = min(K, floor(T))."""
    T = attack.inverse_cdf(u)
    return np.minimum(np.floor(T), float(K)).astype(np.int64)


def sample_surviving_blocks(attack: AttackModel, K: int, rng: RngStream, size=None):
    """Sample the surviving-block count L; scalar when size is None."""
    if K < 1:
        raise PreconditionError(f"K must be >= 1, got {K}")
    gen = rng.generator()
    u = gen.random(size if size is not None else 1)
    L = surviving_from_uniforms(attack, K, u)
    return int(L[0]) if size is None else L


def sample_fading(model: FadingModel, n: int, rng: RngStream) -> np.ndarray:
    """Draw n gains; IdenticalFading returns one frame-shared draw repeated."""
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    gen = rng.generator()
    if isinstance(model, IdenticalFading):
        g = model.gains_from_uniforms(gen.random(1))
        return np.full(n, float(g[0]))
    return model.gains_from_uniforms(gen.random(n))


def mutual_information(gains, powers: PowerVector, L: int) -> float:
    """Average rate (1/K) sum_{i<=L} log(1 + gain_i * p_i) in nats/s/Hz."""
    g = np.asarray(gains, dtype=float)
    if L < 0 or L > powers.K:
        raise PreconditionError(f"L must be in [0, K], got {L}")
    if g.size < L:
        raise PreconditionError(f"need at least L={L} gains, got {g.size}")
    if np.any(g < 0):
        raise DomainError("gains must be nonnegative")
    if L == 0:
        return 0.0
    return float(np.sum(np.log1p(g[:L] * powers.p[:L])) / powers.K)
