"""Asymptotics for N parallel attacked sub-channels.

Everything here rides on the per-sub-channel normalized gain sum
Y = (1/K) sum_{k<=L} alpha_k: its first two moments, the banded-dependence
long-run variance, Gaussian outage approximations for large N, and outage
exponents (an exact Legendre-transform rate for independent attacks, a
Gaussian-tail bound for m-dependent ones).

The linearization log(1+x) ~ x underlies all formulas in this module, so
agreement with exact-event Monte Carlo degrades when P/N is not small.
"""

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, ndtr

from .analytic_single import RegimeWarning
from .channel_model import (
    AttackModel,
    FadingModel,
    IdenticalFading,
    RayleighFading,
    block_weights,
    surviving_moments,
)
from .errors import DomainError, OutOfRegimeError, PreconditionError, UnsupportedModelError

GAUSSIAN_WARN_BELOW_N = 20


@dataclass(frozen=True)
class ParallelConfig:
    N: int
    K: int
    P: float
    R: float
    fading: FadingModel
    attack: AttackModel
    m: int = 0
    rho: float = 0.0

    def __post_init__(self):
        if self.N < 1 or self.K < 1:
            raise PreconditionError("N and K must be >= 1")
        if not (self.P > 0 and self.R > 0):
            raise PreconditionError("P and R must be > 0")
        if self.m < 0:
            raise PreconditionError(f"m must be >= 0, got {self.m}")
        if not (0.0 <= self.rho < 1.0):
            raise PreconditionError(f"rho must lie in [0, 1), got {self.rho}")

    @property
    def t(self) -> float:
        """Rate per unit cost R/P, the threshold variable of the asymptotics."""
        return self.R / self.P


@dataclass(frozen=True)
class YMoments:
    mu: float
    var: float
    gamma: tuple[float, ...] = ()
    nu: float = 0.0


class ExponentKind(enum.Enum):
    INDEPENDENT_LDP = "independent-ldp"
    MDEP_GAUSSIAN_BOUND = "m-dependent-gaussian-bound"


@dataclass(frozen=True)
class ExponentResult:
    value: float
    s_star: float
    t: float
    kind: ExponentKind
    below_support_quantile: bool = False


def _check_iid_blocks(fading: FadingModel):
    if isinstance(fading, IdenticalFading):
        raise UnsupportedModelError("moment formulas assume i.i.d. block gains")


def y_moments(fading: FadingModel, attack: AttackModel, K: int) -> YMoments:
    """Mean and variance of Y for i.i.d. block gains and a random block count."""
    _check_iid_blocks(fading)
    mu_l, var_l = surviving_moments(attack, K)
    mu = mu_l * fading.mean / K
    var = (mu_l * fading.variance + var_l * fading.mean**2) / K**2
    return YMoments(mu=mu, var=var, nu=var)


def nu_m(fading: FadingModel, attack: AttackModel, K: int, m: int, rho: float) -> YMoments:
    """Long-run variance when adjacent sub-channels share correlation rho up to lag m."""
    if m < 0:
        raise PreconditionError(f"m must be >= 0, got {m}")
    if not (0.0 <= rho < 1.0):
        raise PreconditionError(f"rho must lie in [0, 1), got {rho}")
    base = y_moments(fading, attack, K)
    mu_l, var_l = surviving_moments(attack, K)
    gamma_h = fading.mean**2 * (rho * var_l + mu_l**2) / K**2
    nu = base.var + 2.0 * m * rho * fading.mean**2 * var_l / K**2
    return YMoments(mu=base.mu, var=base.var, gamma=(gamma_h,) * m, nu=nu)


def _gaussian_outage(t: float, mu: float, scale2: float, N: int) -> float:
    if scale2 <= 0.0:
        # degenerate Y: outage is a step at t = mu
        return 0.0 if t < mu else (0.5 if t == mu else 1.0)
    return float(ndtr((t - mu) * math.sqrt(N) / math.sqrt(scale2)))


def gaussian_outage_indep(pcfg: ParallelConfig) -> float:
    """CLT outage approximation for independent attacks across sub-channels."""
    if pcfg.N < GAUSSIAN_WARN_BELOW_N:
        warnings.warn(
            f"Gaussian approximation at N={pcfg.N} (< {GAUSSIAN_WARN_BELOW_N})",
            RegimeWarning,
            stacklevel=2,
        )
    mom = y_moments(pcfg.fading, pcfg.attack, pcfg.K)
    return _gaussian_outage(pcfg.t, mom.mu, mom.var, pcfg.N)


def gaussian_outage_mdep(pcfg: ParallelConfig) -> float:
    """CLT outage approximation under m-dependent attacks; >= the independent value."""
    if pcfg.m < 1:
        raise PreconditionError("m-dependent approximation requires m >= 1")
    if pcfg.N < GAUSSIAN_WARN_BELOW_N:
        warnings.warn(
            f"Gaussian approximation at N={pcfg.N} (< {GAUSSIAN_WARN_BELOW_N})",
            RegimeWarning,
            stacklevel=2,
        )
    mom = nu_m(pcfg.fading, pcfg.attack, pcfg.K, pcfg.m, pcfg.rho)
    return _gaussian_outage(pcfg.t, mom.mu, mom.nu, pcfg.N)


# ---------------------------------------------------------------------------
# moment generating function of Y and outage exponents
# ---------------------------------------------------------------------------


def _require_rayleigh(fading: FadingModel) -> RayleighFading:
    if not isinstance(fading, RayleighFading):
        raise UnsupportedModelError(
            f"compound MGF implemented for Rayleigh fading, got {type(fading).__name__}"
        )
    return fading


def mgf_Y(fading: FadingModel, attack: AttackModel, K: int, s):
    """Compound MGF of Y: sum_i w_i (1 - s/(K*rate))^(-i), for s < K*rate."""
    rayleigh = _require_rayleigh(fading)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr >= K * rayleigh.rate):
        raise DomainError(f"mgf_Y requires s < K*rate = {K * rayleigh.rate:g}")
    wv = block_weights(attack, K)
    base = 1.0 / (1.0 - s_arr / (K * rayleigh.rate))
    powers = np.arange(K + 1, dtype=float)
    vals = (wv.w * np.power(base[..., None], powers)).sum(axis=-1)
    return float(vals) if s_arr.ndim == 0 else vals


def _log_mgf_derivative(fading, attack, K, s: float) -> float:
    rayleigh = _require_rayleigh(fading)
    wv = block_weights(attack, K)
    scale = K * rayleigh.rate
    base = 1.0 / (1.0 - s / scale)
    i = np.arange(K + 1, dtype=float)
    m = float(np.dot(wv.w, base**i))
    dm = float(np.dot(wv.w * i / scale, base ** (i + 1.0)))
    return dm / m


def y_lower_quantile(fading: FadingModel, attack: AttackModel, K: int, level: float = 1e-3) -> float:
    """Quantile of Y at the given level; 0 whenever Pr(L = 0) >= level.

    For Rayleigh gains the partial sums are gamma distributed, so the CDF of Y
    is an exact mixture of regularized incomplete gamma functions.
    """
    rayleigh = _require_rayleigh(fading)
    wv = block_weights(attack, K)
    if wv.w0 >= level:
        return 0.0
    i = np.arange(1, K + 1)

    def cdf(y: float) -> float:
        return wv.w0 + float(np.dot(wv.w[1:], gammainc(i, K * rayleigh.rate * y)))

    lo, hi = 0.0, 1.0
    while cdf(hi) < level:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < level:
            lo = mid
        else:
            hi = mid
    return hi


def outage_exponent_indep(
    fading: FadingModel, attack: AttackModel, K: int, t: float
) -> ExponentResult:
    """Exact large-deviation outage exponent sup_{s<=0} { s t - log M_Y(s) }."""
    if t <= 0:
        raise DomainError(f"t must be > 0, got {t}")
    mom = y_moments(fading, attack, K)
    if t > mom.mu:
        raise OutOfRegimeError(f"t={t:g} exceeds mu_Y={mom.mu:g}; exponent is 0 beyond it")
    flagged = t < y_lower_quantile(fading, attack, K)
    if t == mom.mu:
        return ExponentResult(
            value=0.0, s_star=0.0, t=t, kind=ExponentKind.INDEPENDENT_LDP,
            below_support_quantile=flagged,
        )

    def objective(s: float) -> float:
        return s * t - math.log(mgf_Y(fading, attack, K, s))

    def slope(s: float) -> float:
        return t - _log_mgf_derivative(fading, attack, K, s)

    # the objective is concave: bracket the maximizer by growing the left end
    s_lo = -1.0
    while slope(s_lo) < 0.0:
        s_lo *= 2.0
        if s_lo < -1e6:
            warnings.warn("exponent bracket exceeded |s| = 1e6", RegimeWarning, stacklevel=2)
            break
    # golden-section search on [s_lo, 0]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = s_lo, 0.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > 1e-12 * max(1.0, abs(a)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = objective(d)
    s_star = 0.5 * (a + b)
    value = max(objective(s_star), 0.0)
    return ExponentResult(
        value=value, s_star=s_star, t=t, kind=ExponentKind.INDEPENDENT_LDP,
        below_support_quantile=flagged,
    )


def outage_exponent_mdep(
    fading: FadingModel, attack: AttackModel, K: int, m: int, rho: float, t: float
) -> ExponentResult:
    """Gaussian-tail outage exponent (mu_Y - t)^2 / (2 nu_m).

    This bounds the decay rate via the normal approximation and is accurate
    when t is well below mu_Y.  With m = 0 it reduces to the Gaussian-bound
    counterpart of the independent case, (mu_Y - t)^2 / (2 sigma_Y^2).
    """
    if t <= 0:
        raise DomainError(f"t must be > 0, got {t}")
    mom = nu_m(fading, attack, K, m, rho)
    if t >= mom.mu:
        raise OutOfRegimeError(f"t={t:g} is not below mu_Y={mom.mu:g}")
    value = (mom.mu - t) ** 2 / (2.0 * mom.nu)
    s_star = -(mom.mu - t) / mom.nu  # maximizer of the quadratic Legendre transform
    return ExponentResult(value=value, s_star=s_star, t=t, kind=ExponentKind.MDEP_GAUSSIAN_BOUND)
