"""Closed-form outage quantities for a single attacked link under uniform power.

Covers the exact single-block outage, lower/upper bounds for general fading,
the high-SNR Rayleigh approximation together with its real-valued minimizer
over the coding length, and the low-SNR threshold shared by per-block coding
and repetition.
"""

import math
import warnings
from dataclasses import dataclass

from .channel_model import (
    AttackModel,
    ExponentialAttack,
    FadingModel,
    RayleighFading,
    block_weights,
)
from .errors import PreconditionError, UnsupportedModelError

HIGH_SNR_WARN_BELOW = 100.0  # 20 dB, the smallest power the approximation targets


class RegimeWarning(UserWarning):
    """Raised when an approximation is evaluated outside its comfortable regime."""


@dataclass(frozen=True)
class SingleChannelConfig:
    K: int
    R: float
    P: float
    fading: FadingModel
    attack: AttackModel

    def __post_init__(self):
        if self.K < 1:
            raise PreconditionError(f"K must be >= 1, got {self.K}")
        if not self.R > 0:
            raise PreconditionError(f"R must be > 0, got {self.R}")
        if not self.P > 0:
            raise PreconditionError(f"P must be > 0, got {self.P}")


@dataclass(frozen=True)
class HighSnrSummary:
    """Closed-form coding-length optimum in the high-SNR Rayleigh regime."""

    beta: float
    c: float
    xi: float
    K_real: float
    K_int: int
    interior: bool  # False when the log argument is <= 1 and K_int falls back to 1


def outage_lower_bound(cfg: SingleChannelConfig) -> float:
    """Lower bound on outage under uniform power P."""
    wv = block_weights(cfg.attack, cfg.K)
    F = cfg.fading.cdf
    total = wv.w0
    for i in range(1, cfg.K):
        total += float(F((math.exp(cfg.K * cfg.R / i) - 1.0) / cfg.P)) ** i * wv.w[i]
    total += float(F((math.exp(cfg.R) - 1.0) / cfg.P)) ** cfg.K * wv.w_survive
    return min(total, 1.0)


def outage_upper_bound(cfg: SingleChannelConfig) -> float:
    """Upper bound on outage under uniform power P."""
    wv = block_weights(cfg.attack, cfg.K)
    F = float(cfg.fading.cdf((math.exp(cfg.K * cfg.R) - 1.0) / cfg.P))
    total = wv.w0
    for i in range(1, cfg.K):
        total += F**i * wv.w[i]
    total += F**cfg.K * wv.w_survive
    return min(total, 1.0)


def exact_outage_k1(cfg: SingleChannelConfig) -> float:
    """Exact outage for K = 1: attack in the first block, or the lone block fades out."""
    if cfg.K != 1:
        raise PreconditionError(f"exact form requires K=1, got K={cfg.K}")
    wv = block_weights(cfg.attack, 1)
    F1 = float(cfg.fading.cdf((math.exp(cfg.R) - 1.0) / cfg.P))
    return wv.w0 + F1 * wv.w_survive


def low_snr_threshold(cfg: SingleChannelConfig) -> float:
    """Common gain-sum threshold K*R/P shared by per-block coding and repetition."""
    return cfg.K * cfg.R / cfg.P


def _require_high_snr_models(cfg: SingleChannelConfig) -> tuple[float, float]:
    """Return (attack rate, effective power P/rate_alpha) or raise."""
    if not isinstance(cfg.fading, RayleighFading):
        raise UnsupportedModelError(
            f"high-SNR form needs Rayleigh fading, got {type(cfg.fading).__name__}"
        )
    if not isinstance(cfg.attack, ExponentialAttack):
        raise UnsupportedModelError(
            f"high-SNR form needs an exponential attack, got {type(cfg.attack).__name__}"
        )
    # the exponential tail enters through F(x) ~ rate*x, i.e. through P/rate
    return cfg.attack.rate, cfg.P / cfg.fading.rate


def high_snr_params(cfg: SingleChannelConfig) -> tuple[float, float, float, float]:
    """(lambda, beta, c, xi) for the high-SNR Rayleigh/exponential closed forms."""
    lam, p_eff = _require_high_snr_models(cfg)
    beta = math.exp(-lam)
    c = 1.0 - beta
    xi = c * (beta / p_eff) / (1.0 - beta / p_eff)
    return lam, beta, c, xi


def high_snr_outage(cfg: SingleChannelConfig) -> float:
    """High-SNR outage approximation; valid for K >= 2, may exceed 1 far outside it."""
    lam, p_eff = _require_high_snr_models(cfg)
    if cfg.P < HIGH_SNR_WARN_BELOW:
        warnings.warn(
            f"high-SNR approximation evaluated at P={cfg.P:g} (< {HIGH_SNR_WARN_BELOW:g})",
            RegimeWarning,
            stacklevel=2,
        )
    _, _, c, xi = high_snr_params(cfg)
    w0 = 1.0 - math.exp(-lam)
    return xi * math.exp(cfg.K * cfg.R) + (p_eff * math.exp(lam - cfg.R)) ** -cfg.K + w0


def high_snr_outage_geometric(cfg: SingleChannelConfig) -> float:
    """High-SNR outage with the full geometric sum kept; exact drop-in at K = 1."""
    lam, p_eff = _require_high_snr_models(cfg)
    beta = math.exp(-lam)
    c = 1.0 - beta
    r = beta / p_eff
    geo = math.exp(cfg.K * cfg.R) * c * (r - r**cfg.K) / (1.0 - r)
    tail = math.exp(-lam * cfg.K) * math.exp(cfg.K * cfg.R) / p_eff**cfg.K
    return geo + tail + c


def high_snr_objective(cfg: SingleChannelConfig, K: int) -> float:
    """Outage objective used when scanning integer K.

    The truncated form is invalid at K = 1 (the dropped geometric terms are
    not negligible there), so the full geometric sum is used for that point.
    """
    sub = SingleChannelConfig(K=K, R=cfg.R, P=cfg.P, fading=cfg.fading, attack=cfg.attack)
    if K == 1:
        return high_snr_outage_geometric(sub)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        return high_snr_outage(sub)


def optimal_k_high_snr(cfg: SingleChannelConfig) -> HighSnrSummary:
    """Closed-form real minimizer K* of the high-SNR outage, and its integer pick."""
    lam, p_eff = _require_high_snr_models(cfg)
    _, beta, c, xi = high_snr_params(cfg)
    denom = lam + math.log(p_eff)
    numer = denom - cfg.R
    if numer <= xi * cfg.R:
        # no interior minimum: the continuous objective is increasing from K = 0+
        return HighSnrSummary(beta=beta, c=c, xi=xi, K_real=0.0, K_int=1, interior=False)
    k_real = math.log(numer / (xi * cfg.R)) / denom
    lo = max(1, math.floor(k_real))
    hi = max(1, math.ceil(k_real))
    candidates = sorted({lo, hi})
    # ties resolve to the smaller K (lower latency)
    best = min(candidates, key=lambda k: (high_snr_objective(cfg, k), k))
    return HighSnrSummary(beta=beta, c=c, xi=xi, K_real=k_real, K_int=best, interior=True)
