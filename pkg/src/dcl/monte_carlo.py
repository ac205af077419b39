"""Monte Carlo outage estimation and the outage-capacity search.

Trials are partitioned into fixed-size chunks by trial index; chunk c draws
from the Philox substream (seed, stream_id, c), so estimates are bit-identical
for a given seed no matter how many worker threads process the chunks.  Worker
count is capped by the DCL_THREADS environment variable (default: machine
parallelism).

Per-chunk draw order is fixed: attack uniforms first (or latent normals for
the dependent-attack sampler), then gain uniforms.
"""

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import multivariate_normal

from . import _kernels
from .channel_model import (
    AttackModel,
    ExponentialAttack,
    FadingModel,
    IdenticalFading,
    NeverAttack,
    PowerVector,
    RngStream,
    surviving_from_uniforms,
    surviving_moments,
)
from .analytic_single import RegimeWarning, SingleChannelConfig
from .errors import CalibrationError, PreconditionError
from .parallel_asym import ParallelConfig

CHUNK_SINGLE = 16384
CHUNK_PARALLEL = 2048

CALIBRATION_TOL = 0.02


def worker_count() -> int:
    raw = os.environ.get("DCL_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise PreconditionError(f"DCL_THREADS must be an integer, got {raw!r}")
        if n < 1:
            raise PreconditionError(f"DCL_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    stderr: float
    trials: int
    seed: int
    realized_corr: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.p_hat <= 1.0):
            raise PreconditionError(f"p_hat must lie in [0, 1], got {self.p_hat}")


def _estimate(count: int, trials: int, seed: int, realized_corr=None) -> OutageEstimate:
    p = count / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    return OutageEstimate(p_hat=p, stderr=se, trials=trials, seed=seed,
                          realized_corr=realized_corr)


def _chunks(trials: int, chunk: int):
    for idx, start in enumerate(range(0, trials, chunk)):
        yield idx, start, min(chunk, trials - start)


def _run_chunks(trials: int, chunk: int, work):
    """Apply `work(chunk_idx, start, size)` over all chunks on a thread pool.

    Results are reduced in chunk order, so the reduction is independent of
    scheduling; chunk outputs must not share mutable state.
    """
    jobs = list(_chunks(trials, chunk))
    workers = min(worker_count(), len(jobs)) or 1
    if workers == 1:
        return [work(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: work(*job), jobs))


def _frame_gains(fading: FadingModel, gen: np.random.Generator, size: int, K: int) -> np.ndarray:
    if isinstance(fading, IdenticalFading):
        g = fading.gains_from_uniforms(gen.random((size, 1)))
        return np.ascontiguousarray(np.broadcast_to(g, (size, K)))
    return fading.gains_from_uniforms(gen.random((size, K)))


# ---------------------------------------------------------------------------
# single channel
# ---------------------------------------------------------------------------


def rate_samples_single(
    cfg: SingleChannelConfig, power: PowerVector, trials: int, seed: int, stream_id: int = 0
) -> np.ndarray:
    """Per-trial achieved rate (1/K) sum_{i<=L} log(1 + gain_i p_i)."""
    if power.K != cfg.K:
        raise PreconditionError(f"power has K={power.K}, config has K={cfg.K}")
    if power.p.sum() > cfg.K * cfg.P + 1e-9:
        raise PreconditionError(
            f"budget violated: sum(p)={power.p.sum():.6g} > K*P={cfg.K * cfg.P:.6g}"
        )
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    rng = RngStream(seed=seed, stream_id=stream_id)
    out = np.empty(trials)
    p = np.ascontiguousarray(power.p)

    def work(idx, start, size):
        gen = rng.substream(idx)
        u_att = gen.random(size)
        L = surviving_from_uniforms(cfg.attack, cfg.K, u_att)
        gains = _frame_gains(cfg.fading, gen, size, cfg.K)
        out[start:start + size] = _kernels.mi_trials(gains, L, p)
        return None

    _run_chunks(trials, CHUNK_SINGLE, work)
    return out


def estimate_outage_single(
    cfg: SingleChannelConfig,
    power: PowerVector,
    trials: int,
    seed: int,
    stream_id: int = 0,
) -> OutageEstimate:
    """Fraction of trials whose achieved rate falls below the target R."""
    rates = rate_samples_single(cfg, power, trials, seed, stream_id)
    return _estimate(int(np.count_nonzero(rates < cfg.R)), trials, seed)


def repetition_equivalence_check(
    cfg: SingleChannelConfig, trials: int, seed: int
) -> tuple[OutageEstimate, OutageEstimate]:
    """Outage of per-block coding vs repetition on the same draws (coupled)."""
    power = float(cfg.P)
    rng = RngStream(seed=seed)
    coded = np.empty(trials)
    rep = np.empty(trials)

    def work(idx, start, size):
        gen = rng.substream(idx)
        u_att = gen.random(size)
        L = surviving_from_uniforms(cfg.attack, cfg.K, u_att)
        gains = _frame_gains(cfg.fading, gen, size, cfg.K)
        mi_coded, mi_rep = _kernels.repetition_pair(gains, L, power)
        coded[start:start + size] = mi_coded
        rep[start:start + size] = mi_rep
        return None

    _run_chunks(trials, CHUNK_SINGLE, work)
    p_coded = _estimate(int(np.count_nonzero(coded < cfg.R)), trials, seed)
    p_rep = _estimate(int(np.count_nonzero(rep < cfg.R)), trials, seed)
    return p_coded, p_rep


# ---------------------------------------------------------------------------
# parallel sub-channels
# ---------------------------------------------------------------------------


def estimate_outage_parallel(pcfg: ParallelConfig, trials: int, seed: int) -> OutageEstimate:
    """Outage of N sub-channels under independent attacks, uniform power P/N each."""
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    rng = RngStream(seed=seed)
    p_sub = pcfg.P / pcfg.N
    counts = _run_chunks(trials, CHUNK_PARALLEL, _IndependentParallelChunk(pcfg, rng, p_sub))
    return _estimate(int(sum(counts)), trials, seed)


class _IndependentParallelChunk:
    def __init__(self, pcfg: ParallelConfig, rng: RngStream, p_sub: float):
        self.pcfg, self.rng, self.p_sub = pcfg, rng, p_sub

    def __call__(self, idx, start, size):
        pcfg = self.pcfg
        gen = self.rng.substream(idx)
        u_att = gen.random((size, pcfg.N))
        L = surviving_from_uniforms(pcfg.attack, pcfg.K, u_att)
        gains = _parallel_gains(pcfg, gen, size)
        rate = _kernels.parallel_rate_trials(gains, L, self.p_sub)
        return int(np.count_nonzero(rate < pcfg.R))


def _parallel_gains(pcfg: ParallelConfig, gen: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(pcfg.fading, IdenticalFading):
        g = pcfg.fading.gains_from_uniforms(gen.random((size, pcfg.N, 1)))
        return np.ascontiguousarray(np.broadcast_to(g, (size, pcfg.N, pcfg.K)))
    return pcfg.fading.gains_from_uniforms(gen.random((size, pcfg.N, pcfg.K)))


# ---------------------------------------------------------------------------
# m-dependent attacks via a Gaussian copula over attack times
# ---------------------------------------------------------------------------


def max_banded_latent_correlation(m: int) -> float:
    """Largest off-diagonal value keeping the banded Toeplitz correlation PSD.

    The matrix is PSD for every N when its symbol 1 + 2 r sum_{h<=m} cos(h w)
    stays nonnegative; for m = 1 this gives the classical limit 1/2.
    """
    if m < 1:
        raise PreconditionError("banded correlation needs m >= 1")
    w = np.linspace(0.0, math.pi, 20001)
    s = np.zeros_like(w)
    for h in range(1, m + 1):
        s += np.cos(h * w)
    worst = -s.min()
    if worst <= 0:
        return 1.0
    return float(1.0 / (2.0 * worst))


def _integer_crossing_levels(attack: AttackModel, K: int) -> np.ndarray:
    """Latent-normal thresholds z_k with {T >= k} = {Z >= z_k}, k = 1..K."""
    if isinstance(attack, NeverAttack):
        raise CalibrationError("surviving-block count is degenerate under NeverAttack",
                               achieved=float("nan"), latent=0.0)
    if not isinstance(attack, ExponentialAttack):
        raise CalibrationError(
            f"copula calibration needs a continuous attack law, got {type(attack).__name__}",
            achieved=float("nan"), latent=0.0,
        )
    g = attack.cdf(np.arange(1, K + 1, dtype=float))
    return ndtri(g)


def latent_to_block_correlation(attack: AttackModel, K: int, rho_z: float) -> float:
    """corr(L_i, L_j) induced by latent correlation rho_z, computed exactly.

    L = sum_{k=1..K} 1{Z >= z_k}, so the cross moment is a K x K sum of
    bivariate normal survival probabilities.
    """
    z = _integer_crossing_levels(attack, K)
    mu_l, var_l = surviving_moments(attack, K)
    if var_l <= 0:
        raise CalibrationError("surviving-block count has zero variance",
                               achieved=float("nan"), latent=rho_z)
    if rho_z == 0.0:
        return 0.0
    mvn = multivariate_normal(mean=[0.0, 0.0], cov=[[1.0, rho_z], [rho_z, 1.0]])
    a, b = np.meshgrid(z, z, indexing="ij")
    joint = mvn.cdf(np.column_stack([a.ravel(), b.ravel()]))
    survival = 1.0 - ndtr(a.ravel()) - ndtr(b.ravel()) + joint
    return (float(survival.sum()) - mu_l**2) / var_l


@dataclass(frozen=True)
class CopulaCalibration:
    rho_target: float
    rho_z: float
    achieved: float
    feasible_max: float
    ok: bool


@lru_cache(maxsize=64)
def calibrate_latent_correlation(
    attack: AttackModel, K: int, m: int, rho_target: float
) -> CopulaCalibration:
    """Find the latent correlation whose induced corr(L_i, L_j) matches rho_target.

    The banded latent matrix must stay PSD, which caps the achievable block
    correlation; when the target is out of reach the calibration reports the
    best achievable value with ok=False.
    """
    if rho_target == 0.0:
        return CopulaCalibration(rho_target, 0.0, 0.0, max_banded_latent_correlation(m), True)
    rz_max = max_banded_latent_correlation(m) * (1.0 - 1e-9)
    best = latent_to_block_correlation(attack, K, rz_max)
    if best < rho_target - CALIBRATION_TOL:
        return CopulaCalibration(rho_target, rz_max, best, rz_max, False)
    lo, hi = 0.0, rz_max
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if latent_to_block_correlation(attack, K, mid) < rho_target:
            lo = mid
        else:
            hi = mid
    rho_z = 0.5 * (lo + hi)
    achieved = latent_to_block_correlation(attack, K, rho_z)
    return CopulaCalibration(rho_target, rho_z, achieved,
                             max_banded_latent_correlation(m), True)


def _banded_cholesky(N: int, m: int, rho_z: float) -> np.ndarray:
    C = np.eye(N)
    for h in range(1, m + 1):
        idx = np.arange(N - h)
        C[idx, idx + h] = rho_z
        C[idx + h, idx] = rho_z
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        # right at the PSD boundary rounding can tip the matrix; nudge back
        return np.linalg.cholesky(C + 1e-10 * np.eye(N))


def estimate_outage_parallel_mdep(
    pcfg: ParallelConfig,
    trials: int,
    seed: int,
    on_calibration_failure: str = "warn",
) -> OutageEstimate:
    """Outage under stationary m-dependent attacks with banded correlation rho.

    Attack times are coupled through a Gaussian copula whose latent banded
    correlation is calibrated so that corr(L_i, L_{i+1}) matches pcfg.rho.
    A 1-dependent stationary sequence cannot exceed lag-1 correlation 1/2
    (spectral positivity), so large targets are unreachable; by default the
    sampler then proceeds at the maximum achievable correlation and reports
    the realized value, while on_calibration_failure="raise" surfaces a
    CalibrationError carrying the achievable value instead.
    """
    if pcfg.m < 1:
        raise PreconditionError("m-dependent sampling requires m >= 1")
    if on_calibration_failure not in ("warn", "raise"):
        raise PreconditionError("on_calibration_failure must be 'warn' or 'raise'")
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    cal = calibrate_latent_correlation(pcfg.attack, pcfg.K, pcfg.m, pcfg.rho)
    if not cal.ok:
        msg = (
            f"target corr(L_i, L_i+1)={pcfg.rho:g} unreachable for m={pcfg.m}; "
            f"best achievable is {cal.achieved:.4f} at latent {cal.rho_z:.4f}"
        )
        if on_calibration_failure == "raise":
            raise CalibrationError(msg, achieved=cal.achieved, latent=cal.rho_z)
        warnings.warn(msg, RegimeWarning, stacklevel=2)

    rng = RngStream(seed=seed)
    chol = _banded_cholesky(pcfg.N, pcfg.m, cal.rho_z)
    p_sub = pcfg.P / pcfg.N
    results = _run_chunks(trials, CHUNK_PARALLEL, _MdepParallelChunk(pcfg, rng, p_sub, chol))
    count = sum(r[0] for r in results)
    # pooled lag-1 sample correlation of the generated L sequence
    n_x = sum(r[1] for r in results)
    s_x = sum(r[2] for r in results)
    s_xx = sum(r[3] for r in results)
    n_pair = sum(r[4] for r in results)
    s_pair = sum(r[5] for r in results)
    mean = s_x / n_x
    var = s_xx / n_x - mean**2
    realized = float((s_pair / n_pair - mean**2) / var) if var > 0 else float("nan")
    return _estimate(int(count), trials, seed, realized_corr=realized)


class _MdepParallelChunk:
    def __init__(self, pcfg, rng, p_sub, chol):
        self.pcfg, self.rng, self.p_sub, self.chol = pcfg, rng, p_sub, chol

    def __call__(self, idx, start, size):
        pcfg = self.pcfg
        gen = self.rng.substream(idx)
        z = gen.standard_normal((size, pcfg.N)) @ self.chol.T
        T = pcfg.attack.inverse_cdf(ndtr(z))
        L = np.minimum(np.floor(T), float(pcfg.K)).astype(np.int64)
        gains = _parallel_gains(pcfg, gen, size)
        rate = _kernels.parallel_rate_trials(gains, L, self.p_sub)
        Lf = L.astype(float)
        return (
            int(np.count_nonzero(rate < pcfg.R)),
            Lf.size,
            float(Lf.sum()),
            float((Lf * Lf).sum()),
            Lf[:, :-1].size,
            float((Lf[:, :-1] * Lf[:, 1:]).sum()),
        )


# ---------------------------------------------------------------------------
# outage capacity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapacityResult:
    C_out: float
    K_star: int
    power: PowerVector
    eta: float
    outage: float
    capped: bool
    per_k: tuple[tuple[int, float], ...]


class UniformPowerEvaluator:
    """MC outage under uniform power; caches per-K sorted rate samples.

    With a fixed seed the empirical outage is a step function of R, so all
    rates for one K can be re-thresholded without re-simulating.
    """

    def __init__(self, fading: FadingModel, attack: AttackModel, trials: int, seed: int):
        self.fading, self.attack = fading, attack
        self.trials, self.seed = trials, seed
        self.mu_alpha = fading.mean
        self._cache: dict[tuple[int, float], np.ndarray] = {}

    def outage(self, K: int, R: float, P: float) -> tuple[float, PowerVector]:
        power = PowerVector.uniform(K, P)
        key = (K, P)
        if key not in self._cache:
            cfg = SingleChannelConfig(K=K, R=1.0, P=P, fading=self.fading, attack=self.attack)
            rates = rate_samples_single(cfg, power, self.trials, self.seed)
            self._cache[key] = np.sort(rates)
        rates = self._cache[key]
        p_hat = np.searchsorted(rates, R, side="left") / self.trials
        return float(p_hat), power


def outage_capacity_search(
    P: float,
    eta: float,
    K_max: int,
    evaluator,
    tol: float = 1e-3,
) -> CapacityResult:
    """Largest rate with outage below eta, maximized over K (Definition-style search).

    `evaluator.outage(K, R, P)` must return (outage estimate, power vector) and
    be non-decreasing in R for fixed (K, P, seed); bisection then brackets the
    largest R with outage < eta to within tol.
    """
    if not (0.0 < eta <= 1.0):
        raise PreconditionError(f"eta must lie in (0, 1], got {eta}")
    if K_max < 1:
        raise PreconditionError("K_max must be >= 1")
    best = None
    per_k = []
    for K in range(1, K_max + 1):
        r_hi = K * math.log(1.0 + evaluator.mu_alpha * P * 10.0)
        if eta >= 1.0:
            # vacuous constraint: report the cap and flag it
            p, power = evaluator.outage(K, r_hi, P)
            per_k.append((K, r_hi))
            if best is None or r_hi > best[0]:
                best = (r_hi, K, power, p, True)
            continue
        p_lo, power_lo = evaluator.outage(K, tol, P)
        if p_lo >= eta:
            per_k.append((K, 0.0))
            if best is None:
                best = (0.0, K, power_lo, p_lo, False)
            continue
        p_hi, power_hi = evaluator.outage(K, r_hi, P)
        if p_hi < eta:
            per_k.append((K, r_hi))
            if best is None or r_hi > best[0]:
                best = (r_hi, K, power_hi, p_hi, True)
            continue
        lo, hi = tol, r_hi
        p_best, power_best = p_lo, power_lo
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            p_mid, power_mid = evaluator.outage(K, mid, P)
            if p_mid < eta:
                lo, p_best, power_best = mid, p_mid, power_mid
            else:
                hi = mid
        per_k.append((K, lo))
        if best is None or lo > best[0]:
            best = (lo, K, power_best, p_best, False)
    C, K_star, power, outage, capped = best
    return CapacityResult(
        C_out=C, K_star=K_star, power=power, eta=eta, outage=outage,
        capped=capped, per_k=tuple(per_k),
    )
