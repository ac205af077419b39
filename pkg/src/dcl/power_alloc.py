"""Outage-minimizing power allocation for a fixed coding length.

Two convex surrogate programs are solved in the log-power domain with a
damped Newton barrier method (no external solver): the high-SNR Rayleigh
product form over the non-increasing cone, and the log-normal upper bound
with cumulative-log constraints that keep its objective convex.  A brute
grid search over the monotone budget simplex serves as the independent
oracle for both.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.special import ndtr

from .analytic_single import SingleChannelConfig
from .channel_model import (
    AttackModel,
    ExponentialAttack,
    IdenticalFading,
    LogNormalFading,
    PowerVector,
    RayleighFading,
    RngStream,
    WeightVector,
    block_weights,
)
from .errors import PreconditionError, UnsupportedModelError
from .monte_carlo import estimate_outage_single

_SQRT2PI = math.sqrt(2.0 * math.pi)


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max-iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolveReport:
    power: PowerVector | None
    objective: float
    iterations: int
    kkt_residual: float
    status: SolveStatus
    message: str = ""
    active: tuple[str, ...] = ()  # constraints at their boundary at the solution


@dataclass(frozen=True)
class HighSnrProgram:
    """Product-form outage surrogate: w0 + sum_j c_j / prod_{i<=j} P_i."""

    K: int
    R: float
    P: float
    weights: WeightVector
    rate: float = 1.0  # fading rate enters through the linearized CDF tail

    @classmethod
    def from_config(cls, cfg: SingleChannelConfig) -> "HighSnrProgram":
        if not isinstance(cfg.fading, RayleighFading):
            raise UnsupportedModelError("high-SNR program assumes Rayleigh fading")
        return cls(K=cfg.K, R=cfg.R, P=cfg.P, weights=block_weights(cfg.attack, cfg.K),
                   rate=cfg.fading.rate)

    @property
    def coefficients(self) -> np.ndarray:
        """c_j = w_j (rate * (e^{KR/j} - 1))^j, with the survivor weight at j = K."""
        c = np.empty(self.K)
        for j in range(1, self.K + 1):
            w = self.weights.w_survive if j == self.K else self.weights.w[j]
            c[j - 1] = w * (self.rate * (math.exp(self.K * self.R / j) - 1.0)) ** j
        return c

    def objective_at(self, p: np.ndarray) -> float:
        p = np.asarray(p, dtype=float)
        return float(self.weights.w0 + np.sum(self.coefficients / np.cumprod(p)))


def check_monotone_cone(power: PowerVector | np.ndarray) -> bool:
    """True when the power profile is non-increasing (up to 1e-9 slack)."""
    p = power.p if isinstance(power, PowerVector) else np.asarray(power, dtype=float)
    return bool(np.all(p[:-1] >= p[1:] - 1e-9))


# ---------------------------------------------------------------------------
# damped Newton barrier machinery (log-power domain)
# ---------------------------------------------------------------------------


def _suffix_matrix(coeffs: np.ndarray) -> np.ndarray:
    """H[i, k] = sum_{n >= max(i, k)} coeffs[n]; both surrogate Hessians have this form."""
    suffix = np.cumsum(coeffs[::-1])[::-1]
    idx = np.arange(coeffs.size)
    return suffix[np.maximum.outer(idx, idx)]


class _LogDomainProblem:
    """Convex objective plus barrier over {budget, linear constraints} in x = log P."""

    def __init__(self, budget: float, lin_A: np.ndarray, lin_b: np.ndarray):
        # linear constraints A @ x + b <= 0; budget constraint sum(e^x) <= budget
        self.budget = budget
        self.lin_A = lin_A
        self.lin_b = lin_b

    def f(self, x):  # overridden
        raise NotImplementedError

    def f_grad(self, x):
        raise NotImplementedError

    def f_hess(self, x):
        raise NotImplementedError

    def _slacks(self, x):
        ex = np.exp(x)
        budget_slack = self.budget - ex.sum()
        lin_slack = -(self.lin_A @ x + self.lin_b) if self.lin_A.size else np.empty(0)
        return ex, budget_slack, lin_slack

    def barrier_value(self, x):
        ex, bs, ls = self._slacks(x)
        if bs <= 0 or np.any(ls <= 0):
            return math.inf
        return -math.log(bs) - float(np.sum(np.log(ls)))

    def barrier_grad_hess(self, x):
        ex, bs, ls = self._slacks(x)
        grad = ex / bs
        hess = np.diag(ex) / bs + np.outer(ex, ex) / bs**2
        if self.lin_A.size:
            grad = grad + self.lin_A.T @ (1.0 / ls)
            hess = hess + (self.lin_A.T * (1.0 / ls**2)) @ self.lin_A
        return grad, hess

    def solve(self, x0: np.ndarray, mu_final: float = 1e-10) -> tuple[np.ndarray, int, bool]:
        x = x0.copy()
        total_iter = 0
        converged = True
        mu = 1.0
        while True:
            def F(z, mu=mu):
                b = self.barrier_value(z)
                return math.inf if not math.isfinite(b) else self.f(z) + mu * b

            inner_ok = False
            for _ in range(200):
                total_iter += 1
                bg, bh = self.barrier_grad_hess(x)
                g = self.f_grad(x) + mu * bg
                H = self.f_hess(x) + mu * bh
                try:
                    d = np.linalg.solve(H, -g)
                except np.linalg.LinAlgError:
                    d = np.linalg.solve(H + 1e-10 * np.eye(x.size), -g)
                decrement2 = float(-g @ d)
                if decrement2 <= 2e-14:
                    inner_ok = True
                    break
                # Armijo backtracking, factor 0.5, slope fraction 1e-4
                t = 1.0
                f0 = F(x)
                gd = float(g @ d)
                while F(x + t * d) > f0 + 1e-4 * t * gd:
                    t *= 0.5
                    if t < 1e-14:
                        break
                x = x + t * d
            converged = converged and inner_ok
            if mu <= mu_final:
                break
            mu *= 0.1
        return x, total_iter, converged


class _HighSnrLogProblem(_LogDomainProblem):
    def __init__(self, prog: HighSnrProgram):
        K = prog.K
        if K > 1:
            A = np.zeros((K - 1, K))
            for i in range(K - 1):
                A[i, i] = -1.0
                A[i, i + 1] = 1.0
            b = np.zeros(K - 1)
        else:
            A, b = np.empty((0, K)), np.empty(0)
        super().__init__(budget=K * prog.P, lin_A=A, lin_b=b)
        self.c = prog.coefficients

    def _tau(self, x):
        return self.c * np.exp(-np.cumsum(x))

    def f(self, x):
        return float(np.sum(self._tau(x)))

    def f_grad(self, x):
        tau = self._tau(x)
        return -np.cumsum(tau[::-1])[::-1]

    def f_hess(self, x):
        return _suffix_matrix(self._tau(x))


class _LogNormalLogProblem(_LogDomainProblem):
    def __init__(self, K: int, R: float, P: float, weights: WeightVector):
        # cumulative-log constraints: K R - sum_{i<=n} x_i <= 0 for every n
        A = -np.tril(np.ones((K, K)))
        b = np.full(K, K * R)
        super().__init__(budget=K * P, lin_A=A, lin_b=b)
        self.K, self.R = K, R
        w = weights.w[1:].copy()
        w[K - 1] = weights.w_survive
        self.wn = w
        self.sqrt_n = np.sqrt(np.arange(1, K + 1, dtype=float))

    def _z(self, x):
        return (self.K * self.R - np.cumsum(x)) / self.sqrt_n

    def f(self, x):
        return float(np.sum(self.wn * ndtr(self._z(x))))

    def f_grad(self, x):
        z = self._z(x)
        pdf = np.exp(-0.5 * z * z) / _SQRT2PI
        coeff = self.wn * pdf / self.sqrt_n
        return -np.cumsum(coeff[::-1])[::-1]

    def f_hess(self, x):
        z = self._z(x)
        pdf = np.exp(-0.5 * z * z) / _SQRT2PI
        kappa = self.wn * (-z) * pdf / self.sqrt_n**2
        # inside the constraint region z <= 0 so kappa >= 0 and the Hessian is PSD
        return _suffix_matrix(np.maximum(kappa, 0.0))


def _kkt_report(p: np.ndarray, grad_p: np.ndarray,
                constraints: list[tuple[str, np.ndarray, float]]):
    """Stationarity and complementary-slackness residual from NNLS multipliers.

    `constraints` holds (label, gradient, value) triples for g <= 0 written in
    P space; only near-active constraints receive multipliers.  Returns the
    residual and the labels of the active set.
    """
    active = [(name, g, v) for name, g, v in constraints if v > -1e-6]
    if not active:
        return float(np.linalg.norm(grad_p)), ()
    A = np.column_stack([g for _, g, _ in active])
    lam, stat = nnls(A, -grad_p)
    comp = max(abs(l * v) for l, (_, _, v) in zip(lam, active))
    return float(max(stat, comp)), tuple(name for name, _, _ in active)


def solve_high_snr_rayleigh(prog: HighSnrProgram) -> SolveReport:
    """Minimize the product-form surrogate over the budget and non-increasing cone."""
    K, P = prog.K, prog.P
    if K * P <= 0:
        return SolveReport(power=None, objective=math.inf, iterations=0,
                           kkt_residual=math.inf, status=SolveStatus.INFEASIBLE,
                           message="nonpositive power budget")
    problem = _HighSnrLogProblem(prog)
    # uniform start sits on the budget and ordering boundaries; nudge strictly inside
    ramp = 1.0 + 1e-4 * np.arange(K - 1, -1, -1, dtype=float)
    p0 = ramp * (K * P * (1.0 - 1e-3)) / ramp.sum()
    x, iters, converged = problem.solve(np.log(p0))
    p = np.exp(x)
    p *= (K * P) / p.sum()  # objective decreases in every coordinate: budget is tight
    grad = _high_snr_grad_p(prog, p)
    cons = [("budget", np.ones(K), float(p.sum() - K * P))]
    for i in range(K - 1):
        g = np.zeros(K)
        g[i], g[i + 1] = -1.0, 1.0
        cons.append((f"order[{i + 1}]", g, float(p[i + 1] - p[i])))
    kkt, active = _kkt_report(p, grad, cons)
    status = SolveStatus.OPTIMAL if converged and kkt <= 1e-7 else SolveStatus.MAX_ITER
    return SolveReport(power=PowerVector(K=K, p=p, P=P), objective=prog.objective_at(p),
                       iterations=iters, kkt_residual=kkt, status=status, active=active)


def _high_snr_grad_p(prog: HighSnrProgram, p: np.ndarray) -> np.ndarray:
    terms = prog.coefficients / np.cumprod(p)
    return -np.cumsum(terms[::-1])[::-1] / p


def lognormal_upper_objective(K: int, R: float, weights: WeightVector, p: np.ndarray) -> float:
    """Upper-bound objective w0 + sum_n w'_n Phi((KR - sum_{i<=n} log p_i)/sqrt(n))."""
    p = np.asarray(p, dtype=float)
    w = weights.w[1:].copy()
    w[K - 1] = weights.w_survive
    z = (K * R - np.cumsum(np.log(p))) / np.sqrt(np.arange(1, K + 1, dtype=float))
    return float(weights.w0 + np.sum(w * ndtr(z)))


def lognormal_min_budget(K: int, R: float) -> float:
    """Smallest total power admitting the cumulative-log constraints: e^{KR} + (K-1)."""
    return math.exp(K * R) + (K - 1.0)


def solve_lognormal_upper(cfg: SingleChannelConfig) -> SolveReport:
    """Minimize the log-normal outage upper bound inside its convexity region."""
    if not isinstance(cfg.fading, LogNormalFading):
        raise UnsupportedModelError("log-normal program assumes standard log-normal fading")
    K, R, P = cfg.K, cfg.R, cfg.P
    weights = block_weights(cfg.attack, K)
    need = lognormal_min_budget(K, R)
    if need >= K * P:
        return SolveReport(
            power=None, objective=math.inf, iterations=0, kkt_residual=math.inf,
            status=SolveStatus.INFEASIBLE,
            message=f"minimum-power certificate: e^(KR) + (K-1) = {need:.6g} >= K*P = {K * P:.6g}",
        )
    problem = _LogNormalLogProblem(K, R, P, weights)
    # strictly feasible start: x = (KR + d, d, ..., d) splits the budget slack
    delta = 0.5 * math.log(K * P / need)
    x0 = np.full(K, delta)
    x0[0] += K * R
    x, iters, converged = problem.solve(x0)
    p = np.exp(x)
    p *= (K * P) / p.sum()
    grad = _lognormal_grad_p(K, R, weights, p)
    cons = [("budget", np.ones(K), float(p.sum() - K * P))]
    logp = np.log(p)
    for n in range(1, K + 1):
        g = np.zeros(K)
        g[:n] = -1.0 / p[:n]
        cons.append((f"cumlog[{n}]", g, float(K * R - logp[:n].sum())))
    kkt, active = _kkt_report(p, grad, cons)
    status = SolveStatus.OPTIMAL if converged and kkt <= 1e-7 else SolveStatus.MAX_ITER
    return SolveReport(power=PowerVector(K=K, p=p, P=P),
                       objective=lognormal_upper_objective(K, R, weights, p),
                       iterations=iters, kkt_residual=kkt, status=status, active=active)


def _lognormal_grad_p(K, R, weights, p):
    w = weights.w[1:].copy()
    w[K - 1] = weights.w_survive
    sqrt_n = np.sqrt(np.arange(1, K + 1, dtype=float))
    z = (K * R - np.cumsum(np.log(p))) / sqrt_n
    pdf = np.exp(-0.5 * z * z) / _SQRT2PI
    coeff = w * pdf / sqrt_n
    return -np.cumsum(coeff[::-1])[::-1] / p


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


class BruteObjective(enum.Enum):
    HIGH_SNR = "high-snr"
    LOGNORMAL_UPPER = "lognormal-upper"
    MC_OUTAGE = "mc-outage"


def _monotone_simplex_points(K: int, total: float, step: float) -> np.ndarray:
    """Non-increasing K-tuples with the given sum, on a regular grid."""
    m = int(round(total / step))

    def rec(remaining: int, cap: int, depth: int):
        if depth == 1:
            if remaining <= cap:
                yield (remaining,)
            return
        lo = -(-remaining // depth)  # ceil: keep the profile non-increasing
        for v in range(lo, min(cap, remaining) + 1):
            for rest in rec(remaining - v, v, depth - 1):
                yield (v, *rest)

    pts = np.array(list(rec(m, m, K)), dtype=float) * step
    return pts


def brute_force_power(
    cfg: SingleChannelConfig,
    objective: BruteObjective,
    grid_step: float,
    trials: int = 100_000,
    seed: int = 0,
) -> SolveReport:
    """Exhaustive search over the monotone budget simplex; the solver oracle."""
    if cfg.K > 4:
        raise PreconditionError(f"brute force refused for K={cfg.K} > 4 (grid explosion)")
    pts = _monotone_simplex_points(cfg.K, cfg.K * cfg.P, grid_step)
    pts = pts[np.all(pts > 0, axis=1)]
    if objective is BruteObjective.HIGH_SNR:
        prog = HighSnrProgram.from_config(cfg)
        vals = prog.weights.w0 + np.sum(prog.coefficients / np.cumprod(pts, axis=1), axis=1)
    elif objective is BruteObjective.LOGNORMAL_UPPER:
        weights = block_weights(cfg.attack, cfg.K)
        w = weights.w[1:].copy()
        w[cfg.K - 1] = weights.w_survive
        sqrt_n = np.sqrt(np.arange(1, cfg.K + 1, dtype=float))
        z = (cfg.K * cfg.R - np.cumsum(np.log(pts), axis=1)) / sqrt_n
        vals = weights.w0 + np.sum(w * ndtr(z), axis=1)
    else:
        vals = np.array([
            estimate_outage_single(cfg, PowerVector(K=cfg.K, p=row, P=cfg.P), trials, seed).p_hat
            for row in pts
        ])
    best = int(np.argmin(vals))
    return SolveReport(
        power=PowerVector(K=cfg.K, p=pts[best], P=cfg.P),
        objective=float(vals[best]),
        iterations=pts.shape[0],
        kkt_residual=float("nan"),
        status=SolveStatus.OPTIMAL,
    )


# ---------------------------------------------------------------------------
# structural probes
# ---------------------------------------------------------------------------


def identical_fading_k1_check(
    fading: IdenticalFading,
    attack: AttackModel,
    R: float,
    P: float,
    M: int,
    trials: int = 100_000,
    seed: int = 0,
) -> bool:
    """Coupled-seed check that a single block beats any M-block split.

    Uses the same substreams for both estimates, so each trial shares its
    frame gain and attack time; dominance then holds pathwise.
    """
    if not isinstance(fading, IdenticalFading):
        raise PreconditionError("check requires IdenticalFading")
    if M < 2:
        raise PreconditionError(f"M must be >= 2, got {M}")
    cfg1 = SingleChannelConfig(K=1, R=R, P=P, fading=fading, attack=attack)
    est1 = estimate_outage_single(cfg1, PowerVector.uniform(1, P), trials, seed)
    cfgM = SingleChannelConfig(K=M, R=R, P=P, fading=fading, attack=attack)
    candidates = [PowerVector.uniform(M, P)]
    gen = RngStream(seed=seed, stream_id=999).generator()
    for _ in range(20):
        raw = np.sort(gen.random(M))[::-1]
        scale = M * P * (0.5 + 0.5 * gen.random())
        candidates.append(PowerVector(K=M, p=raw * scale / raw.sum(), P=P))
    for power in candidates:
        estM = estimate_outage_single(cfgM, power, trials, seed)
        slack = 3.0 * math.sqrt(est1.stderr**2 + estM.stderr**2)
        if est1.p_hat > estM.p_hat + slack:
            return False
    return True


@dataclass(frozen=True)
class HessianProbeResult:
    min_quadform_ratio: float
    psd: bool
    grad_rel_err: float


def hessian_psd_probe(
    prog: HighSnrProgram, point: PowerVector | np.ndarray,
    directions: int = 100, seed: int = 0,
) -> HessianProbeResult:
    """Finite-difference PSD probe of the product-form objective Hessian.

    Central differences with relative step 1e-4; PSD is declared when every
    random direction satisfies x'Hx >= -1e-6 |x|^2.  Also reports the worst
    relative disagreement between the analytic and finite-difference gradient.
    """
    p = point.p if isinstance(point, PowerVector) else np.asarray(point, dtype=float)
    if np.any(p <= 0):
        raise PreconditionError("probe point must be strictly positive")
    K = p.size

    def f(q):
        return float(np.sum(prog.coefficients / np.cumprod(q)))

    h = 1e-4 * p
    H = np.empty((K, K))
    for i in range(K):
        for k in range(i, K):
            if i == k:
                qp, qm = p.copy(), p.copy()
                qp[i] += h[i]
                qm[i] -= h[i]
                H[i, i] = (f(qp) - 2.0 * f(p) + f(qm)) / h[i] ** 2
            else:
                qpp, qpm, qmp, qmm = p.copy(), p.copy(), p.copy(), p.copy()
                qpp[[i, k]] += [h[i], h[k]]
                qpm[i] += h[i]
                qpm[k] -= h[k]
                qmp[i] -= h[i]
                qmp[k] += h[k]
                qmm[[i, k]] -= [h[i], h[k]]
                H[i, k] = H[k, i] = (f(qpp) - f(qpm) - f(qmp) + f(qmm)) / (4.0 * h[i] * h[k])
    grad_fd = np.empty(K)
    for i in range(K):
        qp, qm = p.copy(), p.copy()
        qp[i] += h[i]
        qm[i] -= h[i]
        grad_fd[i] = (f(qp) - f(qm)) / (2.0 * h[i])
    grad_an = _high_snr_grad_p(prog, p)
    grad_rel = float(np.max(np.abs(grad_fd - grad_an) / np.maximum(np.abs(grad_an), 1e-300)))
    gen = RngStream(seed=seed, stream_id=77).generator()
    dirs = gen.standard_normal((directions, K))
    ratios = np.einsum("ij,jk,ik->i", dirs, H, dirs) / np.einsum("ij,ij->i", dirs, dirs)
    min_ratio = float(ratios.min())
    return HessianProbeResult(min_quadform_ratio=min_ratio, psd=min_ratio >= -1e-6,
                              grad_rel_err=grad_rel)


# ---------------------------------------------------------------------------
# joint optimization over coding length and power
# ---------------------------------------------------------------------------


def joint_optimize(
    cfg_base: SingleChannelConfig,
    K_max: int,
    objective: BruteObjective = BruteObjective.HIGH_SNR,
    trials: int = 100_000,
    seed: int = 0,
) -> tuple[int, SolveReport]:
    """Solve the per-K program for each K and pick the K with smallest MC outage.

    The MC evaluation shares trials and seed across K; exact ties resolve to
    the smaller K (lower latency).
    """
    if K_max > 16:
        raise PreconditionError(f"K_max must be <= 16, got {K_max}")
    best = None
    for K in range(1, K_max + 1):
        cfg = SingleChannelConfig(K=K, R=cfg_base.R, P=cfg_base.P,
                                  fading=cfg_base.fading, attack=cfg_base.attack)
        if objective is BruteObjective.LOGNORMAL_UPPER:
            report = solve_lognormal_upper(cfg)
        elif objective is BruteObjective.HIGH_SNR:
            if isinstance(cfg.fading, IdenticalFading):
                base = cfg.fading.base
                if not isinstance(base, RayleighFading):
                    raise UnsupportedModelError("high-SNR program assumes Rayleigh gains")
                prog = HighSnrProgram(K=K, R=cfg.R, P=cfg.P,
                                      weights=block_weights(cfg.attack, K), rate=base.rate)
            else:
                prog = HighSnrProgram.from_config(cfg)
            report = solve_high_snr_rayleigh(prog)
        else:
            raise PreconditionError("joint_optimize expects a surrogate objective")
        if report.status is SolveStatus.INFEASIBLE:
            continue
        est = estimate_outage_single(cfg, report.power, trials, seed)
        if best is None or est.p_hat < best[0]:
            best = (est.p_hat, K, report)
    if best is None:
        return 0, SolveReport(power=None, objective=math.inf, iterations=0,
                              kkt_residual=math.inf, status=SolveStatus.INFEASIBLE,
                              message="no feasible coding length")
    return best[1], best[2]


class OptimizedPowerEvaluator:
    """Capacity-search evaluator that re-optimizes the power vector per (K, R)."""

    def __init__(self, fading, attack, trials: int, seed: int,
                 objective: BruteObjective = BruteObjective.HIGH_SNR):
        if objective not in (BruteObjective.HIGH_SNR, BruteObjective.LOGNORMAL_UPPER):
            raise PreconditionError("evaluator expects a surrogate objective")
        self.fading, self.attack = fading, attack
        self.trials, self.seed = trials, seed
        self.objective = objective
        self.mu_alpha = fading.mean

    def outage(self, K: int, R: float, P: float) -> tuple[float, PowerVector]:
        cfg = SingleChannelConfig(K=K, R=R, P=P, fading=self.fading, attack=self.attack)
        if self.objective is BruteObjective.LOGNORMAL_UPPER:
            report = solve_lognormal_upper(cfg)
        else:
            report = solve_high_snr_rayleigh(HighSnrProgram.from_config(cfg))
        if report.status is SolveStatus.INFEASIBLE:
            # rate unreachable within the convexity region: treat as certain outage
            return 1.0, PowerVector.uniform(K, P)
        est = estimate_outage_single(cfg, report.power, self.trials, self.seed)
        return est.p_hat, report.power
