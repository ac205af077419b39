"""Experiment runner: dispatches to the analysis modules and writes CSV curves.

Commands: single-bounds, optimal-k, power-opt, capacity, mc, parallel,
exponent, reproduce-fig.  Parameters come from flags, optionally seeded by a
flat `key = value` config file (flags win).  Output is CSV with '#'-prefixed
metadata lines recording the full effective config, the seed, and the
artifact version, so a file can always be re-run exactly.

Exit codes: 0 success, 2 config error, 3 infeasible program, 4 model/domain
error.  DCL_THREADS caps Monte Carlo worker threads (results do not depend
on it); DCL_DISABLE_NUMBA=1 forces the pure-numpy kernels.
"""

import argparse
import sys
import warnings

import numpy as np

from . import __version__
from .analytic_single import (
    SingleChannelConfig,
    high_snr_outage,
    optimal_k_high_snr,
    outage_lower_bound,
    outage_upper_bound,
)
from .channel_model import (
    ExponentialAttack,
    IdenticalFading,
    LogNormalFading,
    NeverAttack,
    PowerVector,
    RayleighFading,
)
from .errors import (
    CalibrationError,
    DomainError,
    ModelError,
    OutOfRegimeError,
    PreconditionError,
    UnsupportedModelError,
)
from .monte_carlo import (
    UniformPowerEvaluator,
    estimate_outage_parallel,
    estimate_outage_parallel_mdep,
    estimate_outage_single,
    outage_capacity_search,
)
from .parallel_asym import (
    ParallelConfig,
    gaussian_outage_indep,
    gaussian_outage_mdep,
    outage_exponent_indep,
    outage_exponent_mdep,
    y_moments,
)
from .power_alloc import (
    BruteObjective,
    HighSnrProgram,
    OptimizedPowerEvaluator,
    SolveStatus,
    solve_high_snr_rayleigh,
    solve_lognormal_upper,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_MODEL = 4


class ConfigError(Exception):
    pass


class InfeasibleExit(Exception):
    pass


# ---------------------------------------------------------------------------
# parameter handling
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows, meta, omit_version=False):
    lines = []
    if not omit_version:
        lines.append(f"# dcl_version = {__version__}")
    for key, value in meta.items():
        lines.append(f"# {key} = {_fmt(value)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_gnuplot(path, csv_path, header, title):
    cols = ", ".join(
        f'"{csv_path}" using 1:{i} with linespoints title "{name}"'
        for i, name in enumerate(header[1:], start=2)
    )
    text = (
        "set datafile separator ','\n"
        "set datafile commentschars '#'\n"
        f"set xlabel '{header[0]}'\n"
        f"set title '{title}'\n"
        f"plot {cols}\n"
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _load_config_file(path, valid_keys):
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                key = key.replace("-", "_")
                if key not in valid_keys:
                    raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
                values[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    return values


def _resolve(args):
    """Overlay config-file values onto flags the user did not set."""
    subparser = args._subparser
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    if getattr(args, "config", None):
        file_values = _load_config_file(args.config, set(actions))
        for key, raw in file_values.items():
            if getattr(args, key) is not None:
                continue  # explicit flags win
            action = actions[key]
            if isinstance(action, argparse._StoreTrueAction):
                setattr(args, key, raw.strip().lower() in ("1", "true", "yes"))
            else:
                typ = action.type or str
                try:
                    setattr(args, key, typ(raw))
                except ValueError:
                    raise ConfigError(f"config key '{key}': cannot parse {raw!r}")
    return args


def _power_linear(args, default_db=None, default_linear=None):
    if getattr(args, "P", None) is not None and getattr(args, "P_dB", None) is not None:
        raise ConfigError("give either --P or --P-dB, not both")
    if getattr(args, "P", None) is not None:
        return float(args.P)
    if getattr(args, "P_dB", None) is not None:
        return 10.0 ** (float(args.P_dB) / 10.0)
    if default_linear is not None:
        return float(default_linear)
    if default_db is not None:
        return 10.0 ** (float(default_db) / 10.0)
    raise ConfigError("a power level is required (--P or --P-dB)")


def _attack(args, default_inv_lambda):
    kind = getattr(args, "attack", None) or "exponential"
    if kind == "never":
        return NeverAttack()
    if kind != "exponential":
        raise ConfigError(f"unknown attack model '{kind}'")
    inv = args.inv_lambda if args.inv_lambda is not None else default_inv_lambda
    if inv is None or inv <= 0:
        raise ConfigError("--inv-lambda must be positive")
    return ExponentialAttack(rate=1.0 / inv)


def _fading(args):
    kind = getattr(args, "fading", None) or "rayleigh"
    rate = getattr(args, "fading_rate", None)
    rate = 1.0 if rate is None else float(rate)
    if kind == "rayleigh":
        return RayleighFading(rate=rate)
    if kind == "lognormal":
        return LogNormalFading()
    if kind == "identical-rayleigh":
        return IdenticalFading(RayleighFading(rate=rate))
    raise ConfigError(f"unknown fading model '{kind}'")


def _parse_float_list(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list '{text}'")


def _parse_int_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list '{text}'")


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _meta(args, **extra):
    meta = {"command": args.command}
    for key in sorted(vars(args)):
        if key in ("command", "config", "func", "out", "gnuplot", "omit_version",
                   "_subparser"):
            continue
        value = getattr(args, key)
        if value is not None:
            meta[key] = value
    meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_single_bounds(args):
    k_max = args.K_max if args.K_max is not None else 15
    _require(k_max >= 1, "--K-max must be >= 1")
    R = args.R if args.R is not None else 1.0
    _require(R > 0, "--R must be > 0")
    P = _power_linear(args, default_db=20.0)
    attack = _attack(args, default_inv_lambda=10.0)
    fading = _fading(args)
    analytic = isinstance(fading, RayleighFading) and isinstance(attack, ExponentialAttack)
    header = ["K", "lower", "upper"] + (["high_snr"] if analytic else [])
    rows = []
    for K in range(1, k_max + 1):
        cfg = SingleChannelConfig(K=K, R=R, P=P, fading=fading, attack=attack)
        row = [K, outage_lower_bound(cfg), outage_upper_bound(cfg)]
        if analytic:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                row.append(high_snr_outage(cfg))
        rows.append(row)
    out = args.out or "single_bounds.csv"
    write_csv(out, header, rows, _meta(args, P_linear=P), args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "outage vs coding length")
    return EXIT_OK


def cmd_optimal_k(args):
    R = args.R if args.R is not None else 1.0
    P = _power_linear(args, default_db=30.0)
    attack = _attack(args, default_inv_lambda=10.0)
    fading = _fading(args)
    cfg = SingleChannelConfig(K=1, R=R, P=P, fading=fading, attack=attack)
    summary = optimal_k_high_snr(cfg)
    header = ["K_real", "K_int", "beta", "c", "xi", "interior"]
    rows = [[summary.K_real, summary.K_int, summary.beta, summary.c, summary.xi,
             int(summary.interior)]]
    out = args.out or "optimal_k.csv"
    write_csv(out, header, rows, _meta(args, P_linear=P), args.omit_version)
    return EXIT_OK


def cmd_power_opt(args):
    K = args.K if args.K is not None else 2
    _require(K >= 1, "--K must be >= 1")
    R = args.R if args.R is not None else 0.5
    P = _power_linear(args, default_db=10.0)
    attack = _attack(args, default_inv_lambda=5.0)
    objective = args.objective or "high-snr"
    if objective == "high-snr":
        fading = RayleighFading(rate=args.fading_rate or 1.0)
        cfg = SingleChannelConfig(K=K, R=R, P=P, fading=fading, attack=attack)
        report = solve_high_snr_rayleigh(HighSnrProgram.from_config(cfg))
    elif objective == "lognormal":
        cfg = SingleChannelConfig(K=K, R=R, P=P, fading=LogNormalFading(), attack=attack)
        report = solve_lognormal_upper(cfg)
    else:
        raise ConfigError(f"unknown objective '{objective}'")
    if report.status is SolveStatus.INFEASIBLE:
        print(f"infeasible: {report.message}", file=sys.stderr)
        raise InfeasibleExit
    header = ["block", "power"]
    rows = [[i + 1, float(p)] for i, p in enumerate(report.power.p)]
    meta = _meta(args, P_linear=P, objective_value=report.objective,
                 kkt_residual=report.kkt_residual, status=report.status.value,
                 iterations=report.iterations)
    out = args.out or "power_opt.csv"
    write_csv(out, header, rows, meta, args.omit_version)
    return EXIT_OK


def cmd_capacity(args):
    k_max = args.K_max if args.K_max is not None else 6
    _require(k_max >= 1, "--K-max must be >= 1")
    eta = args.eta if args.eta is not None else 0.3
    _require(0 < eta <= 1, "--eta must lie in (0, 1]")
    P = _power_linear(args, default_linear=3.0)
    attack = _attack(args, default_inv_lambda=4.0)
    fading = _fading(args)
    trials = args.trials if args.trials is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    tol = args.tol if args.tol is not None else 1e-3
    if args.optimize_power:
        objective = (BruteObjective.LOGNORMAL_UPPER if isinstance(fading, LogNormalFading)
                     else BruteObjective.HIGH_SNR)
        evaluator = OptimizedPowerEvaluator(fading, attack, trials, seed, objective)
    else:
        evaluator = UniformPowerEvaluator(fading, attack, trials, seed)
    result = outage_capacity_search(P, eta, k_max, evaluator, tol)
    header = ["K", "capacity"]
    rows = [[K, R] for K, R in result.per_k]
    meta = _meta(args, P_linear=P, C_out=result.C_out, K_star=result.K_star,
                 capped=result.capped)
    out = args.out or "capacity.csv"
    write_csv(out, header, rows, meta, args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "outage capacity vs coding length")
    return EXIT_OK


def cmd_mc(args):
    K = args.K if args.K is not None else 5
    _require(K >= 1, "--K must be >= 1")
    R = args.R if args.R is not None else 0.5
    P = _power_linear(args, default_db=10.0)
    attack = _attack(args, default_inv_lambda=5.0)
    fading = _fading(args)
    trials = args.trials if args.trials is not None else 100_000
    _require(trials >= 1, "--trials must be >= 1")
    seed = args.seed if args.seed is not None else 0
    cfg = SingleChannelConfig(K=K, R=R, P=P, fading=fading, attack=attack)
    if args.power:
        p = np.asarray(_parse_float_list(args.power))
        _require(p.size == K, f"--power needs {K} entries")
        power = PowerVector(K=K, p=p, P=P)
    else:
        power = PowerVector.uniform(K, P)
    est = estimate_outage_single(cfg, power, trials, seed)
    header = ["p_hat", "stderr", "trials", "seed"]
    rows = [[est.p_hat, est.stderr, est.trials, est.seed]]
    out = args.out or "mc.csv"
    write_csv(out, header, rows, _meta(args, P_linear=P), args.omit_version)
    return EXIT_OK


def cmd_parallel(args):
    n_list = _parse_int_list(args.N_list) if args.N_list else [25, 50, 100, 150, 200]
    _require(all(n >= 1 for n in n_list), "--N-list entries must be >= 1")
    K = args.K if args.K is not None else 5
    R = args.R if args.R is not None else 0.5
    P = _power_linear(args, default_linear=2.0)
    attack = _attack(args, default_inv_lambda=5.0)
    fading = _fading(args)
    m = args.m if args.m is not None else 0
    rho = args.rho if args.rho is not None else 0.0
    trials = args.trials if args.trials is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    dependent = m >= 1
    header = ["N", "mc_outage", "stderr", "gaussian_approx"]
    if dependent:
        header.append("realized_corr")
    rows = []
    for N in n_list:
        pcfg = ParallelConfig(N=N, K=K, P=P, R=R, fading=fading, attack=attack, m=m, rho=rho)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if dependent:
                est = estimate_outage_parallel_mdep(pcfg, trials, seed)
                approx = gaussian_outage_mdep(pcfg)
                rows.append([N, est.p_hat, est.stderr, approx, est.realized_corr])
            else:
                est = estimate_outage_parallel(pcfg, trials, seed)
                approx = gaussian_outage_indep(pcfg)
                rows.append([N, est.p_hat, est.stderr, approx])
    out = args.out or "parallel.csv"
    write_csv(out, header, rows, _meta(args, P_linear=P), args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "outage vs sub-channel count")
    return EXIT_OK


def cmd_exponent(args):
    K = args.K if args.K is not None else 5
    attack = _attack(args, default_inv_lambda=5.0)
    fading = _fading(args)
    m = args.m if args.m is not None else 1
    rho = args.rho if args.rho is not None else 0.8
    mom = y_moments(fading, attack, K)
    if args.t_list:
        ts = _parse_float_list(args.t_list)
    else:
        ts = [round(0.05 * i, 10) for i in range(1, 20) if 0.05 * i < mom.mu]
    header = ["t", "exponent_indep", "s_star", "gauss_bound_indep"]
    if m >= 1:
        header.append("exponent_mdep_bound")
    rows = []
    for t in ts:
        res = outage_exponent_indep(fading, attack, K, t)
        gauss_ind = outage_exponent_mdep(fading, attack, K, 0, 0.0, t)
        row = [t, res.value, res.s_star, gauss_ind.value]
        if m >= 1:
            row.append(outage_exponent_mdep(fading, attack, K, m, rho, t).value)
        rows.append(row)
    out = args.out or "exponent.csv"
    write_csv(out, header, rows, _meta(args, mu_Y=mom.mu), args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "outage exponents vs rate per unit cost")
    return EXIT_OK


# ---------------------------------------------------------------------------
# figure reproduction
# ---------------------------------------------------------------------------


def _fig_bounds(args, P_db):
    ns = argparse.Namespace(**vars(args))
    ns.command = "single-bounds"
    ns.K_max = args.K_max if args.K_max is not None else 15
    ns.R = 1.0
    ns.P = None
    ns.P_dB = P_db
    ns.inv_lambda = 10.0
    ns.attack = "exponential"
    ns.fading = "rayleigh"
    ns.fading_rate = 1.0
    ns.out = args.out or f"fig{args.figure}.csv"
    return cmd_single_bounds(ns)


def _fig_power_comparison(args):
    # uniform vs optimized outage over K at R=0.5, 1/lambda=5, P=10 dB
    k_max = args.K_max if args.K_max is not None else 6
    trials = args.trials if args.trials is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    attack = ExponentialAttack(rate=0.2)
    fading = RayleighFading()
    rows = []
    for K in range(1, k_max + 1):
        cfg = SingleChannelConfig(K=K, R=0.5, P=10.0, fading=fading, attack=attack)
        uni = estimate_outage_single(cfg, PowerVector.uniform(K, 10.0), trials, seed)
        report = solve_high_snr_rayleigh(HighSnrProgram.from_config(cfg))
        opt = estimate_outage_single(cfg, report.power, trials, seed)
        rows.append([K, uni.p_hat, opt.p_hat, uni.stderr, opt.stderr])
    header = ["K", "uniform_outage", "optimized_outage", "uniform_stderr", "optimized_stderr"]
    out = args.out or "fig3.csv"
    write_csv(out, header, rows, _meta(args, R=0.5, P_linear=10.0, inv_lambda=5.0),
              args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "uniform vs optimized power")
    return EXIT_OK


def _fig_capacity(args):
    k_max = args.K_max if args.K_max is not None else 6
    trials = args.trials if args.trials is not None else 50_000
    seed = args.seed if args.seed is not None else 0
    attack = ExponentialAttack(rate=0.25)
    fading = LogNormalFading()
    uni = outage_capacity_search(
        3.0, 0.3, k_max, UniformPowerEvaluator(fading, attack, trials, seed))
    opt = outage_capacity_search(
        3.0, 0.3, k_max,
        OptimizedPowerEvaluator(fading, attack, trials, seed, BruteObjective.LOGNORMAL_UPPER))
    rows = [[K, uni.per_k[K - 1][1], opt.per_k[K - 1][1]] for K in range(1, k_max + 1)]
    header = ["K", "capacity_uniform", "capacity_optimized"]
    out = args.out or "fig4.csv"
    write_csv(out, header, rows, _meta(args, P_linear=3.0, inv_lambda=4.0, eta=0.3),
              args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "outage capacity vs coding length")
    return EXIT_OK


def _fig_parallel_convergence(args, dependent):
    n_list = _parse_int_list(args.N_list) if args.N_list else [25, 50, 75, 100, 150, 200]
    trials = args.trials if args.trials is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    attack = ExponentialAttack(rate=0.2)
    fading = RayleighFading()
    rows = []
    for N in n_list:
        row = [N]
        for R in (0.5, 1.6):
            pcfg = ParallelConfig(N=N, K=5, P=2.0, R=R, fading=fading, attack=attack,
                                  m=1 if dependent else 0, rho=0.8 if dependent else 0.0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                if dependent:
                    est = estimate_outage_parallel_mdep(pcfg, trials, seed)
                    approx = gaussian_outage_mdep(pcfg)
                else:
                    est = estimate_outage_parallel(pcfg, trials, seed)
                    approx = gaussian_outage_indep(pcfg)
            row += [est.p_hat, approx]
        rows.append(row)
    header = ["N", "mc_outage_r0.5", "gaussian_r0.5", "mc_outage_r1.6", "gaussian_r1.6"]
    out = args.out or ("fig6.csv" if dependent else "fig5.csv")
    write_csv(out, header, rows,
              _meta(args, K=5, P_linear=2.0, inv_lambda=5.0,
                    m=1 if dependent else 0, rho=0.8 if dependent else 0.0),
              args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "parallel outage convergence")
    return EXIT_OK


def _fig_parallel_comparison(args):
    n_list = _parse_int_list(args.N_list) if args.N_list else [25, 50, 75, 100, 150, 200]
    trials = args.trials if args.trials is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    attack = ExponentialAttack(rate=0.2)
    fading = RayleighFading()
    rows = []
    for N in n_list:
        base = dict(N=N, K=5, P=2.0, R=0.5, fading=fading, attack=attack)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ind = estimate_outage_parallel(ParallelConfig(**base), trials, seed)
            dep = estimate_outage_parallel_mdep(
                ParallelConfig(**base, m=1, rho=0.8), trials, seed)
        rows.append([N, ind.p_hat, dep.p_hat])
    header = ["N", "mc_independent", "mc_mdependent"]
    out = args.out or "fig7.csv"
    write_csv(out, header, rows, _meta(args, K=5, P_linear=2.0, R=0.5, inv_lambda=5.0,
                                       m=1, rho=0.8), args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "independent vs m-dependent outage")
    return EXIT_OK


def _fig_exponents(args):
    fading = RayleighFading()
    rows = []
    for inv_lambda in (3.0, 5.0, 10.0):
        attack = ExponentialAttack(rate=1.0 / inv_lambda)
        mom = y_moments(fading, attack, 5)
        for i in range(1, 40):
            t = round(0.025 * i, 10)
            if t >= mom.mu:
                break
            ind = outage_exponent_indep(fading, attack, 5, t)
            dep = outage_exponent_mdep(fading, attack, 5, 1, 0.8, t)
            rows.append([inv_lambda, t, ind.value, dep.value])
    header = ["inv_lambda", "t", "exponent_indep", "exponent_mdep_bound"]
    out = args.out or "fig8.csv"
    write_csv(out, header, rows, _meta(args, K=5, m=1, rho=0.8), args.omit_version)
    if args.gnuplot:
        write_gnuplot(out + ".gp", out, header, "outage exponents")
    return EXIT_OK


def cmd_reproduce_fig(args):
    fig = args.figure
    if fig == 1:
        return _fig_bounds(args, P_db=20.0)
    if fig == 2:
        return _fig_bounds(args, P_db=30.0)
    if fig == 3:
        return _fig_power_comparison(args)
    if fig == 4:
        return _fig_capacity(args)
    if fig == 5:
        return _fig_parallel_convergence(args, dependent=False)
    if fig == 6:
        return _fig_parallel_convergence(args, dependent=True)
    if fig == 7:
        return _fig_parallel_comparison(args)
    if fig == 8:
        return _fig_exponents(args)
    raise ConfigError(f"figure id must be 1..8, got {fig}")


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def _add_common(sp):
    sp.add_argument("--config", help="flat key = value config file; flags override")
    sp.add_argument("--out", help="output CSV path")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--gnuplot", action="store_true", default=None,
                    help="also emit a gnuplot script next to the CSV")
    sp.add_argument("--omit-version", dest="omit_version", action="store_true", default=None,
                    help="skip the version metadata line")


def _add_channel(sp, k_flag="--K"):
    sp.add_argument(k_flag, dest=k_flag.strip("-").replace("-", "_"), type=int)
    sp.add_argument("--R", type=float)
    sp.add_argument("--P", type=float, help="average power, linear scale")
    sp.add_argument("--P-dB", dest="P_dB", type=float, help="average power in dB")
    sp.add_argument("--inv-lambda", dest="inv_lambda", type=float,
                    help="mean attack time 1/lambda")
    sp.add_argument("--attack", choices=["exponential", "never"])
    sp.add_argument("--fading", choices=["rayleigh", "lognormal", "identical-rayleigh"])
    sp.add_argument("--fading-rate", dest="fading_rate", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcl", description="outage analysis for randomly terminated block-fading links")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("single-bounds", help="outage bounds and high-SNR curve over K")
    _add_channel(sp, "--K-max")
    _add_common(sp)
    sp.set_defaults(func=cmd_single_bounds, _subparser=sp)

    sp = sub.add_parser("optimal-k", help="closed-form optimal coding length")
    _add_channel(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_optimal_k, _subparser=sp)

    sp = sub.add_parser("power-opt", help="optimal power allocation for fixed K")
    _add_channel(sp)
    sp.add_argument("--objective", choices=["high-snr", "lognormal"])
    _add_common(sp)
    sp.set_defaults(func=cmd_power_opt, _subparser=sp)

    sp = sub.add_parser("capacity", help="outage capacity search over K")
    _add_channel(sp, "--K-max")
    sp.add_argument("--eta", type=float, help="outage probability target")
    sp.add_argument("--tol", type=float, help="bisection tolerance on the rate")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--optimize-power", dest="optimize_power", action="store_true",
                    default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_capacity, _subparser=sp)

    sp = sub.add_parser("mc", help="Monte Carlo outage of a single link")
    _add_channel(sp)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--power", help="comma-separated per-block powers")
    _add_common(sp)
    sp.set_defaults(func=cmd_mc, _subparser=sp)

    sp = sub.add_parser("parallel", help="Monte Carlo outage of parallel sub-channels")
    _add_channel(sp)
    sp.add_argument("--N-list", dest="N_list", help="comma-separated sub-channel counts")
    sp.add_argument("--m", type=int, help="dependence range (0 = independent)")
    sp.add_argument("--rho", type=float, help="target adjacent correlation")
    sp.add_argument("--trials", type=int)
    _add_common(sp)
    sp.set_defaults(func=cmd_parallel, _subparser=sp)

    sp = sub.add_parser("exponent", help="outage exponents vs rate per unit cost")
    _add_channel(sp)
    sp.add_argument("--t-list", dest="t_list", help="comma-separated t = R/P values")
    sp.add_argument("--m", type=int)
    sp.add_argument("--rho", type=float)
    _add_common(sp)
    sp.set_defaults(func=cmd_exponent, _subparser=sp)

    sp = sub.add_parser("reproduce-fig", help="emit a figure's curves as CSV")
    sp.add_argument("figure", type=int)
    _add_channel(sp, "--K-max")
    sp.add_argument("--N-list", dest="N_list")
    sp.add_argument("--trials", type=int)
    _add_common(sp)
    sp.set_defaults(func=cmd_reproduce_fig, _subparser=sp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        args = _resolve(args)
        return args.func(args)
    except (ConfigError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleExit:
        return EXIT_INFEASIBLE
    except (ModelError, DomainError, UnsupportedModelError, OutOfRegimeError,
            CalibrationError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


def entry_point():  # console script
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
