"""Experiment runners behind the CLI.

Each runner takes a parsed ExperimentConfig, executes one experiment
kind, writes its artifacts into the output directory (atomically, with
round-trip number formatting, so reruns are byte-identical) and prints
a one-line summary per sub-run.  Noise realizations and sweep points
run in a thread pool sized by FRADE_THREADS; output ordering is fixed
by construction, never by completion order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from . import dataio
from .carleman import (
    BoxRegion,
    evaluate_lemma21,
    evaluate_lemma31,
    evaluate_thm11,
    evaluate_thm13,
    exponent_ladder,
    sweep_s,
    thread_pool_size,
)
from .config import ExperimentConfig
from .errors import ConfigError
from .frac_calc import (
    caputo_l1_array,
    gamma_fn,
    rl_derivative_array,
    rl_integral_array,
    weighted_l2_norm,
)
from .geometry import (
    BetaRule,
    WeightFamily,
    WeightParams,
    build_d,
    choose_beta,
    phi as phi_of,
    regular_params,
)
from .grids import GridFunction, SpaceTimeGrid, TimeGrid, sample
from .inverse import (
    CauchyData,
    TargetRegion,
    add_noise,
    assemble_flux_map,
    fit_holder,
    lateral_cauchy_solve,
    reconstruct_source,
    relative_l2_error,
    target_error,
)
from .solver import FadeProblem, boundary_flux, solve_fade


# -- shared fixtures ------------------------------------------------------------------

def function_family() -> list[tuple[str, Callable]]:
    """Twenty smooth test profiles with h(0) = 0, mixing monomials and
    trigonometric shapes; the common family for operator cross-checks."""
    fams: list[tuple[str, Callable]] = []
    for k in range(1, 7):
        fams.append((f"t^{k}", lambda t, k=k: t**k))
    for k in range(1, 4):
        fams.append((f"t^{k}(1-t)", lambda t, k=k: t**k * (1 - t)))
    for k in range(1, 5):
        fams.append((f"sin({k}pi t)", lambda t, k=k: np.sin(k * np.pi * t)))
    for k in range(1, 4):
        fams.append((f"1-cos({k}pi t)", lambda t, k=k: 1 - np.cos(k * np.pi * t)))
    for k in range(1, 3):
        fams.append((f"t sin({k}pi t)", lambda t, k=k: t * np.sin(k * np.pi * t)))
    fams.append(("t^2 sin(pi t)", lambda t: t**2 * np.sin(np.pi * t)))
    fams.append(("t cos(pi t)-t", lambda t: t * np.cos(np.pi * t) - t))
    return fams


def caputo_monomial(power: float, alpha: float, t: np.ndarray) -> np.ndarray:
    """Closed form of the Caputo derivative of t^power, power >= 1."""
    coeff = gamma_fn(power + 1.0) / gamma_fn(power + 1.0 - alpha)
    return coeff * np.maximum(t, 0.0) ** (power - alpha)


def rel_l2_q(u: GridFunction, ref: GridFunction) -> float:
    """Relative L2 error over the whole cylinder."""
    diff = u.with_values(u.values - ref.values)
    denom = math.sqrt(weighted_l2_norm(ref))
    if denom == 0.0:
        raise ConfigError("reference solution vanishes; relative error undefined")
    return math.sqrt(weighted_l2_norm(diff)) / denom


# -- kind runners ---------------------------------------------------------------------

def _run_caputo(cfg: ExperimentConfig, out: str, seed: int) -> None:
    variant = cfg.get("caputo", "variant", "l1")
    grids = cfg.get_ints("caputo", "grids", [257, 513, 1025, 2049])
    if variant == "l1":
        alphas = cfg.get_floats("caputo", "alphas", [0.25, 0.33, 0.5, 0.75])
        power = cfg.get_float("caputo", "power", 2.0)
        rows, orders = [], {}
        for alpha in alphas:
            errs = []
            for n in grids:
                t = np.linspace(0.0, 1.0, n)
                dt = t[1] - t[0]
                approx = caputo_l1_array(t**power, alpha, dt)
                exact = caputo_monomial(power, alpha, t)
                err = float(np.max(np.abs(approx[1:] - exact[1:])))
                errs.append(err)
                rows.append((alpha, n, err))
            order = fitted_order(grids, errs)
            orders[dataio.format_number(alpha)] = order
            print(f"caputo-check alpha={alpha:g}: max_err={errs[-1]:.3e} "
                  f"order={order if order is not None else 'exact'}")
        dataio.write_csv(os.path.join(out, "caputo_errors.csv"),
                         ("alpha", "n", "max_error"), rows)
        dataio.write_json(os.path.join(out, "caputo_summary.json"),
                          {"variant": variant, "orders": orders})
        return

    family = function_family()
    if variant == "semigroup":
        p1 = cfg.get_float("caputo", "p1", 0.3)
        p2 = cfg.get_float("caputo", "p2", 0.45)
        rows = []
        worst = {}
        for n in grids:
            t = np.linspace(0.0, 1.0, n)
            dt = t[1] - t[0]
            top = 0.0
            for name, fn in family:
                h = fn(t)
                nested = rl_integral_array(rl_integral_array(h, p2, dt), p1, dt)
                direct = rl_integral_array(h, p1 + p2, dt)
                defect = float(np.max(np.abs(nested - direct)))
                rows.append((name, n, defect))
                top = max(top, defect)
            worst[n] = top
            print(f"caputo-check semigroup n={n}: worst defect={top:.3e}")
        dataio.write_csv(os.path.join(out, "caputo_errors.csv"),
                         ("function", "n", "defect"), rows)
        dataio.write_json(os.path.join(out, "caputo_summary.json"),
                          {"variant": variant, "p1": p1, "p2": p2,
                           "worst_defect": {str(k): v for k, v in worst.items()}})
        return

    if variant == "equivalence":
        alphas = cfg.get_floats("caputo", "alphas", [0.33, 0.75])
        rows = []
        for alpha in alphas:
            top = 0.0
            for n in grids:
                t = np.linspace(0.0, 1.0, n)
                dt = t[1] - t[0]
                for name, fn in family:
                    h = fn(t)
                    defect = float(np.max(np.abs(
                        caputo_l1_array(h, alpha, dt)
                        - rl_derivative_array(h, alpha, dt))))
                    rows.append((alpha, name, n, defect))
                    top = max(top, defect)
            print(f"caputo-check equivalence alpha={alpha:g}: worst defect={top:.3e}")
        dataio.write_csv(os.path.join(out, "caputo_errors.csv"),
                         ("alpha", "function", "n", "defect"), rows)
        dataio.write_json(os.path.join(out, "caputo_summary.json"),
                          {"variant": variant})
        return

    raise ConfigError(f"[caputo] variant must be l1, semigroup or equivalence, "
                      f"got {variant!r}")


def fitted_order(ns: Sequence[int], errs: Sequence[float],
                 floor: float = 1e-12) -> float | None:
    """Least-squares convergence order from node counts and errors.

    Errors at the rounding floor mean the scheme is exact for the case;
    None is returned to mark that (callers treat it as a pass)."""
    errs = np.asarray(errs, dtype=float)
    if np.all(errs < floor):
        return None
    hs = 1.0 / (np.asarray(ns, dtype=float) - 1.0)
    mask = errs > floor
    if int(np.sum(mask)) < 2:
        return None
    slope, _ = np.polyfit(np.log(hs[mask]), np.log(errs[mask]), 1)
    return float(slope)


def _run_forward(cfg: ExperimentConfig, out: str, seed: int) -> None:
    grid = cfg.build_grid()
    refinements = cfg.get_int("forward", "refinements", 0)
    exact_fn = (cfg.expression("forward", "exact", grid.dim)
                if cfg.has("forward", "exact") else None)

    rows = []
    errs = []
    u = None
    g = grid
    for level in range(refinements + 1):
        problem = cfg.build_problem(g)
        u = solve_fade(problem)
        if exact_fn is not None:
            ref = sample(g, exact_fn)
            err = rel_l2_q(u, ref)
            errs.append(err)
            order = (math.log2(errs[-2] / err) if len(errs) > 1 and err > 0
                     else float("nan"))
            rows.append((level, g.nx, g.time.n, err, order))
            print(f"forward level={level} {g.nx}x{g.time.n}: rel_l2={err:.4e}")
        else:
            print(f"forward level={level} {g.nx}x{g.time.n}: solved")
        if level < refinements:
            g = g.refined()

    dataio.write_solution_csv(os.path.join(out, "solution.csv"), u)
    dataio.write_solution_binary(os.path.join(out, "solution.bin"), u)
    summary = {"nx": g.nx, "nt": g.time.n}
    if exact_fn is not None:
        dataio.write_csv(os.path.join(out, "mms.csv"),
                         ("level", "nx", "nt", "rel_l2", "order"), rows)
        summary["errors"] = errs
    dataio.write_json(os.path.join(out, "forward_summary.json"), summary)


def _weight_params(cfg: ExperimentConfig, d, grid: SpaceTimeGrid,
                   s0: float) -> WeightParams:
    family = cfg.get("weights", "family")
    lam = cfg.get_float("weights", "lam", 4.0)
    horizon = grid.time.horizon
    d_norm = d.sup_norm()
    if family == "sub":
        alpha1 = cfg.get_float("weights", "alpha1")
        if cfg.has("weights", "beta"):
            beta = cfg.get_float("weights", "beta")
        else:
            rule = cfg.get("weights", "beta_rule", "sub-cauchy")
            if rule != "sub-cauchy":
                raise ConfigError(f"sub family uses beta_rule sub-cauchy, got {rule!r}")
            beta = choose_beta(BetaRule.SUB_CAUCHY, d_norm, horizon, alpha1=alpha1)
        return WeightParams(WeightFamily.SUB, lam, s0, beta, horizon, alpha1=alpha1)
    if family == "regular":
        t0 = cfg.get_float("weights", "t0")
        if cfg.has("weights", "beta"):
            beta = cfg.get_float("weights", "beta")
        else:
            rule = cfg.get("weights", "beta_rule", "eps")
            if rule == "eps":
                beta = choose_beta(BetaRule.EPS, d_norm, horizon,
                                   eps=cfg.get_float("weights", "eps"))
            elif rule == "isp":
                beta = choose_beta(BetaRule.ISP, d_norm, horizon, t0=t0)
            else:
                raise ConfigError(f"regular family beta_rule must be eps or isp, "
                                  f"got {rule!r}")
        return regular_params(lam, s0, beta, horizon, t0)
    raise ConfigError(f"[weights] family must be sub or regular, got {family!r}")


def _sweep_to_disk(out: str, name: str, result, grid: SpaceTimeGrid) -> None:
    for s, ratio in zip(result.s_values, result.ratios):
        print(f"{name} s={s:g}: ratio="
              f"{'undefined' if ratio is None else format(ratio, '.6g')}")
    print(f"{name}: c_hat={result.c_hat} growth={result.growth}")
    meta = {"nx": grid.nx, "nt": grid.time.n, "dim": grid.dim}
    if grid.dim == 2:
        meta["ny"] = grid.ny
    dataio.write_sweep_csv(os.path.join(out, "sweep.csv"), result)
    dataio.write_sweep_summary_json(os.path.join(out, "sweep_summary.json"),
                                    result, meta)


def _run_carleman(cfg: ExperimentConfig, out: str, seed: int) -> None:
    grid = cfg.build_grid()
    d = build_d(grid.domain)
    s_values = cfg.get_floats("weights", "s_values", [8.0, 16.0, 32.0, 64.0])
    params0 = _weight_params(cfg, d, grid, s_values[0])
    u = sample(grid, cfg.expression("carleman", "fixture", grid.dim))

    kind = cfg.kind
    if kind == "carleman-thm11":
        problem = cfg.build_problem(grid)
        box = cfg.get_floats("carleman", "region")
        if len(box) != 4 + (2 if grid.dim == 2 else 0):
            raise ConfigError("[carleman] region needs x_lo,x_hi[,y_lo,y_hi],t_lo,t_hi")
        region = (BoxRegion(box[0], box[1], box[2], box[3]) if grid.dim == 1
                  else BoxRegion(box[0], box[1], box[4], box[5], box[2], box[3]))
        evaluator = lambda s: evaluate_thm11(problem, u, region, d, params0.with_s(s))
    elif kind == "carleman-lemma21":
        alpha = cfg.get_float("carleman", "alpha")
        c1 = cfg.get_float("carleman", "c1")
        c2 = cfg.get_float("carleman", "c2")
        evaluator = lambda s: evaluate_lemma21(u, alpha, d, params0.with_s(s), c1, c2)
    elif kind == "carleman-lemma31":
        problem = cfg.build_problem(grid)
        tau = cfg.get_float("carleman", "tau", -2.0)
        evaluator = lambda s: evaluate_lemma31(problem, u, d, params0.with_s(s), tau)
    elif kind == "carleman-thm13":
        problem = cfg.build_problem(grid)
        k = cfg.get_int("carleman", "k")
        m = cfg.get_int("carleman", "m")
        ladder = exponent_ladder(k, m)
        if cfg.has("carleman", "mu_low"):
            mu_low = cfg.get_float("carleman", "mu_low")
            mu_high = cfg.get_float("carleman", "mu_high")
        else:
            d_n = d.sample(grid)[..., None]
            phi_n = phi_of(d_n, grid.time.nodes, params0)
            mu_low = float(np.quantile(phi_n, 0.5))
            mu_high = float(np.quantile(phi_n, 0.75))
        evaluator = lambda s: evaluate_thm13(problem, u, d, params0.with_s(s),
                                             ladder, mu_low, mu_high)
    else:
        raise ConfigError(f"unknown carleman kind {kind!r}")

    result = sweep_s(evaluator, s_values)
    _sweep_to_disk(out, kind, result, grid)


def _noise_study(deltas: Sequence[float], n_seeds: int, seed: int,
                 worker: Callable[[float, int], float]):
    tasks = [(i, di, k) for i, di in enumerate(deltas) for k in range(n_seeds)]
    workers = thread_pool_size(len(tasks))
    if workers == 1:
        errors = [worker(d, (seed, i, k)) for i, d, k in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(lambda t: worker(t[1], (seed, t[0], t[2])), tasks))
    rows = [(d, k, e) for (i, d, k), e in zip(tasks, errors)]
    means = [float(np.mean([e for (i, d, k), e in zip(tasks, errors) if i == j]))
             for j in range(len(deltas))]
    return rows, means


def _run_isp(cfg: ExperimentConfig, out: str, seed: int) -> None:
    grid = cfg.build_grid()
    dim = grid.dim
    t0 = cfg.get_float("isp", "t0", grid.time.horizon)
    eps = cfg.get_float("isp", "eps")
    r0 = cfg.get_float("isp", "r0", 1e-8)
    r_fn = cfg.expression("isp", "r_expr", dim)
    f_fn = cfg.expression("isp", "f_expr", dim, time_dependent=False)

    if dim == 1:
        src = lambda x, t: r_fn(x, t) * f_fn(x)
    else:
        src = lambda x, y, t: r_fn(x, y, t) * f_fn(x, y)
    base = cfg.build_problem(grid)
    problem = FadeProblem(grid, diffusion=base.a11 if dim == 1
                          else (base.a11, base.a22, base.a12),
                          source=src,
                          drift=base.b1 if dim == 1 else (base.b1, base.b2),
                          reaction=base.c,
                          frac_terms=tuple(zip(base.qs, base.alphas)),
                          initial=base.u0, boundary=base.g)

    u_hist = solve_fade(problem)
    r_field = sample(grid, r_fn)
    f_true = np.asarray(f_fn(*grid.space_meshes()), dtype=float)
    f_true = np.broadcast_to(f_true, grid.space_shape)

    recon = reconstruct_source(u_hist, r_field, problem, t0, eps, r0=r0)
    err0 = relative_l2_error(recon, f_true)
    print(f"isp noiseless: rel_l2={err0:.4e} on {int(np.sum(recon.mask))} nodes")
    dataio.write_reconstruction_csv(os.path.join(out, "reconstruction.csv"),
                                    recon, f_true)

    deltas = cfg.get_floats("isp", "deltas", [1e-4, 1e-3, 1e-2, 1e-1])
    n_seeds = cfg.get_int("isp", "n_seeds", 5)

    def worker(delta: float, noise_seed) -> float:
        noisy = add_noise(u_hist, delta, noise_seed)
        rec = reconstruct_source(noisy, r_field, problem, t0, eps, r0=r0)
        return relative_l2_error(rec, f_true)

    rows, means = _noise_study(deltas, n_seeds, seed, worker)
    dataio.write_noise_csv(os.path.join(out, "noise.csv"), rows)
    fit = fit_holder(deltas, means)
    dataio.write_fit_json(os.path.join(out, "stability_fit.json"), fit)
    print(f"isp noise study: theta_hat={fit.theta_hat:.4f} "
          f"residual={fit.residual:.4f} consistent={fit.holder_consistent}")
    dataio.write_json(os.path.join(out, "isp_summary.json"), {
        "noiseless_error": err0, "t0": t0, "eps": eps,
        "theta_hat": fit.theta_hat, "fit_residual": fit.residual,
    })


def _run_cauchy(cfg: ExperimentConfig, out: str, seed: int) -> None:
    grid = cfg.build_grid()
    problem = cfg.build_problem(grid)
    face = cfg.get("cauchy", "face")
    reg = cfg.get_float("cauchy", "reg", 1e-6)
    target = TargetRegion(cfg.get_float("cauchy", "omega0_level"),
                          cfg.get("cauchy", "window", "early"))

    truth = solve_fade(problem)
    idx = 0 if face == "left" else -1
    g0 = truth.values[idx, :].copy()
    g1 = boundary_flux(problem, truth.values, face).values
    data = CauchyData(face, g0, g1)

    flux_map = assemble_flux_map(problem, face)
    result = lateral_cauchy_solve(data, problem, target, reg, flux_map=flux_map)
    err0 = target_error(result, truth.values)
    print(f"cauchy noiseless: rel_l2={err0:.4e} eps={result.eps:.4g} "
          f"N={result.n_levels} M={result.m_value:.4g}")
    dataio.write_solution_csv(os.path.join(out, "continuation.csv"), result.u_hat)

    deltas = cfg.get_floats("cauchy", "deltas", [1e-4, 1e-3, 1e-2, 1e-1])
    n_seeds = cfg.get_int("cauchy", "n_seeds", 5)

    def worker(delta: float, noise_seed) -> float:
        noisy = add_noise(data, delta, noise_seed)
        res = lateral_cauchy_solve(noisy, problem, target, reg, flux_map=flux_map)
        return target_error(res, truth.values)

    rows, means = _noise_study(deltas, n_seeds, seed, worker)
    dataio.write_noise_csv(os.path.join(out, "noise.csv"), rows)
    fit = fit_holder(deltas, means)
    dataio.write_fit_json(os.path.join(out, "stability_fit.json"), fit)
    print(f"cauchy noise study: theta_hat={fit.theta_hat:.4f} "
          f"residual={fit.residual:.4f} consistent={fit.holder_consistent}")
    dataio.write_json(os.path.join(out, "cauchy_summary.json"), {
        "noiseless_error": err0, "eps": result.eps,
        "n_levels": result.n_levels, "m_value": result.m_value,
        "theta_hat": fit.theta_hat, "fit_residual": fit.residual,
    })


def _run_holder_fit(cfg: ExperimentConfig, out: str, seed: int) -> None:
    deltas = cfg.get_floats("fit", "deltas")
    errors = cfg.get_floats("fit", "errors")
    fit = fit_holder(deltas, errors)
    dataio.write_fit_json(os.path.join(out, "stability_fit.json"), fit)
    print(f"holder-fit: theta_hat={fit.theta_hat:.6g} c_hat={fit.c_hat:.6g} "
          f"residual={fit.residual:.4g} consistent={fit.holder_consistent}")


_RUNNERS = {
    "caputo-check": _run_caputo,
    "forward": _run_forward,
    "carleman-thm11": _run_carleman,
    "carleman-lemma21": _run_carleman,
    "carleman-lemma31": _run_carleman,
    "carleman-thm13": _run_carleman,
    "isp": _run_isp,
    "cauchy": _run_cauchy,
    "holder-fit": _run_holder_fit,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None,
                   seed: int | None = None) -> None:
    """Execute one experiment; artifacts land in out_dir (or the config's
    `out`).  Raises typed errors that the CLI maps to exit codes."""
    out = out_dir if out_dir is not None else cfg.out_dir
    use_seed = seed if seed is not None else cfg.seed
    os.makedirs(out, exist_ok=True)
    runner = _RUNNERS.get(cfg.kind)
    if runner is None:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
    runner(cfg, out, use_seed)
