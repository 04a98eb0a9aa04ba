"""Experiment runners behind the command-line interface.

Output layout: <out>/<experiment>/<cell>/<trial>/*.csv with a single
report.json at the experiment root.  Every random draw flows from the
master seed through named substreams: data by (seed, "data", trial) so all
parameter cells see the same trajectories (paired comparisons), learner
and benchmark randomness by (seed, "cell", cell-name, "trial", trial).
Workers only compute and write their own trial directory, so results are
byte-identical for any --threads value.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from itertools import product

import numpy as np

from .config import Settings
from .datastream import NonlinearConfig, PeriodicConfig, gen_nonlinear, gen_periodic
from .equilibrium import (
    BracketError,
    ConvergenceError,
    IsSolverConfig,
    QuadratureGrid,
    draw_prior_samples,
    solve_mu_star,
    solve_mu_star_quadrature,
    verify_dym_formula,
    verify_gap_decomposition,
)
from .offline import OfflineFitConfig, compare_oos, loss_trace_to_csv
from .onpgd import OnpgdConfig
from .regret import regret_run, regret_to_csv
from .seeding import substream
from .stats import DegenerateDataError, paired_tests, summarize
from .theory import BoundSpec, compute_constants
from .config import OUT_ENV_VAR  # re-export for the CLI


def scenario_config(settings: Settings):
    if settings.scenario == "periodic":
        return PeriodicConfig(dt=settings.dt, n_steps=settings.n_steps)
    return NonlinearConfig(dt=settings.dt, n_steps=settings.n_steps)


def generate_pair(settings: Settings, trial: int):
    """Train/test pair for one trial; identical across parameter cells."""
    cfg = scenario_config(settings)
    seed = int(substream(settings.seed, "data", trial).integers(2**63))
    gen = gen_periodic if settings.scenario == "periodic" else gen_nonlinear
    return gen(cfg, seed)


def cell_seed(settings: Settings, cell_name: str, trial: int) -> int:
    return int(substream(settings.seed, "cell", cell_name, "trial", trial).integers(2**63))


def _trial_dir(root, cell, trial):
    path = os.path.join(root, cell, f"trial{trial:03d}")
    os.makedirs(path, exist_ok=True)
    return path


def _write_report(root, report):
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pool_map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _summary_dict(values):
    s = summarize(values)
    return {"n": s.n, "mean": s.mean, "sd": s.sd, "ci_low": s.ci_low, "ci_high": s.ci_high}


def _paired_dict(a, b):
    try:
        r = paired_tests(np.asarray(a), np.asarray(b))
        return {
            "n": r.n,
            "mean_diff": r.mean_diff,
            "t_stat": r.t_stat,
            "t_pvalue": r.t_pvalue,
            "wilcoxon_stat": r.wilcoxon_stat,
            "wilcoxon_pvalue": r.wilcoxon_pvalue,
            "wilcoxon_exact": r.wilcoxon_exact,
        }
    except (DegenerateDataError, ValueError) as e:
        return {"error": str(e)}


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def run_generate(settings: Settings) -> dict:
    """Write train/test trajectory CSVs for each trial."""
    root = os.path.join(settings.out_dir(), settings.experiment or f"{settings.scenario}-data")

    def one(trial):
        train, test = generate_pair(settings, trial)
        tdir = _trial_dir(root, settings.scenario, trial)
        train.to_csv(os.path.join(tdir, "train.csv"))
        test.to_csv(os.path.join(tdir, "test.csv"))
        return {
            "trial": trial,
            "train_second_moment": float(np.mean(train.y**2)),
            "test_second_moment": float(np.mean(test.y**2)),
        }

    rows = _pool_map(one, range(settings.trials), settings.threads)
    report = {
        "command": "generate",
        "scenario": settings.scenario,
        "seed": settings.seed,
        "trials": settings.trials,
        "files_written": 2 * settings.trials,
        "trial_moments": rows,
    }
    _write_report(root, report)
    return report


# ---------------------------------------------------------------------------
# oos-compare
# ---------------------------------------------------------------------------


def run_oos_compare(settings: Settings) -> dict:
    """Paired online/offline out-of-sample MSE over the trials."""
    root = os.path.join(settings.out_dir(), settings.experiment or f"{settings.scenario}-oos")
    cell = f"N{settings.n_particles}_beta{settings.beta:g}_lambda{settings.lam:g}"
    onpgd = OnpgdConfig(
        n_particles=settings.n_particles, lam=settings.lam, beta=settings.beta,
        dt=settings.dt, self_interaction=settings.self_interaction,
        init_sd=settings.init_sd,
    )
    offline = OfflineFitConfig(
        n_particles=settings.n_particles, lam=settings.lam,
        iters=settings.offline_iters, learning_rate=settings.offline_lr,
        beta=settings.beta, init_sd=settings.init_sd,
    )

    def one(trial):
        train, test = generate_pair(settings, trial)
        res = compare_oos(train, test, onpgd, offline, cell_seed(settings, cell, trial))
        tdir = _trial_dir(root, cell, trial)
        loss_trace_to_csv(res.offline_loss_trace, os.path.join(tdir, "offline_loss.csv"))
        return {"trial": trial, "mse_online": res.mse_online, "mse_offline": res.mse_offline}

    rows = _pool_map(one, range(settings.trials), settings.threads)

    os.makedirs(os.path.join(root, cell), exist_ok=True)
    with open(os.path.join(root, cell, "mse_pairs.csv"), "w", newline="") as fh:
        import csv

        w = csv.writer(fh)
        w.writerow(["trial", "mse_online", "mse_offline"])
        for r in rows:
            w.writerow([r["trial"], repr(r["mse_online"]), repr(r["mse_offline"])])

    online = [r["mse_online"] for r in rows]
    offline_vals = [r["mse_offline"] for r in rows]
    report = {
        "command": "oos-compare",
        "scenario": settings.scenario,
        "seed": settings.seed,
        "trials": settings.trials,
        "cell": cell,
        "panel_a": {
            "online": _summary_dict(online) if len(online) > 1 else {"values": online},
            "offline": _summary_dict(offline_vals) if len(offline_vals) > 1 else {"values": offline_vals},
        },
        "panel_b": _paired_dict(online, offline_vals),
        "per_trial": rows,
    }
    _write_report(root, report)
    return report


# ---------------------------------------------------------------------------
# regret-sweep
# ---------------------------------------------------------------------------


def _sweep_cells(settings: Settings):
    ns = settings.sweep_n or [settings.n_particles]
    betas = settings.sweep_beta or [settings.beta]
    lams = settings.sweep_lam or [settings.lam]
    cells = []
    for n, beta, lam in product(ns, betas, lams):
        cells.append({"n": int(n), "beta": float(beta), "lam": float(lam),
                      "name": f"N{int(n)}_beta{beta:g}_lambda{lam:g}"})
    return cells


def run_regret_sweep(settings: Settings) -> dict:
    """Regret series and out-of-sample MSE per (N, beta, lambda) cell."""
    root = os.path.join(settings.out_dir(), settings.experiment or f"{settings.scenario}-sweep")
    cells = _sweep_cells(settings)

    def one(task):
        cell, trial = task
        try:
            train, test = generate_pair(settings, trial)
            onpgd = OnpgdConfig(
                n_particles=cell["n"], lam=cell["lam"], beta=cell["beta"],
                dt=settings.dt, self_interaction=settings.self_interaction,
                init_sd=settings.init_sd,
            )
            is_cfg = IsSolverConfig(
                prior_var=cell["beta"] / cell["lam"], n_is=settings.n_is,
                root_tol=settings.root_tol,
            )
            bundle = regret_run(
                train, onpgd, is_cfg, settings.eval_stride,
                cell_seed(settings, cell["name"], trial),
                include_static=settings.include_static, test=test,
            )
            tdir = _trial_dir(root, cell["name"], trial)
            regret_to_csv(bundle, os.path.join(tdir, "regret.csv"), trial=trial,
                          n_particles=cell["n"], beta=cell["beta"], lam=cell["lam"])
            out = {"trial": trial, "cell": cell["name"], "oos_mse": bundle.mse}
            for (bench, variant), series in bundle.series.items():
                out[f"cumulative_T_{bench}_{variant}"] = float(series.cumulative[-1])
                out[f"final_instantaneous_{bench}_{variant}"] = float(series.instantaneous[-1])
            return out
        except Exception as e:  # keep the sweep complete; no silent gaps
            return {"trial": trial, "cell": cell["name"], "error": f"{type(e).__name__}: {e}"}

    tasks = [(cell, trial) for cell in cells for trial in range(settings.trials)]
    rows = _pool_map(one, tasks, settings.threads)

    cell_reports = []
    for cell in cells:
        mine = [r for r in rows if r["cell"] == cell["name"]]
        good = [r for r in mine if "error" not in r]
        failures = [{"trial": r["trial"], "error": r["error"]} for r in mine if "error" in r]
        agg = {"name": cell["name"], "n": cell["n"], "beta": cell["beta"],
               "lambda": cell["lam"], "trials": len(mine), "failures": failures}
        if good:
            agg["oos_mse"] = _summary_dict([r["oos_mse"] for r in good]) if len(good) > 1 else {
                "values": [r["oos_mse"] for r in good]}
            for key in sorted(good[0]):
                if key.startswith("cumulative_T_") or key.startswith("final_instantaneous_"):
                    vals = [r[key] for r in good]
                    agg[key] = {"mean": float(np.mean(vals)), "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0}
        cell_reports.append(agg)

    report = {
        "command": "regret-sweep",
        "scenario": settings.scenario,
        "seed": settings.seed,
        "trials": settings.trials,
        "eval_stride": settings.eval_stride,
        "include_static": settings.include_static,
        "cells": cell_reports,
    }
    _write_report(root, report)
    return report


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

HAND_CASES = [
    # (spec, expected c_osc, expected alpha, expected pl_holds, expected c_pl)
    (dict(c_sigma=1.0, c_z=1.0, c_1=1.0, lam=1.0, beta=4.0, d=3),
     2.0, 0.25 * np.exp(-2.0), False, None),
    (dict(c_sigma=0.1, c_z=0.1, c_1=0.1, lam=1.0, beta=1.0, d=3),
     0.08, np.exp(-0.08), True,
     (2 * 0.01 + 1.0) / (np.exp(-0.08) - 8 * 0.01 * 0.01)),
]


def run_verify(settings: Settings, inject_bug=False) -> dict:
    """Numerical identity and cross-validation suite; ok=False on any miss.

    inject_bug negates the neuron values fed to the sampling solver, a
    negative control that must make the cross-validation fail loudly.
    """
    beta, lam = settings.beta, settings.lam
    grid = QuadratureGrid(-8.0, 8.0, 2001)
    rng = substream(settings.seed, "verify")
    checks = []

    # free-energy gap decomposition on perturbed densities
    worst_gap, worst_negativity = 0.0, 0.0
    for i in range(20):
        x = rng.uniform(0.5, 1.5)
        y = rng.normal(0.0, 0.3)
        _, mu = solve_mu_star_quadrature((x, y), beta, lam, grid)
        bump = 0.3 * np.tanh(rng.normal() * grid.thetas) + 0.2 * np.sin(rng.normal() * grid.thetas)
        rho = mu * np.exp(bump)
        rho /= grid.integrate(rho)
        rep = verify_gap_decomposition(rho, (x, y), beta, lam, grid)
        worst_gap = max(worst_gap, rep.abs_diff)
        worst_negativity = min(worst_negativity, rep.lhs)
    checks.append({"name": "gap_decomposition", "worst_abs_diff": worst_gap,
                   "min_lhs": worst_negativity, "tol": 1e-6,
                   "ok": worst_gap <= 1e-6 and worst_negativity >= -1e-9})

    # equilibrium response derivative vs central difference
    worst_dym = 0.0
    for i in range(5):
        x = rng.uniform(0.5, 1.5)
        y = rng.normal(0.0, 0.3)
        rep = verify_dym_formula((x, y), beta, lam, grid)
        worst_dym = max(worst_dym, rep.abs_diff)
    checks.append({"name": "dym_formula", "worst_abs_diff": worst_dym, "tol": 1e-4,
                   "ok": worst_dym <= 1e-4})

    # sampling solver against the quadrature oracle; the injected bug flips
    # the sign of the sample fixed-point map, and the corruption must show
    # up here either as a wrong value or as a solver failure
    phi_sign = -1.0 if inject_bug else 1.0
    worst_cross = 0.0
    for i in range(20):
        srng = substream(settings.seed, "verify-cross", i)
        x = srng.uniform(0.5, 1.5)
        y = srng.normal(0.0, 0.3)
        m_quad, _ = solve_mu_star_quadrature((x, y), beta, lam, grid)
        samples = draw_prior_samples(200000, 1, beta / lam, srng)
        cfg = IsSolverConfig(prior_var=beta / lam, n_is=200000, root_tol=settings.root_tol)
        try:
            m_is, _ = solve_mu_star(samples, (x, y), beta, cfg, phi_sign=phi_sign)
            worst_cross = max(worst_cross, abs(m_is - m_quad))
        except (BracketError, ConvergenceError):
            worst_cross = float("inf")
    checks.append({"name": "is_vs_quadrature", "worst_abs_diff": worst_cross, "tol": 3e-3,
                   "ok": worst_cross <= 3e-3, "bug_injected": inject_bug})

    # closed-form constants against hand arithmetic
    worst_const = 0.0
    for spec_kwargs, c_osc, alpha, holds, c_pl in HAND_CASES:
        c = compute_constants(BoundSpec(**spec_kwargs))
        worst_const = max(worst_const, abs(c.c_osc - c_osc), abs(c.alpha - alpha))
        if holds != c.pl_condition_holds:
            worst_const = np.inf
        if c_pl is not None:
            worst_const = max(worst_const, abs(c.c_pl - c_pl))
    big_beta = compute_constants(BoundSpec(c_sigma=1.0, c_z=1.0, c_1=1.0, lam=0.1, beta=1e6, d=3))
    limit_err = abs(big_beta.c_pl - 1.0 / 0.1)
    checks.append({"name": "constants", "worst_abs_diff": float(worst_const), "tol": 1e-9,
                   "c_pl_limit_error": float(limit_err),
                   "ok": worst_const <= 1e-9 and limit_err <= 1e-3})

    report = {
        "command": "verify",
        "seed": settings.seed,
        "beta": beta,
        "lambda": lam,
        "checks": checks,
        "ok": all(c["ok"] for c in checks),
    }
    if settings.out:
        _write_report(os.path.join(settings.out_dir(), settings.experiment or "verify"), report)
    return report


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def run_stats(input_csv, columns=None) -> dict:
    """Summaries (and paired tests for two columns) of a numeric CSV."""
    import csv

    with open(input_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty input file")
    header = rows[0]
    numeric = {}
    for j, name in enumerate(header):
        try:
            numeric[name] = np.array([float(r[j]) for r in rows[1:]])
        except ValueError:
            continue
    if columns:
        missing = [c for c in columns if c not in numeric]
        if missing:
            raise ValueError(f"columns not found or not numeric: {missing}")
        use = columns
    else:
        use = [c for c in numeric if c.lower() not in ("trial", "k", "iter", "sample_id", "t")]
    if not use:
        raise ValueError("no numeric value columns found")
    report = {"command": "stats", "input": str(input_csv),
              "summaries": {c: _summary_dict(numeric[c]) for c in use}}
    if len(use) == 2:
        report["paired"] = _paired_dict(numeric[use[0]], numeric[use[1]])
    return report
