"""Regret of the online particle learner against benchmark measures.

Instantaneous regret at an evaluation time is the cost gap
U(ensemble, z) - U(benchmark, z); cumulative regret integrates it over the
horizon by the trapezoid rule on the evaluation subgrid.  Two benchmarks:

* dynamic: the instantaneous equilibrium re-solved at each evaluation
  point's data (fresh prior samples per point, seeded by the point index);
* static: one hindsight measure solved from the whole training trajectory.

Each comes in a regularized (penalty included on both sides) and an
unregularized variant.  Evaluation uses the pre-update ensemble states on
the subgrid {1, stride, 2 stride, ..., K}, so the first point is the
untrained ensemble and cumulative regret starts at zero there.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import (
    BracketError,
    ConvergenceError,
    IsSolverConfig,
    draw_prior_samples,
    solve_mu_star,
    solve_rho_star,
)
from .measures import cost_u, cost_u_unreg, oos_mse
from .onpgd import run_online
from .seeding import substream

VARIANTS = ("regularized", "unregularized")
BENCHMARKS = ("dynamic", "static")


@dataclass
class RegretSeries:
    """Instantaneous and cumulative regret on an evaluation subgrid."""

    times: np.ndarray
    instantaneous: np.ndarray
    cumulative: np.ndarray
    variant: str
    benchmark: str

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"benchmark must be one of {BENCHMARKS}")


def instantaneous_regret(ensemble_thetas, benchmark_measure, z, lam, variant="regularized") -> float:
    """Cost gap U(ensemble, z) - U(benchmark, z) for one data point."""
    if variant == "regularized":
        return cost_u(ensemble_thetas, z, lam) - cost_u(benchmark_measure, z, lam)
    if variant == "unregularized":
        return cost_u_unreg(ensemble_thetas, z) - cost_u_unreg(benchmark_measure, z)
    raise ValueError(f"variant must be one of {VARIANTS}")


def cumulative_regret(times, instantaneous) -> np.ndarray:
    """Running trapezoid integral of the instantaneous series; starts at 0."""
    times = np.asarray(times, dtype=float)
    vals = np.asarray(instantaneous, dtype=float)
    if times.shape != vals.shape or times.ndim != 1:
        raise ValueError("times and values must be matching vectors")
    if times.size and np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    out = np.zeros_like(vals)
    if vals.size > 1:
        steps = np.diff(times) * 0.5 * (vals[1:] + vals[:-1])
        out[1:] = np.cumsum(steps)
    return out


def eval_indices(n_steps: int, stride: int) -> list:
    """Evaluation subgrid {1, stride, 2 stride, ...} plus the final step."""
    if stride < 1 or stride > n_steps:
        raise ValueError("stride must be in 1..K")
    ks = {1, n_steps}
    ks.update(range(stride, n_steps + 1, stride))
    return sorted(ks)


@dataclass
class RegretBundle:
    """All regret series for one training run, keyed (benchmark, variant),
    plus the out-of-sample MSE when a test trajectory was supplied."""

    eval_ks: list
    series: dict
    mse: float | None = None
    rho_star: object = None
    mu_star_values: list = field(default_factory=list)

    def get(self, benchmark="dynamic", variant="regularized") -> RegretSeries:
        return self.series[(benchmark, variant)]


def regret_run(train, onpgd_config, is_config: IsSolverConfig, eval_stride: int, seed,
               include_static=False, test=None, rho_star_kwargs=None) -> RegretBundle:
    """Train online on ``train`` and measure regret on the subgrid.

    Dynamic benchmark: fresh prior samples are drawn per evaluation point
    from a substream keyed by the point's ordinal, so threading over trials
    or points cannot change results.  Static benchmark (include_static)
    solves the hindsight measure once from its own substream.  With
    ``test`` given, out-of-sample predictions are recorded during the run.
    """
    K = train.n_steps
    ks = eval_indices(K, eval_stride)
    result = run_online(
        train,
        onpgd_config,
        substream(seed, "onpgd") if not isinstance(seed, np.random.Generator) else seed,
        snapshot_every=eval_stride,
        predict_xs=test.x if test is not None else None,
    )
    snaps = dict(result.snapshots)
    missing = [k for k in ks if k not in snaps]
    if missing:
        raise RuntimeError(f"snapshot gap at evaluation indices {missing}")

    dim = train.x_dim + 2
    lam = onpgd_config.lam
    beta = onpgd_config.beta
    times = train.dt * np.asarray(ks, dtype=float)

    inst = {(b, v): np.empty(len(ks)) for b in BENCHMARKS for v in VARIANTS}
    mu_values = []

    static_solution = None
    if include_static:
        rng = substream(seed, "static-benchmark")
        samples = draw_prior_samples(is_config.n_is, dim, is_config.prior_var, rng)
        static_solution = solve_rho_star(train, samples, beta, **(rho_star_kwargs or {}))

    for j, k in enumerate(ks):
        z = (train.x[k - 1], train.y[k - 1])
        thetas = snaps[k]
        rng = substream(seed, "dynamic-benchmark", j)
        samples = draw_prior_samples(is_config.n_is, dim, is_config.prior_var, rng)
        try:
            m_star, mu_hat = solve_mu_star(samples, z, beta, is_config)
        except (BracketError, ConvergenceError) as exc:
            raise type(exc)(f"benchmark solve failed at subgrid index {j} (step {k}): {exc}") from exc
        mu_values.append(m_star)
        inst[("dynamic", "regularized")][j] = instantaneous_regret(thetas, mu_hat, z, lam, "regularized")
        inst[("dynamic", "unregularized")][j] = instantaneous_regret(thetas, mu_hat, z, lam, "unregularized")
        if include_static:
            rho = static_solution.measure
            inst[("static", "regularized")][j] = instantaneous_regret(thetas, rho, z, lam, "regularized")
            inst[("static", "unregularized")][j] = instantaneous_regret(thetas, rho, z, lam, "unregularized")

    series = {}
    benchmarks = BENCHMARKS if include_static else ("dynamic",)
    for b in benchmarks:
        for v in VARIANTS:
            series[(b, v)] = RegretSeries(
                times=times,
                instantaneous=inst[(b, v)].copy(),
                cumulative=cumulative_regret(times, inst[(b, v)]),
                variant=v,
                benchmark=b,
            )

    mse = oos_mse(result.extra_pred, test) if test is not None else None
    return RegretBundle(eval_ks=ks, series=series, mse=mse, rho_star=static_solution,
                        mu_star_values=mu_values)


def regret_to_csv(bundle: RegretBundle, path, trial=0, n_particles=None, beta=None, lam=None):
    """Write all series of a bundle as rows
    t, instantaneous, cumulative, variant, benchmark, trial, N, beta, lambda."""
    cols = ["t", "instantaneous", "cumulative", "variant", "benchmark",
            "trial", "N", "beta", "lambda"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for (b, v), s in sorted(bundle.series.items()):
            for t, i_val, c_val in zip(s.times, s.instantaneous, s.cumulative):
                w.writerow([repr(float(t)), repr(float(i_val)), repr(float(c_val)),
                            v, b, trial, n_particles, repr(beta) if beta is not None else "",
                            repr(lam) if lam is not None else ""])
