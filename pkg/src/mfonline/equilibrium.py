"""Equilibrium and hindsight benchmark measures, plus identity verifiers.

Two Gibbs-type benchmarks are solved by importance sampling from the prior
N(0, prior_var I_d):

* the instantaneous equilibrium for one data point z = (x, y).  Its mean
  prediction m* satisfies the scalar fixed point m = Phi(m) where Phi
  reweights prior samples by exp(-(2/beta) (m - y) sigma(x, theta)).  Phi
  is nonincreasing with slope <= 0, so g(m) = Phi(m) - m crosses zero
  exactly once and bisection is safe.

* the hindsight measure for a whole trajectory, reweighting by the
  time-averaged tilt exp(-(2/(beta T)) sum_k (u_k - y_k) sigma(x_k, theta) dt)
  where u_k is the measure's own prediction at x_k; solved by damped
  fixed-point iteration on the vector u.

A deterministic 1-d Simpson quadrature oracle solves the same equilibrium
for single-parameter neurons sigma(x, theta) = tanh(theta x) and backs the
closed-form identity checks: the free-energy gap decomposition and the
equilibrium prediction's response derivative.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .measures import WeightedMeasure
from .network import sigma_many


class LowEssWarning(RuntimeWarning):
    """Importance weights have effective sample size below the flag level."""


class BracketError(RuntimeError):
    """Root bracketing failed after the allowed expansions."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration did not reach tolerance; carries the trace."""

    def __init__(self, message, residual_trace=None):
        super().__init__(message)
        self.residual_trace = residual_trace or []


class GridTooNarrowError(ValueError):
    """Quadrature grid endpoints carry non-negligible density mass."""


@dataclass(frozen=True)
class IsSolverConfig:
    """Importance-sampling solver knobs; prior_var is beta / lam."""

    prior_var: float
    n_is: int = 20000
    root_tol: float = 1e-10
    max_bracket_expansions: int = 60
    ess_warn: float = 10.0

    def __post_init__(self):
        if self.prior_var <= 0:
            raise ValueError("prior_var must be positive")
        if self.n_is < 2:
            raise ValueError("n_is must be >= 2")
        if self.root_tol <= 0:
            raise ValueError("root_tol must be positive")


def draw_prior_samples(n: int, dim: int, prior_var: float, rng) -> np.ndarray:
    """n iid samples from N(0, prior_var I_dim), shape (n, dim)."""
    return np.sqrt(prior_var) * rng.standard_normal((n, dim))


def default_sigma_fn(x, samples) -> np.ndarray:
    """Neuron values for samples (n, d): full tanh network when d >= 3,
    the single-parameter neuron tanh(theta * x) when d == 1."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must be (n, d)")
    if samples.shape[1] == 1:
        x = np.asarray(x, dtype=float).reshape(())
        return np.tanh(float(x) * samples[:, 0])
    if samples.shape[1] >= 3:
        return sigma_many(x, samples)
    raise ValueError("d == 2 has no default neuron; pass sigma_fn explicitly")


def _xy(z):
    if hasattr(z, "x") and hasattr(z, "y"):
        return z.x, float(z.y)
    x, y = z
    return x, float(y)


def importance_weights(exponents, ess_warn=None) -> np.ndarray:
    """Normalized weights exp(exponents) / sum, max-shifted for stability."""
    exponents = np.asarray(exponents, dtype=float)
    w = np.exp(exponents - logsumexp(exponents))
    if ess_warn is not None:
        ess = 1.0 / np.sum(w**2)
        if ess < ess_warn:
            warnings.warn(
                f"importance weights degenerate: ESS {ess:.2f} < {ess_warn}",
                LowEssWarning,
                stacklevel=2,
            )
    return w


def _phi_from_vals(m, svals, y, beta, ess_warn=None):
    w = importance_weights(-(2.0 / beta) * (m - y) * svals, ess_warn)
    return float(w @ svals), w


def phi_hat(m, samples, z, beta, sigma_fn=None, ess_warn=10.0) -> float:
    """Sample fixed-point map: reweighted mean prediction at tilt level m."""
    x, y = _xy(z)
    svals = (sigma_fn or default_sigma_fn)(x, samples)
    val, _ = _phi_from_vals(float(m), svals, y, beta, ess_warn)
    return val


def _bisect_fixed_point(phi, lo, hi, root_tol, max_expansions, max_iters=300):
    """Root of g(m) = phi(m) - m for nonincreasing phi; returns m with
    |g(m)| <= root_tol.  Expands the bracket geometrically if needed."""
    g_lo, g_hi = phi(lo) - lo, phi(hi) - hi
    expansions = 0
    while g_lo < 0 or g_hi > 0:
        if expansions >= max_expansions:
            raise BracketError(
                f"no sign change in [{lo}, {hi}] after {expansions} expansions: "
                f"g(lo)={g_lo:.3e}, g(hi)={g_hi:.3e}"
            )
        width = hi - lo
        lo, hi = lo - width, hi + width
        g_lo, g_hi = phi(lo) - lo, phi(hi) - hi
        expansions += 1
    if abs(g_lo) <= root_tol:
        return lo
    if abs(g_hi) <= root_tol:
        return hi
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        g_mid = phi(mid) - mid
        if abs(g_mid) <= root_tol:
            return mid
        if g_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 4.0 * np.finfo(float).eps * max(1.0, abs(mid)):
            return mid
    raise ConvergenceError(f"bisection stalled: interval [{lo}, {hi}]")


def solve_mu_star(samples, z, beta, config: IsSolverConfig, sigma_fn=None, phi_sign=1.0):
    """Instantaneous equilibrium from prior samples at one data point.

    Returns (m_star, measure): the fixed-point prediction and the weighted
    sample measure at that tilt.  Post: the measure's reweighted mean
    prediction reproduces m_star within config.root_tol.

    phi_sign is a negative-control hook: -1.0 flips the sign of the
    fixed-point map, which any downstream cross-validation must catch.
    """
    x, y = _xy(z)
    samples = np.asarray(samples, dtype=float)
    svals = (sigma_fn or default_sigma_fn)(x, samples)
    lo = float(svals.min()) - 1.0
    hi = float(svals.max()) + 1.0

    def phi(m):
        val, _ = _phi_from_vals(m, svals, y, beta, None)
        return phi_sign * val

    m_star = _bisect_fixed_point(phi, lo, hi, config.root_tol, config.max_bracket_expansions)
    _, w = _phi_from_vals(m_star, svals, y, beta, config.ess_warn)
    return m_star, WeightedMeasure(samples=samples, weights=w)


@dataclass
class RhoStarSolution:
    """Hindsight measure: predictions u along the trajectory, the weighted
    sample measure, and the fixed-point iteration diagnostics."""

    u: np.ndarray
    measure: object
    residual: float
    n_iters: int
    residual_trace: list = field(default_factory=list)


def solve_rho_star(traj, samples, beta, damping=0.5, tol=1e-6, max_iters=500,
                   sigma_fn=None, ess_warn=10.0) -> RhoStarSolution:
    """Hindsight benchmark over a whole trajectory by damped fixed point.

    The tilt integral uses one rectangle of width dt per data point, and
    T = K dt, so the per-sample exponent is -(2 / (beta K)) sum_k
    (u_k - y_k) sigma(x_k, theta_i).  Iterates
    u <- (1 - delta) u + delta U(u) from u = 0 until the fixed-point
    residual max_k |U(u)_k - u_k| falls below tol.

    The step is u + delta (U(u) - u), which is gradient descent with step
    delta on the strictly convex merit
        H(u) = |u|^2 / 2 + (beta K / 2) logsumexp_i(-(2/(beta K)) S_i (u - y)),
    whose gradient is exactly u - U(u).  A fixed delta can cycle when the
    tilt is strong (the map is not a contraction at small beta), so delta
    starts at ``damping`` each iteration and backtracks until H decreases;
    that keeps the iteration form and makes it globally convergent.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must be in (0, 1]")
    samples = np.asarray(samples, dtype=float)
    K = traj.n_steps
    fn = sigma_fn or default_sigma_fn
    S = np.empty((samples.shape[0], K))
    for k in range(K):
        S[:, k] = fn(traj.x[k], samples)
    coef = -2.0 / (beta * K)
    scale = 0.5 * beta * K

    def merit_and_map(u):
        expo = coef * (S @ (u - traj.y))
        h = 0.5 * float(u @ u) + scale * float(logsumexp(expo))
        w = np.exp(expo - logsumexp(expo))
        return h, S.T @ w

    u = np.zeros(K)
    h, u_map = merit_and_map(u)
    trace = []
    for it in range(1, max_iters + 1):
        r = u_map - u  # = -grad H
        residual = float(np.max(np.abs(r)))
        trace.append(residual)
        if residual <= tol:
            w_final = importance_weights(coef * (S @ (u - traj.y)), ess_warn)
            measure = WeightedMeasure(samples=samples, weights=w_final)
            return RhoStarSolution(
                u=u, measure=measure, residual=residual, n_iters=it, residual_trace=trace
            )
        gg = float(r @ r)
        delta = damping
        for _ in range(60):
            h_new, map_new = merit_and_map(u + delta * r)
            if h_new <= h - 1e-4 * delta * gg:
                break
            delta *= 0.5
        u = u + delta * r
        h, u_map = h_new, map_new
    raise ConvergenceError(
        f"hindsight fixed point: residual {trace[-1]:.3e} > tol {tol} "
        f"after {max_iters} iterations",
        residual_trace=trace,
    )


# ---------------------------------------------------------------------------
# 1-d Simpson quadrature oracle (single-parameter neurons tanh(theta x))
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform 1-d grid for composite Simpson; n_points must be odd >= 3."""

    lo: float
    hi: float
    n_points: int = 2001

    def __post_init__(self):
        if self.hi <= self.lo:
            raise ValueError("need lo < hi")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError("composite Simpson needs an odd n_points >= 3")

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    def integrate(self, vals) -> float:
        """Composite Simpson rule over the grid."""
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (self.n_points,):
            raise ValueError("values must match the grid")
        w = np.ones(self.n_points)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return float((self.h / 3.0) * (w @ vals))


def _log_tilted_density(grid, z, beta, lam, m):
    """Unnormalized log density -lam th^2 / (2 beta) - (2/beta)(m - y) s(th)."""
    x, y = _xy(z)
    th = grid.thetas
    s = np.tanh(float(np.asarray(x).reshape(())) * th)
    return -lam * th**2 / (2.0 * beta) - (2.0 / beta) * (m - y) * s, s


def solve_mu_star_quadrature(z, beta, lam, grid: QuadratureGrid, root_tol=1e-10):
    """Deterministic equilibrium solve on a 1-d grid.

    Returns (m_star, density) with the density Simpson-normalized on the
    grid.  Raises GridTooNarrowError when the endpoint density exceeds
    1e-12 of the peak, which would invalidate the integrals.
    """

    def phi(m):
        logq, s = _log_tilted_density(grid, z, beta, lam, m)
        q = np.exp(logq - logq.max())
        return grid.integrate(s * q) / grid.integrate(q)

    s_end = np.tanh(float(np.asarray(_xy(z)[0]).reshape(())) * grid.thetas)
    lo = float(s_end.min()) - 1.0
    hi = float(s_end.max()) + 1.0
    m_star = _bisect_fixed_point(phi, lo, hi, root_tol, max_expansions=60)

    logq, _ = _log_tilted_density(grid, z, beta, lam, m_star)
    q = np.exp(logq - logq.max())
    if q[0] > 1e-12 or q[-1] > 1e-12:
        raise GridTooNarrowError(
            f"endpoint density {max(q[0], q[-1]):.2e} of peak exceeds 1e-12; widen the grid"
        )
    density = q / grid.integrate(q)
    return m_star, density


def quadrature_free_energy(density, z, beta, lam, grid: QuadratureGrid) -> float:
    """F(rho) = m^2 - 2 y m + (lam/2) <rho, th^2> + beta int rho log rho.

    density must be nonnegative and Simpson-normalized on the grid within
    1e-8; the entropy integrand uses 0 log 0 = 0.
    """
    density = np.asarray(density, dtype=float)
    x, y = _xy(z)
    if np.any(density < -1e-12):
        raise ValueError("density must be nonnegative")
    total = grid.integrate(density)
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"density not normalized: integral {total!r}")
    th = grid.thetas
    s = np.tanh(float(np.asarray(x).reshape(())) * th)
    m = grid.integrate(s * density)
    moment = grid.integrate(th**2 * density)
    pos = density > 0
    ent_vals = np.zeros_like(density)
    ent_vals[pos] = density[pos] * np.log(density[pos])
    entropy_int = grid.integrate(ent_vals)
    return m * m - 2.0 * y * m + 0.5 * lam * moment + beta * entropy_int


@dataclass
class GapReport:
    lhs: float
    rhs: float
    abs_diff: float
    m_rho: float
    m_star: float


def verify_gap_decomposition(density, z, beta, lam, grid: QuadratureGrid) -> GapReport:
    """Check F(rho) - F(mu*) = (m_rho - m*)^2 + beta KL(rho || mu*).

    rho is a strictly positive normalized density on the grid.  Both sides
    are computed by Simpson quadrature with log-space KL for stability.
    """
    density = np.asarray(density, dtype=float)
    if np.any(density <= 0):
        raise ValueError("gap decomposition needs a strictly positive density")
    m_star, mu_density = solve_mu_star_quadrature(z, beta, lam, grid, root_tol=1e-12)

    f_rho = quadrature_free_energy(density, z, beta, lam, grid)
    f_mu = quadrature_free_energy(mu_density, z, beta, lam, grid)
    lhs = f_rho - f_mu

    x, y = _xy(z)
    s = np.tanh(float(np.asarray(x).reshape(())) * grid.thetas)
    m_rho = grid.integrate(s * density)

    logq, _ = _log_tilted_density(grid, z, beta, lam, m_star)
    shift = logq.max()
    log_z = np.log(grid.integrate(np.exp(logq - shift))) + shift
    log_mu = logq - log_z
    kl = grid.integrate(density * (np.log(density) - log_mu))
    rhs = (m_rho - m_star) ** 2 + beta * kl
    return GapReport(lhs=lhs, rhs=rhs, abs_diff=abs(lhs - rhs), m_rho=m_rho, m_star=m_star)


@dataclass
class DyReport:
    analytic: float
    finite_diff: float
    abs_diff: float


def verify_dym_formula(z, beta, lam, grid: QuadratureGrid, fd_step=1e-4) -> DyReport:
    """Check d m* / d y = 2 Var(sigma) / (beta + 2 Var(sigma)) at mu*.

    The variance is computed under the quadrature equilibrium at z; the
    derivative is compared against a central difference in y.
    """
    x, y = _xy(z)
    m_star, density = solve_mu_star_quadrature(z, beta, lam, grid, root_tol=1e-12)
    s = np.tanh(float(np.asarray(x).reshape(())) * grid.thetas)
    var = grid.integrate(s**2 * density) - m_star**2
    analytic = 2.0 * var / (beta + 2.0 * var)

    m_plus, _ = solve_mu_star_quadrature((x, y + fd_step), beta, lam, grid, root_tol=1e-12)
    m_minus, _ = solve_mu_star_quadrature((x, y - fd_step), beta, lam, grid, root_tol=1e-12)
    fd = (m_plus - m_minus) / (2.0 * fd_step)
    return DyReport(analytic=analytic, finite_diff=fd, abs_diff=abs(analytic - fd))


def measure_to_csv(measure, path):
    """Write a weighted sample measure as sample_id, theta_0.., weight rows."""
    import csv

    samples = np.asarray(measure.samples, dtype=float)
    weights = np.asarray(measure.weights, dtype=float)
    cols = ["sample_id"] + [f"theta_{j}" for j in range(samples.shape[1])] + ["weight"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(samples.shape[0]):
            w.writerow([i] + [repr(float(v)) for v in samples[i]] + [repr(float(weights[i]))])
