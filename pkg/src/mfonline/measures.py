"""Measures over parameter space and the instantaneous cost functional.

An ensemble of particles is the empirical measure (uniform weights); the
equilibrium solvers produce weighted sample measures.  The cost of a
measure rho at a data point z = (x, y) is

    U(rho, z) = m^2 - 2 y m + (lam / 2) <rho, |theta|^2>,   m = <rho, sigma(x, .)>

which differs from the squared prediction error (m - y)^2 + penalty by the
measure-independent constant y^2; cost_u_unreg drops the penalty term.
Entropy is not defined for sample measures and lives in the quadrature
code instead.
"""

from dataclasses import dataclass

import numpy as np

from .network import predict


@dataclass
class WeightedMeasure:
    """Sample measure: rows of samples (n, d) with probability weights."""

    samples: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a 2-d array (n, d)")
        if self.weights.shape != (self.samples.shape[0],):
            raise ValueError("weights must be a vector matching the sample count")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")

    def ess(self) -> float:
        """Effective sample size 1 / sum w_i^2."""
        return float(1.0 / np.sum(self.weights**2))


def _samples_weights(measure):
    if isinstance(measure, WeightedMeasure):
        return measure.samples, measure.weights
    thetas = np.asarray(measure, dtype=float)
    if thetas.ndim != 2:
        raise ValueError("ensemble must be a 2-d array (N, d)")
    return thetas, None


def _xy(z):
    if hasattr(z, "x") and hasattr(z, "y"):
        return np.atleast_1d(np.asarray(z.x, dtype=float)), float(z.y)
    x, y = z
    return np.atleast_1d(np.asarray(x, dtype=float)), float(y)


def second_moment(measure) -> float:
    """<rho, |theta|^2> for an ensemble array or weighted measure."""
    thetas, weights = _samples_weights(measure)
    sq = np.sum(thetas**2, axis=1)
    if weights is None:
        return float(sq.mean())
    return float(sq @ weights)


def cost_u(measure, z, lam: float) -> float:
    """Regularized instantaneous cost U(rho, z); see module docstring."""
    x, y = _xy(z)
    m = predict(measure, x)
    return m * m - 2.0 * y * m + 0.5 * lam * second_moment(measure)


def cost_u_unreg(measure, z) -> float:
    """Cost without the L2 penalty: m^2 - 2 y m."""
    x, y = _xy(z)
    m = predict(measure, x)
    return m * m - 2.0 * y * m


def oos_mse(predictions_or_snapshots, test) -> float:
    """Mean squared prediction error over a test trajectory.

    First argument is either a length-K array of per-step predictions
    (recorded during an online run) or a list of (k, thetas) snapshots that
    must cover every step 1..K; a coverage gap is an input error.
    """
    K = test.n_steps
    arr = predictions_or_snapshots
    if isinstance(arr, np.ndarray) or (
        isinstance(arr, (list, tuple)) and arr and np.isscalar(arr[0])
    ):
        preds = np.asarray(arr, dtype=float)
        if preds.shape != (K,):
            raise ValueError(f"need {K} predictions, got shape {preds.shape}")
    else:
        by_k = {int(k): thetas for k, thetas in arr}
        missing = [k for k in range(1, K + 1) if k not in by_k]
        if missing:
            raise ValueError(
                f"snapshots must cover every test step; first gap at k={missing[0]}"
            )
        preds = np.array([predict(by_k[k], test.x[k - 1]) for k in range(1, K + 1)])
    return float(np.mean((preds - test.y) ** 2))
