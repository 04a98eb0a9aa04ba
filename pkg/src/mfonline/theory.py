"""Closed-form constants from the convergence analysis, made checkable.

Given envelope bounds C_sigma (neuron sup norm), C_z (response sup norm),
C_1 (neuron gradient growth constant) and the run parameters lam, beta,
dimension d, the analysis yields explicit constants:

    C_osc      = (4 / beta) (C_sigma^2 + C_z C_sigma)
    alpha      = (lam / beta) exp(-C_osc)
    PL holds iff alpha beta^2 > 8 C_sigma^2 C_1^2, and then
    C_PL       = (2 C_sigma^2 + beta) / (alpha beta^2 - 8 C_sigma^2 C_1^2)
    Q*         = (beta d / lam) exp(C_osc)
    lambda_dc  = 2 (C_sigma + C_z) * hess_bound

hess_bound is the caller-supplied sup operator norm of the neuron Hessian
in theta (it depends on the truncation regime, so no default is honest;
lambda_dc is None when it is not given).  As beta grows, C_osc vanishes
and C_PL tends to 1 / lam.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundSpec:
    """Envelope constants and run parameters for the bound formulas."""

    c_sigma: float
    c_z: float
    c_1: float
    lam: float
    beta: float
    d: int
    hess_bound: float | None = None

    def __post_init__(self):
        for name in ("c_sigma", "c_z", "c_1", "lam", "beta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d < 1:
            raise ValueError("d must be a positive dimension")
        if self.hess_bound is not None and self.hess_bound < 0:
            raise ValueError("hess_bound must be nonnegative")


@dataclass(frozen=True)
class TheoryConstants:
    c_osc: float
    alpha: float
    pl_condition_holds: bool
    c_pl: float | None
    q_star: float
    lambda_dc: float | None


def compute_constants(spec: BoundSpec) -> TheoryConstants:
    """Evaluate the constants for one BoundSpec; see module docstring.

    exp(C_osc) can overflow for tiny beta; Q* is then +inf, which keeps
    every Q*-based bound trivially true and is reported as is.
    """
    c_osc = (4.0 / spec.beta) * (spec.c_sigma**2 + spec.c_z * spec.c_sigma)
    alpha = (spec.lam / spec.beta) * math.exp(-c_osc)
    gap = alpha * spec.beta**2 - 8.0 * spec.c_sigma**2 * spec.c_1**2
    holds = gap > 0
    c_pl = (2.0 * spec.c_sigma**2 + spec.beta) / gap if holds else None
    with np.errstate(over="ignore"):
        q_star = float((spec.beta * spec.d / spec.lam) * np.exp(c_osc))
    lambda_dc = None
    if spec.hess_bound is not None:
        lambda_dc = 2.0 * (spec.c_sigma + spec.c_z) * spec.hess_bound
    return TheoryConstants(
        c_osc=c_osc,
        alpha=alpha,
        pl_condition_holds=holds,
        c_pl=c_pl,
        q_star=q_star,
        lambda_dc=lambda_dc,
    )


@dataclass
class MomentAudit:
    """Observed equilibrium second moment versus its Q* ceiling."""

    observed: float
    q_star: float
    holds: bool


def check_empirical_moment_bound(measure, spec: BoundSpec) -> MomentAudit:
    """Audit <mu, |theta|^2> <= Q* for a solved equilibrium measure.

    Only meaningful when the sigma values fed to the solver really were
    bounded by spec.c_sigma (truncated neurons); the caller owns that.
    """
    from .measures import second_moment

    observed = second_moment(measure)
    q_star = compute_constants(spec).q_star
    return MomentAudit(observed=observed, q_star=q_star, holds=bool(observed <= q_star))
