"""Closed-form constants of the convergence analysis, explored numerically.

Given bounds on the neuron, the data and the gradient, the analysis
produces an oscillation constant, a log-Sobolev rate alpha, a
Polyak-Lojasiewicz constant C_PL and a second-moment ceiling Q*.  The
interesting behavior: the PL condition only holds when alpha*beta^2 clears
the gradient-bound term, C_PL tends to 1/lambda as beta grows, and Q* is
not monotone in beta.
"""

import numpy as np

from mfonline.theory import BoundSpec, compute_constants

base = dict(c_sigma=0.1, c_z=0.1, c_1=0.1, lam=0.5, d=3)

print("beta sweep at", base)
print(f"{'beta':>8} {'c_osc':>10} {'alpha':>10} {'PL?':>5} {'C_PL':>12} {'Q*':>12}")
for beta in (0.01, 0.1, 1.0, 10.0, 1e3, 1e6):
    c = compute_constants(BoundSpec(beta=beta, **base))
    cpl = "-" if c.c_pl is None else f"{c.c_pl:.6g}"
    print(f"{beta:8g} {c.c_osc:10.4g} {c.alpha:10.4g} {str(c.pl_condition_holds):>5} "
          f"{cpl:>12} {c.q_star:12.5g}")

print()
print(f"large-beta limit: C_PL -> 1/lambda = {1 / base['lam']}")

# Q* turns from decreasing to increasing at beta = 4 c_sigma (c_sigma + c_z)
turn = 4 * base["c_sigma"] * (base["c_sigma"] + base["c_z"])
betas = np.linspace(0.2 * turn, 5 * turn, 9)
qs = [compute_constants(BoundSpec(beta=b, **base)).q_star for b in betas]
print(f"Q* along beta (turning point {turn:.3f}):")
for b, q in zip(betas, qs):
    print(f"  beta {b:7.4f}  Q* {q:9.5f}")

# the documented hand case: every constant checked to 1e-9 in the tests
c = compute_constants(BoundSpec(c_sigma=1.0, c_z=1.0, c_1=1.0, lam=1.0, beta=4.0, d=3))
print()
print(f"hand case: c_osc = {c.c_osc} (exactly 2), alpha = {c.alpha:.10f} "
      f"(0.25 e^-2 = {0.25 * np.exp(-2.0):.10f}), PL holds: {c.pl_condition_holds}")
