"""
Norm of a scalar system
=======================

For ``dx = (a x + b u) dt + n x dw``, ``y = c x`` the Riccati equation is a
quadratic in one unknown, and the norm is the level at which it first has a
real root: ``2 |b c| / (-2 a - n^2)``.
"""

import numpy as np
from stochinf import det_hinf_norm, stoch_hinf_norm
from stochinf.problems import scalar_system

a, n, b, c = -1.0, 1.0, 1.0, 1.0
sys = scalar_system(a, n, b, c)

report = stoch_hinf_norm(sys, tol=1e-8)
print("closed form   ", 2 * abs(b * c) / (-2 * a - n ** 2))
print("bisection     ", report.norm)
print("bracket       ", report.gamma_lo, report.gamma_hi)

# without noise the same system has half the gain
print("noise-free    ", det_hinf_norm(sys.A, sys.B, sys.C))

# every midpoint tried by the bisection, with the Newton verdict
for step in report.bracket_history[:8]:
    print(f"  gamma = {step.gamma:.8f}  {step.status:<13}  {step.newton_iters} steps")

# the noise intensity pushes the norm up until mean-square stability is lost at n^2 = 2
for n in np.linspace(0.0, 1.35, 6):
    r = stoch_hinf_norm(scalar_system(a, n, b, c), tol=1e-6)
    print(f"n = {n:.2f}   norm = {r.norm:.6f}")
