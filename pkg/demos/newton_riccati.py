"""
Newton's method for the Riccati equation
========================================

Above the norm, Newton from ``X_0 = 0`` produces a decreasing sequence that
converges to the stabilizing solution. Below the norm the derivative loses
stability at some step and the run stops with a status instead.
"""

import numpy as np
from stochinf import RiccatiProblem, newton_solve, stoch_hinf_norm
from stochinf.problems import random_system

sys = random_system(5, 2, 2, seed=8)
norm = stoch_hinf_norm(sys, tol=1e-6).norm
print(f"norm = {norm:.6f}")

for gamma in [3 * norm, 1.01 * norm, 0.99 * norm]:
    out = newton_solve(RiccatiProblem(sys, gamma))
    print(f"\ngamma = {gamma:.5f}: {out.status.value} after {out.k} steps")
    print("  residuals        ", " ".join(f"{r:.1e}" for r in out.residuals))
    print("  max eig of steps ", " ".join(f"{e:+.1e}" for e in out.step_max_eig))
    print(f"  rho = {out.rho_final:.4f}, abscissa = {out.alpha_final:.4f}")
    if out.converged:
        print("  largest eigenvalue of X+", np.linalg.eigvalsh(out.X)[-1])
