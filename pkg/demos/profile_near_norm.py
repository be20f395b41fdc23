"""
Spectral data close to the norm
===============================

At the stabilizing solution X+(gamma) the derivative of the Riccati map is a
generalized Lyapunov operator. As gamma decreases to the norm its spectral
abscissa rises to 0, while rho only changes a little, so neither quantity
is a handy predictor of the norm.
"""

import numpy as np
from stochinf import profile, stoch_hinf_norm
from stochinf.problems import heat_system

sys = heat_system(5)
norm = stoch_hinf_norm(sys, tol=1e-6).norm
gammas = norm + np.array([1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0, 2.0])

print(f"norm = {norm:.6f}")
print(" gamma       rho        alpha")
for p in profile(sys, gammas):
    print(f"{p.gamma:.5f}  {p.rho:.6f}  {p.alpha:10.4f}  {p.status}")
