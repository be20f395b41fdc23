"""
Checking the norm by simulation
===============================

The norm is the supremum of ``||y|| / ||u||`` over inputs, so simulating any
particular input gives a lower bound. Euler-Maruyama with many paths
estimates the output energy.
"""

import numpy as np
from stochinf import mc_norm_lower_bound, stoch_hinf_norm
from stochinf.problems import scalar_system

sys = scalar_system(-1.0, 1.0, 1.0, 1.0)
norm = stoch_hinf_norm(sys, tol=1e-6).norm

# slow inputs do best for this low-pass system; the ratio creeps up with the horizon
for horizon in [5.0, 20.0, 80.0]:
    u = lambda t, T=horizon: np.sin(np.pi * t / T)
    est = mc_norm_lower_bound(sys, u, horizon, 1e-2, n_paths=4000, seed=1)
    print(f"T = {horizon:5.1f}:  ratio {est.ratio:.4f} +- {est.stderr:.4f}   (norm {norm:.4f})")
