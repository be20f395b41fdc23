"""
Generalized Lyapunov equations
==============================

Each Newton step solves ``Ac^T D + D Ac + N^T D N = Q``. The fixed-point
iteration contracts at rate rho, so it slows down as rho approaches 1;
preconditioned GMRES does not care much.
"""

import time

import numpy as np
from stochinf import GLyapOperator, spectral_radius_power
from stochinf.glyap import solve_accelerated, solve_fixed_point
from stochinf.problems import random_system

sys = random_system(10, seed=4)
A, N = sys.A, sys.Nx[0]
rho0, _, _ = spectral_radius_power(A, [N])
Q = -np.eye(10)

for target in [0.3, 0.9, 0.99, 0.999]:
    op = GLyapOperator(A, [N * np.sqrt(target / rho0)])
    t0 = time.perf_counter()
    D1, info1 = solve_fixed_point(op, Q, maxit=100_000, return_info=True)
    t1 = time.perf_counter()
    D2, info2 = solve_accelerated(op, Q, return_info=True)
    t2 = time.perf_counter()
    diff = np.linalg.norm(D1 - D2) / np.linalg.norm(D2)
    print(f"rho = {target:<6} fixed point {info1['iterations']:>6} steps {t1 - t0:6.3f} s | "
          f"GMRES {info2['iterations']:>4} steps {t2 - t1:6.3f} s | rel. difference {diff:.1e}")
