"""
Mean-square stability
=====================

(A, N) is mean-square stable when ``X -> A^T X + X A + N^T X N`` has its
spectrum in the open left half-plane. The cheap test checks that A is
Hurwitz and that the power method gives ``rho(L_A^{-1} Pi_N) < 1``; the
reference test forms the ``n^2 x n^2`` Kronecker matrix.
"""

import numpy as np
from stochinf import GLyapOperator, kron_materialize, ms_stable_fast, ms_stable_oracle
from stochinf import spectral_abscissa, spectral_radius_power
from stochinf.problems import random_system

sys = random_system(6, seed=1)
A, N = sys.A, sys.Nx[0]
print("abscissa of A  ", spectral_abscissa(A))

# scaling N by s scales rho by s^2, so stability is lost at s = 1/sqrt(rho)
rho, its, _ = spectral_radius_power(A, [N])
print(f"rho = {rho:.6f} after {its} power steps, critical scale {1 / np.sqrt(rho):.4f}")

for s in [0.5, 1.0, 1.3, 1 / np.sqrt(rho) * 0.999, 1 / np.sqrt(rho) * 1.001, 2.0]:
    alpha = spectral_abscissa(kron_materialize(GLyapOperator(A, [s * N])))
    print(f"scale {s:.4f}:  fast {ms_stable_fast(A, [s * N])!s:<5}  "
          f"oracle {ms_stable_oracle(A, [s * N])!s:<5}  kronecker abscissa {alpha:+.4f}")
