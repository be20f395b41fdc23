"""
Heat equation with a noisy Robin boundary
=========================================

The unit square is heated through three edges and loses heat through the
fourth at a randomly fluctuating rate. The output is the mean temperature.
The norm shrinks slowly as the grid is refined.
"""

from stochinf import ms_stable_fast, stoch_hinf_norm
from stochinf.problems import heat_system

for k in range(5, 11):
    sys = heat_system(k)
    r = stoch_hinf_norm(sys, tol=1e-5)
    print(f"k = {k:2d}  n = {sys.n:3d}  stable {ms_stable_fast(sys.A, sys.Nx)}  "
          f"norm {r.norm:.4f}  (noise-free {r.det_hinf:.4f})  {r.timings['total']:.1f} s")
