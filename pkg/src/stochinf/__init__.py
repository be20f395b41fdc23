"""Stochastic H-infinity norm of linear systems with multiplicative noise.

The norm is the L2-induced input-output gain of

    dx = (A x + B u) dt + sum_j (Nx_j x + Nu_j u) dw_j,    y = C x + D u,

computed by bisection over gamma, with Newton's method deciding whether the
parametrized Riccati equation has a stabilizing solution at each gamma.

Matrices are plain ``numpy.ndarray`` objects. Whenever a matrix is flattened
into a vector (Kronecker forms, Krylov solvers) the column-stacking
convention ``vec(X) = X.flatten(order="F")`` is used throughout.
"""

from .linalg import (
    LyapunovSolver,
    NotPSD,
    SingularLyapunov,
    lyap_solve,
    operator_2norm,
    pseudoinverse,
    spectral_abscissa,
    sym_eig,
    symmetrize,
)
from .operators import (
    GLyapOperator,
    StochasticSystem,
    kron_materialize,
    ms_stable_fast,
    ms_stable_oracle,
    spectral_radius_power,
)
from .glyap import (
    MSUnstable,
    NonConverged,
    controllability_gramian,
    solve_accelerated,
    solve_fixed_point,
)
from .riccati import (
    NewtonOutcome,
    QIndefinite,
    RiccatiProblem,
    Status,
    deterministic_smallest_solution,
    frechet_operator,
    gain,
    newton_solve,
    riccati_eval,
)
from .hinf import (
    BracketError,
    NormReport,
    det_hinf_norm,
    gamma_bracket,
    profile,
    stoch_hinf_norm,
)
from .problems import heat_system, mc_norm_lower_bound, random_system

__version__ = "0.1.0"
