"""Lyapunov-type operators and mean-square stability tests.

``L_A : X -> A^T X + X A`` and ``Pi_N : X -> sum_j N_j^T X N_j`` act on
symmetric matrices. Their sum is the generalized Lyapunov operator, which is
also the Frechet derivative of the Riccati map at a point.
"""

from dataclasses import dataclass, field
import functools
import logging

import numpy as np

from .linalg import LyapunovSolver, as_matrix, as_square, fro_norm, spectral_abscissa, symmetrize

__all__ = [
    "GLyapOperator",
    "StochasticSystem",
    "apply",
    "apply_adjoint",
    "kron_materialize",
    "ms_stable_fast",
    "ms_stable_oracle",
    "spectral_radius_power",
    "KRON_GUARD",
]

logger = logging.getLogger(__name__)

#: largest admissible ``n**2`` for dense Kronecker materialization
KRON_GUARD = 4096

#: power-method estimates in ``[1 - margin, 1 + margin]`` count as unstable
STABILITY_MARGIN = 1e-8


def _as_list(Ns, name):
    if Ns is None:
        return []
    if isinstance(Ns, np.ndarray) and Ns.ndim == 2:
        Ns = [Ns]
    return [as_matrix(N, name) for N in Ns]


@dataclass(frozen=True)
class StochasticSystem:
    """Linear system with multiplicative white noise.

    ``dx = (A x + B u) dt + sum_j (Nx[j] x + Nu[j] u) dw_j``, ``y = C x + D u``.

    `Nu` may be omitted, in which case it is all zeros (state-only noise).
    A single ``Nx`` matrix is accepted in place of a list.
    """

    A: np.ndarray
    Nx: list
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = None
    Nu: list = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        A = as_square(self.A, "A")
        n = A.shape[0]
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        if B.shape[0] != n:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise ValueError(f"C has {C.shape[1]} columns, expected {n}")
        m, p = B.shape[1], C.shape[0]
        D = np.zeros((p, m)) if self.D is None else as_matrix(self.D, "D")
        if D.shape != (p, m):
            raise ValueError(f"D has shape {D.shape}, expected {(p, m)}")
        Nx = _as_list(self.Nx, "Nx")
        if not Nx:
            Nx = [np.zeros((n, n))]
        for N in Nx:
            if N.shape != (n, n):
                raise ValueError(f"Nx entry has shape {N.shape}, expected {(n, n)}")
        Nu = _as_list(self.Nu, "Nu")
        if not Nu:
            Nu = [np.zeros((n, m)) for _ in Nx]
        if len(Nu) != len(Nx):
            raise ValueError(f"{len(Nx)} state noise terms but {len(Nu)} input noise terms")
        for N in Nu:
            if N.shape != (n, m):
                raise ValueError(f"Nu entry has shape {N.shape}, expected {(n, m)}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "Nx", Nx)
        object.__setattr__(self, "Nu", Nu)

    @classmethod
    def basic(cls, A, N, B, C, D=None, name=""):
        """One state-noise term and no input noise."""
        return cls(A=A, Nx=[N], B=B, C=C, D=D, name=name)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def nu(self):
        return len(self.Nx)

    @property
    def has_input_noise(self):
        return any(np.any(N != 0) for N in self.Nu)

    def deterministic(self):
        """The same system with all noise terms removed."""
        return StochasticSystem(A=self.A, Nx=[np.zeros_like(self.A)], B=self.B, C=self.C,
                                D=self.D, name=self.name)

    def open_loop_operator(self):
        return GLyapOperator(self.A, self.Nx)


@dataclass(frozen=True)
class GLyapOperator:
    """``X -> Ac^T X + X Ac + sum_j Njs[j]^T X Njs[j]``."""

    Ac: np.ndarray
    Njs: list

    @classmethod
    def from_arrays(cls, Ac, Njs):
        """Build without validation from float arrays of matching shape."""
        op = object.__new__(cls)
        object.__setattr__(op, "Ac", Ac)
        object.__setattr__(op, "Njs", list(Njs))
        return op

    def __post_init__(self):
        Ac = as_square(self.Ac, "Ac")
        Njs = _as_list(self.Njs, "Njs") or [np.zeros_like(Ac)]
        for N in Njs:
            if N.shape != Ac.shape:
                raise ValueError(f"noise matrix has shape {N.shape}, expected {Ac.shape}")
        object.__setattr__(self, "Ac", Ac)
        object.__setattr__(self, "Njs", Njs)

    @property
    def n(self):
        return self.Ac.shape[0]

    def pi(self, X):
        """The noise part ``sum_j N_j^T X N_j``."""
        N0 = self.Njs[0]
        out = N0.T @ X @ N0
        for N in self.Njs[1:]:
            out += N.T @ X @ N
        return out

    def pi_adjoint(self, X):
        N0 = self.Njs[0]
        out = N0 @ X @ N0.T
        for N in self.Njs[1:]:
            out += N @ X @ N.T
        return out

    @functools.cached_property
    def _noise_free(self):
        return all(not np.any(N) for N in self.Njs)

    def is_noise_free(self):
        return self._noise_free

    def transpose(self):
        """Operator whose forward action is the adjoint of this one."""
        return GLyapOperator(self.Ac.T, [N.T for N in self.Njs])


def _check_arg(op, X):
    X = np.asarray(X, dtype=float)
    if X.shape != (op.n, op.n):
        raise ValueError(f"argument has shape {X.shape}, expected {(op.n, op.n)}")
    return X


def apply(op, X):
    X = _check_arg(op, X)
    Ac = op.Ac
    return symmetrize(Ac.T @ X + X @ Ac + op.pi(X))


def apply_adjoint(op, X):
    """Adjoint with respect to ``<X, Y> = trace(X^T Y)``."""
    X = _check_arg(op, X)
    Ac = op.Ac
    return symmetrize(Ac @ X + X @ Ac.T + op.pi_adjoint(X))


def _check_guard(n):
    if n * n > KRON_GUARD:
        raise ValueError(f"Kronecker materialization needs n^2 <= {KRON_GUARD}, got n = {n}")


def kron_lyapunov(Ac):
    """Matrix of ``X -> Ac^T X + X Ac`` acting on column-stacked ``vec(X)``."""
    n = Ac.shape[0]
    _check_guard(n)
    eye = np.eye(n)
    return np.kron(eye, Ac.T) + np.kron(Ac.T, eye)


def kron_pi(Njs, n):
    _check_guard(n)
    K = np.zeros((n * n, n * n))
    for N in Njs:
        K += np.kron(N.T, N.T)
    return K


def kron_materialize(op):
    """Dense ``n^2 x n^2`` matrix `K` with ``K vec(X) = vec(apply(op, X))``.

    Uses ``vec(M X N) = (N^T kron M) vec(X)`` with column stacking.
    """
    return kron_lyapunov(op.Ac) + kron_pi(op.Njs, op.n)


def ms_stable_oracle(A, Nx):
    """Mean-square stability from the spectrum of the dense Kronecker matrix."""
    op = GLyapOperator(A, Nx)
    return spectral_abscissa(kron_materialize(op)) < 0


def spectral_radius_power(Ac, Njs, tol=1e-9, maxit=10_000, solver=None):
    """Spectral radius of ``-L_Ac^{-1} Pi_N`` by the power method.

    The map sends positive semidefinite matrices to positive semidefinite
    matrices, so iterating from ``P_0 = I`` stays in that cone. The iterate
    is renormalized to unit Frobenius norm at every step, and the Rayleigh
    quotient ``trace(P_k P_{k+1}) / trace(P_k P_k)`` is the estimate.

    Parameters
    ----------
    Ac
        Hurwitz matrix (not checked here), or a :class:`GLyapOperator`, in
        which case `Njs` is ignored.
    Njs
        Noise matrices.
    tol
        Stop when consecutive estimates differ by at most
        ``tol * max(rho, 1)``.
    maxit
        Iteration cap.
    solver
        Optional pre-factored :class:`LyapunovSolver` for `Ac`.

    Returns
    -------
    rho, iterations, converged
    """
    op = Ac if isinstance(Ac, GLyapOperator) else GLyapOperator(Ac, Njs)
    if op.is_noise_free():
        return 0.0, 1, True
    if solver is None:
        solver = LyapunovSolver(op.Ac)
    n = op.n
    P = np.eye(n) / np.sqrt(n)
    rho_prev = None
    rho = 0.0
    for k in range(1, maxit + 1):
        P_next = -solver.solve(op.pi(P))
        rho = float(np.vdot(P, P_next))
        nrm = fro_norm(P_next)
        if nrm == 0.0:
            return 0.0, k, True
        P = P_next / nrm
        if rho_prev is not None and abs(rho - rho_prev) <= tol * max(rho, 1.0):
            return max(rho, 0.0), k, True
        rho_prev = rho
    return max(rho, 0.0), maxit, False


def ms_stable_fast(A, Nx, tol=1e-9, maxit=10_000, margin=STABILITY_MARGIN):
    """Mean-square stability via a Hurwitz test plus the power method.

    ``sigma(L_A + Pi_N)`` lies in the open left half-plane iff `A` is
    Hurwitz and ``rho(L_A^{-1} Pi_N) < 1``. Estimates within `margin` of 1
    and non-converged power iterations are reported as unstable.
    """
    A = as_square(A, "A")
    if spectral_abscissa(A) >= 0:
        return False
    rho, its, converged = spectral_radius_power(A, Nx, tol=tol, maxit=maxit)
    if not converged:
        logger.warning("power method did not converge after %d steps (rho ~ %.6g); "
                       "reporting unstable", its, rho)
        return False
    return rho < 1.0 - margin
