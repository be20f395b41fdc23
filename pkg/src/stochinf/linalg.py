"""Dense real linear-algebra primitives.

All matrices are ``numpy.ndarray`` of dtype float64. Vectorization, where it
occurs, stacks columns (``order="F"``).
"""

import math

import numpy as np
import scipy.linalg as spla
from scipy.linalg import lapack

__all__ = [
    "LyapunovSolver",
    "NotPSD",
    "SingularLyapunov",
    "fro_norm",
    "lyap_solve",
    "operator_2norm",
    "pseudoinverse",
    "spectral_abscissa",
    "sym_eig",
    "symmetrize",
]


class SingularLyapunov(np.linalg.LinAlgError):
    """The Lyapunov operator ``X -> A^T X + X A`` is (numerically) singular."""


class NotPSD(ValueError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


def as_matrix(M, name="matrix"):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_square(M, name="matrix"):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def symmetrize(M, return_asymmetry=False):
    """Return ``(M + M^T) / 2``.

    With ``return_asymmetry=True`` also return ``||M - M^T||_F / 2``, the
    Frobenius size of the skew part that was discarded.
    """
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    if return_asymmetry:
        return S, 0.5 * np.linalg.norm(M - M.T)
    return S


def fro_norm(M):
    """Frobenius norm; cheaper than ``np.linalg.norm`` for small arrays."""
    return math.sqrt(float(np.vdot(M, M)))


def spectral_abscissa(A):
    """Largest real part of the eigenvalues of the square matrix `A`."""
    A = as_square(A, "A")
    try:
        w = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigenvalue computation failed for {A.shape[0]}x{A.shape[1]} matrix"
        ) from exc
    return float(np.max(w.real))


def _quasi_triangular_eigenvalues(T):
    # eigenvalues from the 1x1 and 2x2 diagonal blocks of a real Schur form
    n = T.shape[0]
    w = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            w[i:i + 2] = np.linalg.eigvals(T[i:i + 2, i:i + 2])
            i += 2
        else:
            w[i] = T[i, i]
            i += 1
    return w


class LyapunovSolver:
    """Bartels-Stewart solver for ``A^T X + X A = Q`` with a fixed `A`.

    The real Schur form ``A = U T U^T`` is computed once; each call to
    :meth:`solve` then costs two similarity transforms and one
    quasi-triangular Sylvester solve, all O(n^3).

    Parameters
    ----------
    A
        Square matrix with ``lambda_i + lambda_j != 0`` for all pairs of
        eigenvalues.
    singular_tol
        The operator is declared singular if some ``|lambda_i + lambda_j|``
        is below ``singular_tol * max(1, max_i |lambda_i|)``.
    """

    def __init__(self, A, singular_tol=1e-12):
        A = as_square(A, "A")
        self.n = A.shape[0]
        self.A = A
        if self.n == 1:
            self.T, self.U = A.copy(), np.ones((1, 1))
            a = float(A[0, 0])
            self.eigenvalues = np.array([a], dtype=complex)
            self.separation = abs(2.0 * a)
            self.abscissa = a
            scale = max(1.0, abs(a))
        else:
            self.T, self.U = spla.schur(A, output="real")
            w = self.eigenvalues = _quasi_triangular_eigenvalues(self.T)
            scale = max(1.0, float(np.max(np.abs(w)))) if self.n else 1.0
            self.separation = float(np.min(np.abs(w[:, None] + w[None, :]))) if self.n else np.inf
            self.abscissa = float(np.max(w.real)) if self.n else -np.inf
        if self.separation <= singular_tol * scale:
            raise SingularLyapunov(
                f"A^T X + X A is singular: min |lambda_i + lambda_j| = {self.separation:.3e}"
            )

    def solve(self, Q):
        """Return the symmetric solution of ``A^T X + X A = Q``."""
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (self.n, self.n):
            raise ValueError(f"Q has shape {Q.shape}, expected {(self.n, self.n)}")
        U, T = self.U, self.T
        if self.n == 1:
            return Q / (2.0 * T)
        F = U.T @ symmetrize(Q) @ U
        # T^T Y + Y T = scale * F
        Y, scale, info = lapack.dtrsyl(T, T, F, trana="T", tranb="N", isgn=1)
        if info < 0:
            raise ValueError(f"dtrsyl: illegal argument {-info}")
        if scale != 1.0:
            Y = Y / scale
        return symmetrize(U @ Y @ U.T)


def lyap_solve(A, Q):
    """Solve the Lyapunov equation ``A^T X + X A = Q`` for symmetric `X`.

    Parameters
    ----------
    A
        Square matrix, typically Hurwitz.
    Q
        Symmetric right-hand side.

    Returns
    -------
    X
        Symmetric solution. The residual ``||A^T X + X A - Q||_F`` is of order
        ``eps * ||Q||_F * ||A||_F / sep`` where ``sep`` is the smallest
        ``|lambda_i + lambda_j|`` (see ``LyapunovSolver.separation``).

    Raises
    ------
    SingularLyapunov
        If an eigenvalue sum of `A` is numerically zero.
    """
    return LyapunovSolver(A).solve(Q)


def sym_eig(M):
    """Eigen-decomposition ``M = V diag(w) V^T`` with `w` ascending."""
    M = symmetrize(as_square(M, "M"))
    w, V = np.linalg.eigh(M)
    return w, V


def pseudoinverse(M, rank_tol=1e-10):
    """Moore-Penrose inverse of a symmetric positive semidefinite matrix.

    Eigenvalues above ``rank_tol * lambda_max`` are inverted, the rest are
    set to zero.

    Raises
    ------
    NotPSD
        If an eigenvalue is below ``-rank_tol * lambda_max``.
    """
    w, V = sym_eig(M)
    lam_max = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
    if lam_max == 0.0:
        return np.zeros_like(V)
    if w[0] < -rank_tol * lam_max:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is negative (lambda_max={lam_max:.3e})")
    keep = w > rank_tol * lam_max
    Vk = V[:, keep]
    return symmetrize((Vk / w[keep]) @ Vk.T)


def operator_2norm(M):
    """Largest singular value of `M`, as ``sqrt(lambda_max(M^T M))``."""
    M = as_matrix(M, "M")
    if M.size == 0:
        return 0.0
    w, _ = sym_eig(M.T @ M)
    return float(np.sqrt(max(w[-1], 0.0)))
