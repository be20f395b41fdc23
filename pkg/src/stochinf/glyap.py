"""Solvers for the generalized Lyapunov equation.

Solve ``Ac^T D + D Ac + sum_j N_j^T D N_j = Q`` for symmetric ``D`` when the
operator is stable, i.e. ``Ac`` is Hurwitz and ``rho(L_Ac^{-1} Pi_N) < 1``.
"""

import functools

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .linalg import LyapunovSolver, fro_norm, symmetrize, sym_eig
from .operators import GLyapOperator, apply, ms_stable_fast

__all__ = [
    "MSUnstable",
    "NonConverged",
    "controllability_gramian",
    "solve_accelerated",
    "solve_fixed_point",
    "solve_glyap",
]


class NonConverged(RuntimeError):
    """An iterative solve hit its iteration cap.

    Attributes
    ----------
    residual
        Relative residual ``||op(D) - Q||_F / (1 + ||Q||_F)`` of the last iterate.
    iterations
        Number of iterations performed.
    last
        The last iterate.
    """

    def __init__(self, message, residual, iterations, last=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.last = last


class MSUnstable(ValueError):
    """The pair (A, N) is not mean-square stable."""


#: below this many unknowns the preconditioned map is assembled densely
DENSE_KRYLOV_DIM = 16


def _rel_residual(op, D, Q, qnorm):
    return fro_norm(apply(op, D) - Q) / (1.0 + qnorm)


def solve_fixed_point(op, Q, tol=1e-11, maxit=5000, solver=None, return_info=False):
    """Fixed-point iteration ``D_{j+1} = L_Ac^{-1}(Q - Pi_N(D_j))`` from ``D_0 = 0``.

    Converges linearly with rate ``rho(L_Ac^{-1} Pi_N)``. Each step is one
    standard Lyapunov solve with a shared Schur factorization of ``Ac``.

    Parameters
    ----------
    op
        :class:`GLyapOperator`.
    Q
        Symmetric right-hand side.
    tol
        Stop when ``||op(D) - Q||_F <= tol * (1 + ||Q||_F)``.
    maxit
        Iteration cap.
    solver
        Optional :class:`LyapunovSolver` already factored for ``op.Ac``.
    return_info
        Also return ``{"iterations", "residuals"}``.

    Raises
    ------
    NonConverged
        After `maxit` iterations without meeting `tol`.
    """
    Q = symmetrize(Q)
    if solver is None:
        solver = LyapunovSolver(op.Ac)
    qnorm = fro_norm(Q)
    D = solver.solve(Q)
    residuals = [1.0 * qnorm / (1.0 + qnorm)]
    if op.is_noise_free():
        residuals.append(_rel_residual(op, D, Q, qnorm))
        info = {"iterations": 1, "residuals": residuals}
        return (D, info) if return_info else D
    PD = op.pi(D)
    for j in range(1, maxit + 1):
        # residual of D_j is Pi_N(D_j - D_{j-1}); with D_0 = 0 it is Pi_N(D_1)
        if j == 1:
            res = fro_norm(PD) / (1.0 + qnorm)
        residuals.append(res)
        if res <= tol:
            info = {"iterations": j, "residuals": residuals}
            return (D, info) if return_info else D
        if not np.isfinite(res):
            break
        D_next = solver.solve(Q - PD)
        PD_next = op.pi(D_next)
        res = fro_norm(PD_next - PD) / (1.0 + qnorm)
        D, PD = D_next, PD_next
    raise NonConverged(
        f"fixed-point iteration stalled after {maxit} steps, residual {res:.3e}",
        residual=res, iterations=maxit, last=D,
    )


@functools.lru_cache(maxsize=64)
def _svec_index(n):
    iu = np.triu_indices(n)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return iu, iu[::-1], w


def _svec(S, idx):
    iu, _, w = idx
    return S[iu] * w


def _smat(v, idx, n):
    iu, il, w = idx
    S = np.empty((n, n))
    S[iu] = S[il] = v / w
    return S


def _residual(op, D, Q):
    Ac = op.Ac
    DA = D @ Ac
    return Q - (DA.T + DA + op.pi(D))


def solve_accelerated(op, Q, tol=1e-11, maxit=5000, solver=None, return_info=False,
                      refinements=5):
    """Preconditioned GMRES for the generalized Lyapunov equation.

    Solves ``D + L_Ac^{-1}(Pi_N(D)) = L_Ac^{-1}(Q)`` on the space of symmetric
    matrices, using the isometric half-vectorization (off-diagonal entries
    weighted by sqrt(2)). The result is refined against the true residual
    until it meets the same contract as :func:`solve_fixed_point`.
    """
    Q = symmetrize(Q)
    if solver is None:
        solver = LyapunovSolver(op.Ac)
    qnorm = fro_norm(Q)
    if op.is_noise_free():
        D = solver.solve(Q)
        info = {"iterations": 1, "residuals": [_rel_residual(op, D, Q, qnorm)]}
        return (D, info) if return_info else D

    n = op.n
    idx = _svec_index(n)
    dim = len(idx[2])

    def matvec(v):
        return v + _svec(solver.solve(op.pi(_smat(v, idx, n))), idx)

    if dim <= DENSE_KRYLOV_DIM:
        # the Krylov space is the whole space; assemble the map and solve directly
        M = np.eye(dim)
        for j in range(dim):
            M[:, j] = matvec(M[:, j])
        rhs = _svec(solver.solve(Q), idx)
        x = rhs / M[0, 0] if dim == 1 else np.linalg.solve(M, rhs)
        D = _smat(x, idx, n)
        res = fro_norm(_residual(op, D, Q)) / (1.0 + qnorm)
        if res <= tol:
            info = {"iterations": dim, "residuals": [res]}
            return (D, info) if return_info else D
    K = LinearOperator((dim, dim), matvec=matvec, dtype=float)
    D = np.zeros((n, n))
    iterations = 0
    residuals = []
    counter = {"k": 0}

    def count(_):
        counter["k"] += 1

    R = Q
    for _ in range(refinements + 1):
        rhs = _svec(solver.solve(R), idx)
        restart = min(dim, 200)
        x, _info = gmres(K, rhs, rtol=min(tol * 1e-1, 1e-3), atol=0.0, restart=restart,
                         maxiter=max(1, maxit // restart + 1), callback=count,
                         callback_type="pr_norm")
        D = symmetrize(D + _smat(x, idx, n))
        R = _residual(op, D, Q)
        res = fro_norm(R) / (1.0 + qnorm)
        residuals.append(res)
        iterations = counter["k"]
        if res <= tol:
            info = {"iterations": iterations, "residuals": residuals}
            return (D, info) if return_info else D
        if not np.isfinite(res) or iterations >= maxit:
            break
    raise NonConverged(
        f"GMRES did not reach tolerance after {iterations} iterations, residual {res:.3e}",
        residual=res, iterations=iterations, last=D,
    )


def solve_glyap(op, Q, method="krylov", **kwargs):
    """Dispatch to :func:`solve_fixed_point` or :func:`solve_accelerated`."""
    if method == "fixed_point":
        return solve_fixed_point(op, Q, **kwargs)
    if method == "krylov":
        return solve_accelerated(op, Q, **kwargs)
    raise ValueError(f"unknown method {method!r}")


def controllability_gramian(sys, tol=1e-11, maxit=5000, method="fixed_point"):
    """Gramian ``P >= 0`` with ``A P + P A^T + sum_j N_j P N_j^T = -B B^T``.

    Only the state noise terms enter. Tiny negative eigenvalues (down to
    ``-1e-10 * ||P||``) from round-off are clamped to zero.

    Raises
    ------
    MSUnstable
        If (A, Nx) is not mean-square stable.
    """
    if not ms_stable_fast(sys.A, sys.Nx):
        raise MSUnstable("controllability Gramian requires a mean-square stable system")
    dual = GLyapOperator(sys.A, sys.Nx).transpose()
    P = solve_glyap(dual, -sys.B @ sys.B.T, method=method, tol=tol, maxit=maxit)
    lam, V = sym_eig(P)
    scale = max(float(np.max(np.abs(lam))), np.finfo(float).tiny)
    if lam[0] < -1e-10 * scale:
        raise MSUnstable(f"Gramian has eigenvalue {lam[0]:.3e}; system is not mean-square stable")
    lam = np.clip(lam, 0.0, None)
    return symmetrize((V * lam) @ V.T)
