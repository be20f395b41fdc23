"""The parametrized Riccati map and Newton's method for its stabilizing root.

For ``gamma > ||D||_2`` the map is

    R(X) = P(X) - S(X)^T Q(X)^{-1} S(X),
    P(X) = A^T X + X A + sum_j Nx_j^T X Nx_j - C^T C,
    S(X) = B^T X + sum_j Nu_j^T X Nx_j - D^T C,
    Q(X) = sum_j Nu_j^T X Nu_j + gamma^2 I - D^T D.

The stochastic H-infinity norm is the infimum of all gamma for which
``R(X) = 0`` has a stabilizing solution ``X <= 0``.
"""

from dataclasses import dataclass, field
from enum import Enum
import logging

import numpy as np
import scipy.linalg as spla

from .glyap import NonConverged, solve_glyap
from .linalg import (
    LyapunovSolver,
    SingularLyapunov,
    fro_norm,
    operator_2norm,
    pseudoinverse,
    spectral_abscissa,
    sym_eig,
    symmetrize,
)
from .operators import (
    STABILITY_MARGIN,
    GLyapOperator,
    StochasticSystem,
    ms_stable_fast,
    spectral_radius_power,
)

__all__ = [
    "NewtonOutcome",
    "QIndefinite",
    "RiccatiProblem",
    "Status",
    "check_bound_lemma1",
    "check_bound_lemma2",
    "deterministic_smallest_solution",
    "frechet_operator",
    "gain",
    "lmi_block",
    "newton_solve",
    "q_gamma",
    "riccati_eval",
    "riccati_eval_basic",
    "s_of",
]

logger = logging.getLogger(__name__)


class QIndefinite(np.linalg.LinAlgError):
    """``Q_gamma(X)`` is not positive definite."""


class Status(str, Enum):
    CONVERGED = "Converged"
    STABILITY_LOST = "StabilityLost"
    MAX_ITER = "MaxIter"
    BOUND_VIOLATED = "BoundViolated"
    Q_INDEFINITE = "QIndefinite"


@dataclass
class RiccatiProblem:
    """A system together with a level ``gamma > ||D||_2``.

    Mean-square stability of (A, Nx) is checked on construction unless
    ``check_stability=False``.
    """

    sys: StochasticSystem
    gamma: float
    check_stability: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.gamma = float(self.gamma)
        dnorm = operator_2norm(self.sys.D)
        if not self.gamma > dnorm:
            raise ValueError(f"gamma = {self.gamma!r} must exceed ||D||_2 = {dnorm!r}")
        if self.check_stability and not ms_stable_fast(self.sys.A, self.sys.Nx):
            raise ValueError("(A, Nx) is not mean-square stable")
        s = self.sys
        # X-independent pieces, reused at every Newton iterate
        self._q0 = symmetrize(self.gamma ** 2 * np.eye(s.m) - s.D.T @ s.D)
        self._dtc = s.D.T @ s.C
        self._ctc = s.C.T @ s.C
        self._input_noise = s.has_input_noise


def q_gamma(prob, X):
    Q = prob._q0
    if not prob._input_noise:
        return Q.copy()
    for Nu in prob.sys.Nu:
        Q = Q + Nu.T @ X @ Nu
    return symmetrize(Q)


def s_of(prob, X):
    s = prob.sys
    S = s.B.T @ X - prob._dtc
    if prob._input_noise:
        for Nx, Nu in zip(s.Nx, s.Nu):
            S = S + Nu.T @ X @ Nx
    return S


def _p_of(prob, X):
    s = prob.sys
    XA = X @ s.A
    P = XA.T + XA - prob._ctc
    for Nx in s.Nx:
        P = P + Nx.T @ X @ Nx
    return P


class _QFactor:
    """Symmetric eigen-factorization of ``Q_gamma(X)`` used for its inverse."""

    def __init__(self, Q):
        w, V = np.linalg.eigh(Q)
        scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
        if w[0] <= 1e-12 * scale:
            raise QIndefinite(f"Q_gamma(X) has eigenvalue {w[0]:.3e}")
        self.w, self.V = w, V

    def solve(self, S):
        V = self.V
        return V @ ((V.T @ S) / self.w[:, None])


def _gain_and_s(prob, X):
    S = s_of(prob, X)
    return _QFactor(q_gamma(prob, X)).solve(S), S


def gain(prob, X):
    """Feedback ``K = Q_gamma(X)^{-1} S(X)``; the closed loop drift is ``A - B K``."""
    return _gain_and_s(prob, X)[0]


def riccati_eval(prob, X, _gain=None):
    """``R_gamma(X)`` for the general multi-noise system.

    Raises
    ------
    QIndefinite
        If ``Q_gamma(X)`` is not positive definite.
    """
    K, S = _gain if _gain is not None else _gain_and_s(prob, X)
    return symmetrize(_p_of(prob, X) - S.T @ K)


def riccati_eval_basic(prob, X):
    """``R_gamma(X)`` from the single-noise textbook formula.

    Ignores ``Nu`` and uses only ``Nx[0]``; meant as an independent check of
    :func:`riccati_eval` on basic systems.
    """
    s = prob.sys
    A, N, B, C, D = s.A, s.Nx[0], s.B, s.C, s.D
    M = B.T @ X - D.T @ C
    W = np.linalg.inv(prob.gamma ** 2 * np.eye(s.m) - D.T @ D)
    return symmetrize(A.T @ X + X @ A + N.T @ X @ N - C.T @ C - M.T @ W @ M)


def frechet_operator(prob, X, _gain=None):
    """Derivative of ``R_gamma`` at `X` as a :class:`GLyapOperator`.

    With ``K = gain(prob, X)`` the derivative is ``Delta -> Ac^T Delta +
    Delta Ac + sum_j Nc_j^T Delta Nc_j`` where ``Ac = A - B K`` and
    ``Nc_j = Nx_j - Nu_j K``.
    """
    s = prob.sys
    K = _gain[0] if _gain is not None else gain(prob, X)
    Ac = s.A - s.B @ K
    if prob._input_noise:
        Ncs = [Nx - Nu @ K for Nx, Nu in zip(s.Nx, s.Nu)]
    else:
        Ncs = s.Nx
    return GLyapOperator.from_arrays(Ac, Ncs)


def lmi_block(prob, X):
    """The symmetric block matrix of the bounded real lemma at `X`.

    ``[[P(X), S(X)^T], [S(X), Q_gamma(X)]]``; its Schur complement with
    respect to the lower-right block is ``R_gamma(X)``.
    """
    P = symmetrize(_p_of(prob, X))
    S = s_of(prob, X)
    Q = q_gamma(prob, X)
    return symmetrize(np.block([[P, S.T], [S, Q]]))


@dataclass
class NewtonOutcome:
    """Result of :func:`newton_solve`.

    Attributes
    ----------
    status
        A :class:`Status`.
    X
        Last iterate (the stabilizing solution when converged).
    k
        Number of Newton steps taken.
    residuals
        ``||R_gamma(X_k)||_F`` for each evaluated iterate.
    rho_final, alpha_final
        ``rho(L_Ac^{-1} Pi_Nc)`` and the spectral abscissa of ``Ac`` at the
        last iterate where the derivative was formed (NaN if never formed).
    step_max_eig
        ``lambda_max(X_{k+1} - X_k)`` per step (should be <= 0).
    riccati_max_eig
        ``lambda_max(R_gamma(X_k))`` per iterate (should be <= 0 for k >= 1).
    message
        Free-form diagnostic for failures.
    """

    status: Status
    X: np.ndarray
    k: int
    residuals: list = field(default_factory=list)
    rho_final: float = float("nan")
    alpha_final: float = float("nan")
    step_max_eig: list = field(default_factory=list)
    riccati_max_eig: list = field(default_factory=list)
    message: str = ""

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def _max_eig(S):
    if S.shape[0] == 1:
        return float(S[0, 0])
    return float(np.linalg.eigvalsh(S)[-1])


def newton_solve(prob, kmax=50, newton_tol=1e-10, enable_bound_checks=False,
                 glyap_method="krylov", glyap_tol=1e-11, glyap_maxit=5000,
                 power_tol=1e-9, power_maxit=10_000, divergence_bound=1e12,
                 bounds=None):
    """Newton's method for the stabilizing solution of ``R_gamma(X) = 0``.

    Starts from ``X_0 = 0``. At every iterate the derivative is tested for
    stability (Hurwitz closed loop and ``rho < 1`` by the power method);
    a failed test ends the run with ``StabilityLost``. Otherwise the Newton
    correction solves the generalized Lyapunov equation
    ``R'_X(Delta) = -R_gamma(X)``.

    Parameters
    ----------
    prob
        :class:`RiccatiProblem`.
    kmax
        Maximum number of Newton steps.
    newton_tol
        Converged when ``||R(X_k)||_F <= newton_tol * (c + ||X_k||_F)`` with
        ``c = min(1, ||R(X_0)||_F)``, so systems with tiny output weights are
        not declared converged below the norm.
    enable_bound_checks
        Also test the trace bound and the deterministic lower bound after
        every step (``BoundViolated`` on failure).
    glyap_method
        ``"krylov"`` (default) or ``"fixed_point"``.
    bounds
        Optional precomputed ``{"pdag_norm": float, "X_minus": array}``
        used by the bound checks.

    Returns
    -------
    NewtonOutcome
    """
    s = prob.sys
    n = s.n
    X = np.zeros((n, n))
    out = NewtonOutcome(status=Status.MAX_ITER, X=X, k=0)
    if enable_bound_checks and bounds is None:
        bounds = bound_data(prob)

    for k in range(kmax + 1):
        out.k = k
        out.X = X
        try:
            KS = _gain_and_s(prob, X)
            R = riccati_eval(prob, X, _gain=KS)
        except QIndefinite as exc:
            out.status = Status.Q_INDEFINITE
            out.message = str(exc)
            return out
        res = fro_norm(R)
        if k == 0:
            r_scale = min(1.0, res)
        out.residuals.append(res)
        out.riccati_max_eig.append(_max_eig(R))
        op = frechet_operator(prob, X, _gain=KS)
        try:
            solver = LyapunovSolver(op.Ac)
        except SingularLyapunov as exc:
            # some lambda_i + lambda_j vanishes, so Ac is not Hurwitz
            out.status = Status.STABILITY_LOST
            out.alpha_final = spectral_abscissa(op.Ac)
            out.message = str(exc)
            return out
        alpha = solver.abscissa
        out.alpha_final = alpha
        if alpha >= 0:
            out.status = Status.STABILITY_LOST
            out.rho_final = float("nan")
            out.message = f"closed loop not Hurwitz at k={k} (abscissa {alpha:.3e})"
            return out
        rho, its, ok = spectral_radius_power(op, None, tol=power_tol,
                                             maxit=power_maxit, solver=solver)
        out.rho_final = rho
        if not ok or rho >= 1.0 - STABILITY_MARGIN:
            out.status = Status.STABILITY_LOST
            out.message = (f"rho = {rho:.6g} at k={k}"
                           + ("" if ok else f" (power method not converged in {its} steps)"))
            return out
        if res <= newton_tol * (r_scale + fro_norm(X)):
            out.status = Status.CONVERGED
            return out
        if k == kmax:
            break
        try:
            delta = solve_glyap(op, -R, method=glyap_method, tol=glyap_tol,
                                maxit=glyap_maxit, solver=solver)
        except NonConverged as exc:
            out.status = Status.MAX_ITER
            out.message = f"generalized Lyapunov solve failed at k={k}: {exc}"
            return out
        X_next = symmetrize(X + delta)
        out.step_max_eig.append(_max_eig(delta))
        X = X_next
        if not np.all(np.isfinite(X)) or fro_norm(X) > divergence_bound:
            out.k, out.X = k + 1, X
            out.status = Status.MAX_ITER
            out.message = f"iterates diverging (||X|| = {np.linalg.norm(X):.3e})"
            return out
        if enable_bound_checks:
            msg = _bounds_message(prob, X, bounds)
            if msg:
                out.k, out.X = k + 1, X
                out.status = Status.BOUND_VIOLATED
                out.message = msg
                return out
    out.status = Status.MAX_ITER
    out.message = f"no convergence within kmax={kmax} steps"
    return out


def bound_data(prob):
    """Precompute the data for :func:`check_bound_lemma1` and :func:`check_bound_lemma2`."""
    from .glyap import controllability_gramian

    s = prob.sys
    P = controllability_gramian(s)
    pdag = operator_2norm(s.B.T @ pseudoinverse(P) @ s.B)
    try:
        X_minus = deterministic_smallest_solution(s, prob.gamma)
    except ValueError:
        X_minus = None
    return {"pdag_norm": pdag, "X_minus": X_minus}


def _bounds_message(prob, X, bounds):
    s = prob.sys
    if not check_bound_lemma1(X, s.B, bounds["pdag_norm"], prob.gamma, s.m):
        return "trace bound -trace(B^T X B) <= m^2 gamma^2 ||B^T P^+ B|| violated"
    Xm = bounds.get("X_minus")
    if Xm is not None and not check_bound_lemma2(X, Xm):
        return "iterate dropped below the smallest deterministic Riccati solution"
    return ""


def check_bound_lemma1(X, B, pdag_norm_term, gamma, m, slack=1e-8):
    """Trace bound ``trace(-B^T X B) <= m^2 gamma^2 ||B^T P^+ B||_2``.

    `slack` is relative to the larger side of the inequality.
    """
    lhs = float(np.trace(-B.T @ X @ B))
    rhs = m ** 2 * gamma ** 2 * pdag_norm_term
    return lhs <= rhs + slack * max(1.0, abs(lhs), abs(rhs))


def check_bound_lemma2(X, X_minus, slack=1e-8):
    """``X >= X_minus`` in the Loewner order, up to ``slack * scale``."""
    scale = max(1.0, np.linalg.norm(X_minus), np.linalg.norm(X))
    return float(np.linalg.eigvalsh(symmetrize(X - X_minus))[0]) >= -slack * scale


def _hamiltonian_data(A, B, C, D, gamma):
    m = B.shape[1]
    R = gamma ** 2 * np.eye(m) - D.T @ D
    Rinv = np.linalg.inv(R)
    At = A + B @ Rinv @ D.T @ C
    G = symmetrize(B @ Rinv @ B.T)
    Qc = symmetrize(C.T @ (np.eye(C.shape[0]) + D @ Rinv @ D.T) @ C)
    return At, G, Qc


def deterministic_smallest_solution(sys, gamma1, axis_tol=1e-8):
    """Smallest (anti-stabilizing) solution of the noise-free Riccati equation.

    Solves ``At^T X + X At - X G X - Qc = 0`` with ``At = A + B R^{-1} D^T C``,
    ``G = B R^{-1} B^T``, ``Qc = C^T (I + D R^{-1} D^T) C`` and
    ``R = gamma1^2 I - D^T D``, i.e. the deterministic counterpart of
    ``R_gamma(X) = 0``. The solution spans the invariant subspace of
    ``[[At, -G], [Qc, -At^T]]`` for its eigenvalues in the open right
    half-plane.

    Raises
    ------
    ValueError
        If the Hamiltonian has eigenvalues on the imaginary axis (gamma1 is
        not above the deterministic H-infinity norm).
    """
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    n = A.shape[0]
    At, G, Qc = _hamiltonian_data(A, B, C, D, gamma1)
    H = np.block([[At, -G], [Qc, -At.T]])
    w = np.linalg.eigvals(H)
    if np.any(np.abs(w.real) <= axis_tol * (1.0 + np.abs(w))):
        raise ValueError("Hamiltonian has eigenvalues on the imaginary axis; gamma1 too small")
    T, Z, sdim = spla.schur(H, output="real", sort="rhp")
    if sdim != n:
        raise ValueError(f"expected {n} right half-plane eigenvalues, found {sdim}")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    X = np.linalg.solve(U1.T, U2.T).T
    return symmetrize(X)
