"""Stochastic H-infinity norm by bisection over gamma."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import logging
import time

import numpy as np

from .linalg import operator_2norm, spectral_abscissa
from .operators import KRON_GUARD, kron_materialize, ms_stable_fast, spectral_radius_power
from .riccati import NewtonOutcome, RiccatiProblem, Status, _hamiltonian_data, newton_solve

__all__ = [
    "BisectionStep",
    "BracketError",
    "NormReport",
    "ProfilePoint",
    "det_hinf_norm",
    "gamma_bracket",
    "profile",
    "stoch_hinf_norm",
]

logger = logging.getLogger(__name__)

AXIS_TOL = 1e-8
MAX_DOUBLINGS = 60
GAMMA_EPS = 1e-12


class BracketError(RuntimeError):
    """No gamma with a converging Newton iteration was found."""


def _has_imaginary_eigenvalue(A, B, C, D, gamma, axis_tol=AXIS_TOL):
    At, G, Qc = _hamiltonian_data(A, B, C, D, gamma)
    M = np.block([[At, G], [-Qc, -At.T]])
    w = np.linalg.eigvals(M)
    return bool(np.any(np.abs(w.real) <= axis_tol * (1.0 + np.abs(w))))


def _freq_response_norm(A, B, C, D, omega):
    n = A.shape[0]
    G = C @ np.linalg.solve(1j * omega * np.eye(n) - A, B) + D
    return float(np.linalg.norm(G, 2))


def det_hinf_norm(A, B, C, D=None, tol=1e-10):
    """H-infinity norm of ``G(s) = C (sI - A)^{-1} B + D`` for Hurwitz `A`.

    Bisection on gamma: ``||G|| < gamma`` iff the Hamiltonian
    ``[[At, B R^{-1} B^T], [-C^T (I + D R^{-1} D^T) C, -At^T]]`` with
    ``R = gamma^2 I - D^T D`` and ``At = A + B R^{-1} D^T C`` has no
    eigenvalue on the imaginary axis. The lower end of the bracket is seeded
    with ``||D||``, ``||G(0)||`` and ``||G(i |lambda|)||`` over the poles.

    Parameters
    ----------
    tol
        Relative width of the final bracket.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.zeros((C.shape[0], B.shape[1])) if D is None else np.atleast_2d(np.asarray(D, float))
    poles = np.linalg.eigvals(A)
    if np.max(poles.real) >= 0:
        raise ValueError("det_hinf_norm requires a Hurwitz A")
    dnorm = operator_2norm(D)
    if not np.any(B) or not np.any(C):
        return dnorm
    candidates = [dnorm, _freq_response_norm(A, B, C, D, 0.0)]
    candidates += [_freq_response_norm(A, B, C, D, abs(lam.imag)) for lam in poles]
    candidates += [_freq_response_norm(A, B, C, D, abs(lam)) for lam in poles]
    lo = max(candidates)
    hi = 2.0 * lo if lo > 0 else 1.0
    while _has_imaginary_eigenvalue(A, B, C, D, hi):
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _has_imaginary_eigenvalue(A, B, C, D, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class BisectionStep:
    gamma: float
    status: str
    newton_iters: int
    residual: float
    phase: str = "bisect"
    outcome: NewtonOutcome = field(default=None, repr=False)

    def to_dict(self):
        return {"gamma": self.gamma, "status": self.status,
                "newton_iters": self.newton_iters, "residual": self.residual}


@dataclass
class NormReport:
    """Outcome of :func:`stoch_hinf_norm`.

    The true norm lies in ``[gamma_lo, gamma_hi]``: Newton failed at
    ``gamma_lo`` (or it is the deterministic lower bound) and converged at
    ``gamma_hi``.
    """

    gamma_lo: float
    gamma_hi: float
    tol: float
    det_hinf: float
    bracket_history: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def norm(self):
        return 0.5 * (self.gamma_lo + self.gamma_hi)

    norm_estimate = norm

    def to_dict(self):
        return {
            "norm": self.norm,
            "gamma_lo": self.gamma_lo,
            "gamma_hi": self.gamma_hi,
            "tol": self.tol,
            "det_hinf": self.det_hinf,
            "bracket_history": [s.to_dict() for s in self.bracket_history],
            "timings": dict(self.timings),
        }


def _newton_at(sys, gamma, kmax, newton_tol, newton_kw):
    prob = RiccatiProblem(sys, gamma, check_stability=False)
    return newton_solve(prob, kmax=kmax, newton_tol=newton_tol, **newton_kw)


def _record(history, gamma, out, phase, keep):
    res = out.residuals[-1] if out.residuals else float("nan")
    history.append(BisectionStep(gamma=gamma, status=out.status.value, newton_iters=out.k,
                                 residual=res, phase=phase, outcome=out if keep else None))


def _gamma_floor(sys):
    return operator_2norm(sys.D) * (1.0 + 1e-9)


def gamma_bracket(sys, kmax=50, newton_tol=1e-10, det_bound=None, history=None,
                  keep_outcomes=False, **newton_kw):
    """Find ``gamma0 <= ||L|| < gamma1`` starting from the deterministic norm.

    ``gamma0`` starts at the deterministic H-infinity norm (never tested);
    ``gamma1 = 2 gamma0`` is tried, and both are doubled until Newton
    converges at ``gamma1``.

    Raises
    ------
    BracketError
        After ``MAX_DOUBLINGS`` doublings.
    """
    if det_bound is None:
        det_bound = det_hinf_norm(sys.A, sys.B, sys.C, sys.D)
    if history is None:
        history = []
    floor = _gamma_floor(sys)
    gamma0 = max(det_bound, floor, GAMMA_EPS)
    for _ in range(MAX_DOUBLINGS):
        gamma1 = 2.0 * gamma0
        out = _newton_at(sys, gamma1, kmax, newton_tol, newton_kw)
        _record(history, gamma1, out, "bracket", keep_outcomes)
        if out.converged:
            return gamma0, gamma1
        gamma0 = gamma1
    raise BracketError("norm appears unbounded or system unstable: no converging gamma "
                       f"up to {gamma0:.3e}")


def stoch_hinf_norm(sys, tol=1e-4, kmax=50, newton_tol=1e-10, check_stability=True,
                    keep_outcomes=False, **newton_kw):
    """Stochastic H-infinity norm of `sys` by bisection.

    At each midpoint Newton's method is run from ``X_0 = 0``; convergence
    moves the upper end, any failure (lost stability, iteration cap,
    indefinite ``Q_gamma``) moves the lower end. The loop ends when
    ``gamma_hi - gamma_lo < tol * gamma_hi``.

    Parameters
    ----------
    sys
        :class:`StochasticSystem` with (A, Nx) mean-square stable.
    tol
        Relative bracket width on exit.
    kmax, newton_tol
        Passed to :func:`newton_solve`.
    keep_outcomes
        Attach the full :class:`NewtonOutcome` to every history entry.
    **newton_kw
        Further keyword arguments for :func:`newton_solve`.

    Raises
    ------
    glyap.MSUnstable
        If (A, Nx) is not mean-square stable.
    BracketError
        If no upper bound is found.
    """
    from .glyap import MSUnstable

    timings = {}
    t0 = time.perf_counter()
    if check_stability and not ms_stable_fast(sys.A, sys.Nx):
        raise MSUnstable("(A, Nx) is not mean-square stable")
    t1 = time.perf_counter()
    timings["stability"] = t1 - t0
    det = det_hinf_norm(sys.A, sys.B, sys.C, sys.D)
    t2 = time.perf_counter()
    timings["det_hinf"] = t2 - t1
    history = []
    lo, hi = gamma_bracket(sys, kmax=kmax, newton_tol=newton_tol, det_bound=det,
                           history=history, keep_outcomes=keep_outcomes, **newton_kw)
    t3 = time.perf_counter()
    timings["bracket"] = t3 - t2
    floor = _gamma_floor(sys)
    while hi - lo >= tol * hi:
        gamma = max(0.5 * (lo + hi), floor)
        out = _newton_at(sys, gamma, kmax, newton_tol, newton_kw)
        _record(history, gamma, out, "bisect", keep_outcomes)
        if out.converged:
            hi = gamma
        else:
            lo = gamma
    timings["bisection"] = time.perf_counter() - t3
    timings["total"] = time.perf_counter() - t0
    return NormReport(gamma_lo=lo, gamma_hi=hi, tol=tol, det_hinf=det,
                      bracket_history=history, timings=timings)


@dataclass
class ProfilePoint:
    """Spectral data of the Riccati derivative at the stabilizing solution.

    ``alpha_surrogate`` is set when ``n**2`` exceeds the Kronecker guard and
    ``alpha`` is ``2 * abscissa(Ac)``, a lower estimate of the true abscissa.
    """

    gamma: float
    rho: float
    alpha: float
    status: str
    newton_iters: int = 0
    alpha_surrogate: bool = False

    def to_dict(self):
        return asdict(self)


def _profile_point(sys, gamma, kmax, newton_tol, newton_kw):
    out = _newton_at(sys, gamma, kmax, newton_tol, newton_kw)
    if not out.converged:
        return ProfilePoint(gamma, float("nan"), float("nan"), out.status.value, out.k)
    prob = RiccatiProblem(sys, gamma, check_stability=False)
    from .riccati import frechet_operator

    op = frechet_operator(prob, out.X)
    rho, _, _ = spectral_radius_power(op.Ac, op.Njs)
    if op.n ** 2 <= KRON_GUARD:
        alpha, surrogate = spectral_abscissa(kron_materialize(op)), False
    else:
        alpha, surrogate = 2.0 * spectral_abscissa(op.Ac), True
    return ProfilePoint(gamma, rho, alpha, out.status.value, out.k, surrogate)


def profile(sys, gammas, kmax=50, newton_tol=1e-10, workers=1, **newton_kw):
    """``rho(gamma)`` and ``alpha(gamma)`` of the derivative at ``X_+(gamma)``.

    Failures at individual gammas are recorded in the ``status`` field with
    NaN spectral data.
    """
    gammas = [float(g) for g in gammas]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda g: _profile_point(sys, g, kmax, newton_tol, newton_kw),
                               gammas))
    return [_profile_point(sys, g, kmax, newton_tol, newton_kw) for g in gammas]
