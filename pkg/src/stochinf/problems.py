"""Test-problem generators and a Monte Carlo check of the norm definition."""

from collections import namedtuple
import logging

import numpy as np
import scipy.sparse as sp

from .linalg import spectral_abscissa
from .operators import StochasticSystem, spectral_radius_power

__all__ = [
    "MCEstimate",
    "heat_system",
    "mc_norm_lower_bound",
    "random_general_system",
    "random_system",
    "scalar_system",
]

logger = logging.getLogger(__name__)

MAX_EIGVEC_COND = 1e8


def _rng(seed):
    # PCG64 with numpy's ziggurat normal sampler; reproducible across platforms
    return np.random.Generator(np.random.PCG64(seed))


def mirror_unstable(A):
    """Reflect eigenvalues with positive real part across the imaginary axis.

    Returns the mirrored matrix and the condition number of the eigenvector
    basis used to reassemble it.
    """
    w, V = np.linalg.eig(A)
    if np.all(w.real < 0):
        return A.copy(), 1.0
    cond = np.linalg.cond(V)
    w = np.where(w.real > 0, -w.real + 1j * w.imag, w)
    # eigenvalues exactly on the axis are pushed slightly left
    w = np.where(w.real == 0, -np.finfo(float).eps * (1 + abs(w)) + 1j * w.imag, w)
    A_new = (V * w) @ np.linalg.inv(V)
    return A_new.real, cond


def random_system(n, m=1, p=1, seed=0, max_resample=100):
    """Random mean-square stable system with one state-noise term.

    ``A, N, B, C`` have i.i.d. standard normal entries. Unstable eigenvalues
    of ``A`` are mirrored into the left half-plane, then ``N`` is scaled by
    ``(2 rho + 1)^{-1/2}`` with ``rho = rho(L_A^{-1} Pi_N)``, which leaves
    ``rho(L_A^{-1} Pi_N) = rho / (2 rho + 1) < 1/2``. ``D = 0``.

    If the eigenvector basis of ``A`` is too ill-conditioned the draw is
    repeated with ``seed + 1``, ``seed + 2``, ...
    """
    for attempt in range(max_resample):
        s = seed + attempt
        rng = _rng(s)
        A = rng.standard_normal((n, n))
        N = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        C = rng.standard_normal((p, n))
        A, cond = mirror_unstable(A)
        if cond > MAX_EIGVEC_COND or not spectral_abscissa(A) < 0:
            logger.info("random_system: seed %d rejected (cond %.2e), resampling", s, cond)
            continue
        rho, _, _ = spectral_radius_power(A, [N])
        N = N / np.sqrt(2.0 * rho + 1.0)
        return StochasticSystem(A=A, Nx=[N], B=B, C=C, D=np.zeros((p, m)),
                                name=f"random:{n},{m},{p},{seed}")
    raise RuntimeError(f"no well-conditioned draw within {max_resample} seeds from {seed}")


def random_general_system(n, m=1, p=1, nu=2, seed=0, input_noise=0.3, feedthrough=0.0):
    """Random mean-square stable system with `nu` noise terms on state and input.

    Built like :func:`random_system`; the state-noise matrices are jointly
    scaled so that ``rho(L_A^{-1} sum_j Pi_{Nx_j}) < 1/2`` and the input
    noise matrices ``Nu_j`` are standard normal times `input_noise`.
    """
    base = random_system(n, m, p, seed)
    rng = _rng(seed + 7919)
    Nx = [rng.standard_normal((n, n)) for _ in range(nu)]
    rho, _, _ = spectral_radius_power(base.A, Nx)
    Nx = [N / np.sqrt(2.0 * rho + 1.0) for N in Nx]
    Nu = [input_noise * rng.standard_normal((n, m)) for _ in range(nu)]
    D = feedthrough * rng.standard_normal((p, m))
    return StochasticSystem(A=base.A, Nx=Nx, Nu=Nu, B=base.B, C=base.C, D=D,
                            name=f"random_general:{n},{m},{p},{nu},{seed}")


def scalar_system(a, n1, b, c, d=0.0):
    """``dx = (a x + b u) dt + n1 x dw``, ``y = c x + d u``."""
    return StochasticSystem(A=[[a]], Nx=[[[n1]]], B=[[b]], C=[[c]], D=[[d]],
                            name=f"scalar:{a},{n1},{b},{c}")


def heat_system(k, robin_coeff=0.5):
    """Stochastic heat equation on the unit square, k x k interior grid.

    ``T_t = Laplace(T)`` with Dirichlet values ``u_1, u_2, u_3`` on the
    bottom, left and top edges and a noisy Robin condition with coefficient
    ``robin_coeff + noise`` on the right edge ``x = 1``. Five-point
    differences with ``h = 1/(k+1)``. In the stencil of the right column of
    unknowns the off-grid neighbour is closed by

        T_out = (1 - h (robin_coeff + w')) T / 2,

    which adds ``(1 - robin_coeff h) / (2 h^2)`` to those diagonal entries of
    ``A`` and puts ``-1 / (2 h)`` on the matching diagonal entries of ``N``.
    With ``robin_coeff = 0.5`` this closure reproduces the published norms
    0.4724 (k=5) down to 0.4611 (k=10).

    ``B`` injects the three boundary values with weight ``1/h^2`` into the
    adjacent unknowns and the output is the grid mean, ``C = ones(1, n) / n``.
    Unknowns are ordered row by row: index ``i + k j`` for column ``i``
    (x direction) and row ``j`` (y direction).
    """
    if isinstance(k, bool) or int(k) != k or k < 2:
        raise ValueError(f"grid size k must be an integer >= 2, got {k!r}")
    k = int(k)
    n = k * k
    h = 1.0 / (k + 1)
    T1 = sp.diags([np.ones(k - 1), -2.0 * np.ones(k), np.ones(k - 1)], [-1, 0, 1])
    I = sp.identity(k)
    A = (sp.kron(I, T1) + sp.kron(T1, I)).toarray() / h ** 2
    right = np.array([(k - 1) + k * j for j in range(k)])
    A[right, right] += (1.0 - robin_coeff * h) / (2.0 * h ** 2)
    N = np.zeros((n, n))
    N[right, right] = -1.0 / (2.0 * h)
    B = np.zeros((n, 3))
    bottom = np.arange(k)
    left = np.array([k * j for j in range(k)])
    top = np.arange(k * (k - 1), n)
    for col, nodes in enumerate((bottom, left, top)):
        B[nodes, col] = 1.0 / h ** 2
    C = np.full((1, n), 1.0 / n)
    return StochasticSystem(A=A, Nx=[N], B=B, C=C, D=np.zeros((1, 3)), name=f"heat:{k}")


MCEstimate = namedtuple("MCEstimate", ["ratio", "stderr", "n_paths"])


def mc_norm_lower_bound(sys, u_signal, t_final, dt, n_paths=1000, seed=0, blowup=1e12):
    """Monte Carlo estimate of ``||y||_{L2} / ||u||_{L2}`` for one input signal.

    Euler-Maruyama with step `dt` from ``x(0) = 0``:
    ``x <- x + (A x + B u) dt + sum_j (Nx_j x + Nu_j u) sqrt(dt) xi_j``.
    Since the norm is a supremum over inputs, the ratio is a statistical
    lower bound on it.

    Parameters
    ----------
    u_signal
        Callable ``t -> array of shape (m,)``, or an array of shape
        ``(steps, m)`` sampled on the grid ``t_i = i dt``.
    n_paths
        Number of independent Wiener paths, simulated together.

    Returns
    -------
    MCEstimate
        ``ratio`` and its delta-method standard error. ``u == 0`` gives a
        ratio of 0 by convention.
    """
    steps = int(round(t_final / dt))
    ts = np.arange(steps) * dt
    if callable(u_signal):
        U = np.array([np.atleast_1d(u_signal(t)) for t in ts], dtype=float)
    else:
        U = np.asarray(u_signal, dtype=float).reshape(steps, -1)
    if U.shape[1] != sys.m:
        raise ValueError(f"input has {U.shape[1]} channels, system has m = {sys.m}")
    u_energy = float(np.sum(U * U) * dt)
    if u_energy == 0.0:
        return MCEstimate(0.0, 0.0, n_paths)
    rng = _rng(seed)
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    X = np.zeros((n_paths, sys.n))
    y_energy = np.zeros(n_paths)
    sqdt = np.sqrt(dt)
    for i in range(steps):
        u = U[i]
        Y = X @ C.T + D @ u
        y_energy += np.sum(Y * Y, axis=1) * dt
        drift = X @ A.T + B @ u
        noise = np.zeros_like(X)
        xi = rng.standard_normal((sys.nu, n_paths))
        for j, (Nx, Nu) in enumerate(zip(sys.Nx, sys.Nu)):
            noise += xi[j][:, None] * (X @ Nx.T + Nu @ u)
        X = X + drift * dt + noise * sqdt
        if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > blowup:
            raise FloatingPointError(
                f"trajectory blow-up at t = {ts[i]:.4g}; dt too large or system unstable")
    mean = float(np.mean(y_energy))
    ratio = np.sqrt(mean / u_energy)
    se_mean = float(np.std(y_energy, ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    stderr = 0.5 * se_mean / np.sqrt(mean * u_energy) if mean > 0 else 0.0
    return MCEstimate(float(ratio), float(stderr), n_paths)
