import numpy as np
import pytest

from stochinf.linalg import spectral_abscissa


@pytest.fixture
def rng():
    return np.random.default_rng(20170301)


def random_stable(rng, n, shift=0.5):
    """Random Hurwitz matrix: shift a Gaussian matrix left of its abscissa."""
    A = rng.standard_normal((n, n))
    return A - (spectral_abscissa(A) + shift) * np.eye(n)


def random_sym(rng, n):
    M = rng.standard_normal((n, n))
    return M + M.T


def kron_lyap_solve(A, Q):
    """Brute-force solve of A^T X + X A = Q through the n^2 x n^2 system."""
    n = A.shape[0]
    K = np.kron(np.eye(n), A.T) + np.kron(A.T, np.eye(n))
    x = np.linalg.solve(K, Q.flatten(order="F"))
    return x.reshape((n, n), order="F")


def kron_glyap_solve(Ac, Njs, Q):
    n = Ac.shape[0]
    K = np.kron(np.eye(n), Ac.T) + np.kron(Ac.T, np.eye(n))
    for N in Njs:
        K += np.kron(N.T, N.T)
    x = np.linalg.solve(K, Q.flatten(order="F"))
    return x.reshape((n, n), order="F")
