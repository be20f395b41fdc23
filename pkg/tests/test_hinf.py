import numpy as np
import pytest

from stochinf.glyap import MSUnstable
from stochinf.hinf import (
    BracketError,
    det_hinf_norm,
    gamma_bracket,
    profile,
    stoch_hinf_norm,
)
from stochinf.operators import StochasticSystem, spectral_radius_power
from stochinf.problems import random_system, scalar_system


def scalar_norm(a, n1, b, c):
    """Smallest gamma for which -b^2 x^2/gamma^2 + (2a+n^2) x - c^2 has a real root."""
    return 2 * abs(b * c) / abs(2 * a + n1 ** 2)


def sweep_norm(A, B, C, D, omegas):
    n = A.shape[0]
    best = np.linalg.norm(C @ np.linalg.solve(-A, B) + D, 2)
    for w in omegas:
        G = C @ np.linalg.solve(1j * w * np.eye(n) - A, B) + D
        best = max(best, np.linalg.norm(G, 2))
    return best


def test_det_scalar():
    assert det_hinf_norm([[-1.0]], [[1.0]], [[1.0]]) == pytest.approx(1.0, rel=1e-9)


def test_det_zero_output():
    D = np.array([[0.3, 0.0], [0.0, -0.7]])
    assert det_hinf_norm(-np.eye(2), np.ones((2, 2)), np.zeros((2, 2)), D) == pytest.approx(0.7)


def test_det_requires_hurwitz():
    with pytest.raises(ValueError):
        det_hinf_norm([[0.5]], [[1.0]], [[1.0]])


def test_det_matches_frequency_sweep():
    s = random_system(5, 2, 2, seed=12)
    omegas = np.logspace(-4, 4, 100_000)
    A, B, C, D = s.A, s.B, s.C, s.D
    # vectorised sweep: G(iw) for all w at once through the eigen-decomposition of A
    w, V = np.linalg.eig(A)
    Bt, Ct = np.linalg.solve(V, B), C @ V
    G = np.einsum("pi,wi,im->wpm", Ct, 1.0 / (1j * omegas[:, None] - w[None, :]), Bt) + D
    sweep = max(np.linalg.norm(G, 2, axis=(1, 2)).max(),
                np.linalg.norm(C @ np.linalg.solve(-A, B), 2))
    val = det_hinf_norm(A, B, C, D)
    assert val >= sweep * (1 - 1e-9)
    # resolution of a 1e5-point log sweep on a smooth response
    assert val <= sweep * (1 + 1e-4)


def test_scalar_norm_closed_form():
    r = stoch_hinf_norm(scalar_system(-1, 1, 1, 1), tol=1e-6)
    assert r.gamma_lo <= 2.0 <= r.gamma_hi
    assert abs(r.norm - 2.0) <= 1e-6 * 2.0


def test_zero_output_norm():
    s = StochasticSystem(A=-np.eye(2), Nx=[0.3 * np.eye(2)], B=np.ones((2, 1)), C=np.zeros((1, 2)))
    r = stoch_hinf_norm(s)
    assert r.gamma_hi - r.gamma_lo < r.tol * r.gamma_hi
    assert r.norm <= 1e-10


def test_noise_free_equals_deterministic():
    for seed in range(5):
        s = random_system(6, 2, 2, seed=seed).deterministic()
        r = stoch_hinf_norm(s, tol=1e-6)
        assert abs(r.norm - r.det_hinf) <= 1e-6 * r.norm + 1e-9 * r.det_hinf
        # first doubling converges immediately
        assert r.bracket_history[0].phase == "bracket"
        assert r.bracket_history[0].status == "Converged"


def test_decoupled_blocks_take_the_maximum():
    a, n, b, c = [-1.0, -2.0], [1.0, 1.5], [1.0, 2.0], [1.0, 1.0]
    s = StochasticSystem(A=np.diag(a), Nx=[np.diag(n)], B=np.diag(b), C=np.diag(c))
    expected = max(scalar_norm(*args) for args in zip(a, n, b, c))
    r = stoch_hinf_norm(s, tol=1e-6)
    assert abs(r.norm - expected) <= 2e-6 * expected


def test_bracket_scalar_contains_norm():
    # the deterministic bound is 1, so the first trial sits at (or a hair above) 2
    s = scalar_system(-1, 1, 1, 1)
    history = []
    lo, hi = gamma_bracket(s, history=history)
    assert lo <= 2.0 < hi
    assert hi == pytest.approx(2 * lo)
    assert history[-1].status == "Converged"
    assert all(h.status != "Converged" for h in history[:-1])


def test_bracket_noise_free_first_trial_converges():
    s = random_system(5, seed=4).deterministic()
    history = []
    lo, hi = gamma_bracket(s, history=history)
    assert len(history) == 1 and hi == pytest.approx(2 * lo)


def test_bracket_failure_reports():
    # a non-stable pair makes every Newton run fail; the doubling cap gives up
    s = scalar_system(-1, 1.5, 1, 1)
    with pytest.raises(BracketError):
        gamma_bracket(s, kmax=5)


def test_norm_refuses_unstable():
    with pytest.raises(MSUnstable):
        stoch_hinf_norm(scalar_system(-1, 1.5, 1, 1))


@pytest.mark.parametrize("seed", range(3))
def test_bisection_invariants(seed):
    s = random_system(4, 1, 2, seed=seed)
    r = stoch_hinf_norm(s, tol=1e-5)
    assert r.gamma_hi - r.gamma_lo < r.tol * r.gamma_hi
    assert r.gamma_lo >= 0.0
    assert r.det_hinf <= r.gamma_hi
    bis = [h for h in r.bracket_history if h.phase == "bisect"]
    lo, hi = gamma_bracket(s, det_bound=r.det_hinf)
    for h in bis:
        assert h.gamma == pytest.approx(0.5 * (lo + hi), rel=1e-15)
        if h.status == "Converged":
            hi = h.gamma
        else:
            lo = h.gamma
    assert (lo, hi) == (r.gamma_lo, r.gamma_hi)


def test_report_json_fields():
    d = stoch_hinf_norm(scalar_system(-1, 1, 1, 1)).to_dict()
    assert set(d) == {"norm", "gamma_lo", "gamma_hi", "tol", "det_hinf", "bracket_history",
                      "timings"}
    assert set(d["bracket_history"][0]) == {"gamma", "status", "newton_iters", "residual"}


def test_profile_scalar_alpha_tends_to_zero():
    s = scalar_system(-1, 1, 1, 1)
    pts = profile(s, [2.0001, 2.001, 2.01, 2.1, 3.0])
    assert all(p.status == "Converged" for p in pts)
    alphas = [p.alpha for p in pts]
    assert all(a < 0 for a in alphas)
    assert all(x > y for x, y in zip(alphas, alphas[1:]))
    assert alphas[0] > -0.02
    assert all(p.rho < 1 for p in pts)


def test_profile_noise_free_rho_zero():
    s = random_system(3, seed=1).deterministic()
    pts = profile(s, [50.0, 100.0])
    assert all(p.rho == 0.0 for p in pts)


def test_profile_large_gamma_approaches_open_loop():
    s = random_system(4, seed=5)
    rho_open, _, _ = spectral_radius_power(s.A, s.Nx)
    (pt,) = profile(s, [1e6])
    assert pt.rho == pytest.approx(rho_open, rel=1e-6)


def test_profile_records_failures():
    pts = profile(scalar_system(-1, 1, 1, 1), [1.5, 3.0], workers=2)
    assert pts[0].status != "Converged" and np.isnan(pts[0].rho)
    assert pts[1].status == "Converged"
