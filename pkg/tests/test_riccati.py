import numpy as np
import pytest

from stochinf.operators import GLyapOperator, StochasticSystem, apply
from stochinf.problems import random_general_system, random_system, scalar_system
from stochinf.riccati import (
    QIndefinite,
    RiccatiProblem,
    Status,
    bound_data,
    check_bound_lemma1,
    check_bound_lemma2,
    deterministic_smallest_solution,
    frechet_operator,
    gain,
    lmi_block,
    newton_solve,
    q_gamma,
    riccati_eval,
    riccati_eval_basic,
    s_of,
)

from conftest import random_sym

X_PLUS = (-9 + 3 * np.sqrt(5)) / 2
X_MINUS = -9 - 6 * np.sqrt(2)


@pytest.fixture
def scalar3():
    return RiccatiProblem(scalar_system(-1, 1, 1, 1), 3.0)


def general_problem(seed, n=5):
    s = random_general_system(n, m=2, p=2, nu=2, seed=seed, input_noise=0.3)
    return RiccatiProblem(s, 5.0 * (1 + np.linalg.norm(s.C) * np.linalg.norm(s.B)))


def test_problem_rejects_small_gamma():
    s = scalar_system(-1, 0, 1, 1, d=2.0)
    with pytest.raises(ValueError):
        RiccatiProblem(s, 2.0)


def test_problem_rejects_unstable():
    with pytest.raises(ValueError):
        RiccatiProblem(scalar_system(-1, 1.5, 1, 1), 3.0)


def test_q_gamma_examples(scalar3):
    p = RiccatiProblem(scalar_system(-1, 1, 1, 1), 2.0)
    assert q_gamma(p, np.zeros((1, 1)))[0, 0] == 4.0
    s = scalar_system(-1, 0.5, 1, 1, d=0.5)
    p = RiccatiProblem(s, 2.0)
    assert q_gamma(p, [[-7.0]])[0, 0] == pytest.approx(4 - 0.25)


def test_q_and_s_term_by_term():
    p = general_problem(3)
    s = p.sys
    X = -np.eye(s.n) * 0.1
    Q = p.gamma ** 2 * np.eye(s.m) - s.D.T @ s.D
    S = s.B.T @ X - s.D.T @ s.C
    for j in range(s.nu):
        Q += s.Nu[j].T @ X @ s.Nu[j]
        S += s.Nu[j].T @ X @ s.Nx[j]
    np.testing.assert_allclose(q_gamma(p, X), Q, atol=1e-14)
    np.testing.assert_allclose(s_of(p, X), S, atol=1e-14)


def test_s_scalar(scalar3):
    assert s_of(scalar3, [[0.0]])[0, 0] == 0.0
    assert s_of(scalar3, [[-2.5]])[0, 0] == -2.5


def test_riccati_zero_output():
    s = StochasticSystem(A=-np.eye(2), Nx=[0.1 * np.eye(2)], B=np.ones((2, 1)), C=np.zeros((1, 2)))
    p = RiccatiProblem(s, 1.0)
    np.testing.assert_array_equal(riccati_eval(p, np.zeros((2, 2))), np.zeros((2, 2)))
    out = newton_solve(p)
    assert out.converged and out.k <= 1
    np.testing.assert_array_equal(out.X, 0)


def test_riccati_scalar_value(scalar3):
    # 2ax + n^2 x - c^2 - (bx)^2/gamma^2 at x = -1
    assert riccati_eval(scalar3, [[-1.0]])[0, 0] == pytest.approx(-1 / 9, rel=1e-14)


def test_riccati_dual_path(rng):
    for seed in range(10):
        s = random_system(5, 2, 2, seed=seed)
        p = RiccatiProblem(s, 10.0)
        X = -np.eye(5) + 0.1 * random_sym(rng, 5)
        R1, R2 = riccati_eval(p, X), riccati_eval_basic(p, X)
        assert np.linalg.norm(R1 - R2) <= 1e-13 * max(1.0, np.linalg.norm(R2))


def test_riccati_q_indefinite():
    s = StochasticSystem(A=[[-1.0]], Nx=[[[0.5]]], Nu=[[[1.0]]], B=[[1.0]], C=[[1.0]])
    p = RiccatiProblem(s, 1.0)
    with pytest.raises(QIndefinite):
        riccati_eval(p, [[-2.0]])


def test_gain_examples(scalar3):
    assert gain(scalar3, [[0.0]])[0, 0] == 0.0
    assert gain(scalar3, [[-4.5]])[0, 0] == pytest.approx(-0.5)


def test_gain_general_vs_basic(rng):
    s = random_system(4, 2, 3, seed=1)
    s = StochasticSystem(A=s.A, Nx=s.Nx, B=s.B, C=s.C, D=0.1 * rng.standard_normal((3, 2)))
    p = RiccatiProblem(s, 8.0)
    X = -np.eye(4)
    K_basic = np.linalg.solve(p.gamma ** 2 * np.eye(2) - s.D.T @ s.D, s.B.T @ X - s.D.T @ s.C)
    np.testing.assert_allclose(gain(p, X), K_basic, atol=1e-13)


def test_frechet_at_zero_is_open_loop():
    s = random_system(4, 1, 1, seed=2)
    p = RiccatiProblem(s, 10.0)
    op = frechet_operator(p, np.zeros((4, 4)))
    np.testing.assert_array_equal(op.Ac, s.A)
    np.testing.assert_array_equal(op.Njs[0], s.Nx[0])


def test_frechet_scalar(scalar3):
    x = -1.3
    op = frechet_operator(scalar3, [[x]])
    assert apply(op, [[1.0]])[0, 0] == pytest.approx(2 * -1 + 1 - 2 * x / 9, rel=1e-14)


def _fd_check(p, rng, ndir=20, h=1e-5):
    n = p.sys.n
    X = -0.3 * np.eye(n) + 0.05 * random_sym(rng, n)
    op = frechet_operator(p, X)
    for _ in range(ndir):
        Dl = random_sym(rng, n)
        Dl /= np.linalg.norm(Dl)
        fd = (riccati_eval(p, X + h * Dl) - riccati_eval(p, X - h * Dl)) / (2 * h)
        exact = apply(op, Dl)
        assert np.linalg.norm(fd - exact) <= 1e-6 * max(1.0, np.linalg.norm(exact))


def test_frechet_finite_difference_basic(rng):
    _fd_check(RiccatiProblem(random_system(5, 2, 2, seed=4), 6.0), rng)


def test_frechet_finite_difference_general(rng):
    for seed in range(3):
        _fd_check(general_problem(seed), rng)


def test_newton_scalar(scalar3):
    out = newton_solve(scalar3)
    assert out.status is Status.CONVERGED
    assert out.X[0, 0] == pytest.approx(X_PLUS, rel=1e-10)
    assert abs(riccati_eval(scalar3, out.X)[0, 0]) <= 1e-12
    assert out.rho_final < 1 and out.alpha_final < 0


def test_newton_scalar_below_norm():
    # (2a+n^2)^2 = 1 < 4 b^2 c^2 / gamma^2 = 4/2.25: no real root
    p = RiccatiProblem(scalar_system(-1, 1, 1, 1), 1.5)
    out = newton_solve(p)
    assert out.status in (Status.STABILITY_LOST, Status.MAX_ITER)


def test_newton_bound_checks_pass_on_good_gamma(scalar3):
    out = newton_solve(scalar3, enable_bound_checks=True)
    assert out.converged


def test_newton_trace_invariants():
    for seed in range(5):
        s = random_system(6, 2, 2, seed=seed)
        for gamma in (5.0, 50.0):
            out = newton_solve(RiccatiProblem(s, gamma))
            if not out.converged:
                continue
            scale = max(1.0, np.linalg.norm(out.X))
            assert all(e <= 1e-9 * scale for e in out.step_max_eig[1:])
            assert all(e <= 1e-8 * scale for e in out.riccati_max_eig[1:])
            assert np.linalg.eigvalsh(out.X)[-1] <= 1e-9


def test_newton_converged_lmi_psd(scalar3):
    out = newton_solve(scalar3)
    M = lmi_block(scalar3, out.X)
    assert np.linalg.eigvalsh(M)[0] >= -1e-7 * max(1.0, np.linalg.norm(M))


def test_newton_general_system_converges():
    p = general_problem(5)
    out = newton_solve(p)
    assert out.converged
    R = riccati_eval(p, out.X)
    assert np.linalg.norm(R) <= 1e-10 * (1 + np.linalg.norm(out.X))
    M = lmi_block(p, out.X)
    assert np.linalg.eigvalsh(M)[0] >= -1e-7 * max(1.0, np.linalg.norm(M))


def test_maximal_solution_grows_with_gamma():
    s = random_system(5, 1, 1, seed=7)
    prev = None
    for gamma in (3.0, 4.0, 8.0, 20.0):
        out = newton_solve(RiccatiProblem(s, gamma))
        if not out.converged:
            continue
        if prev is not None:
            assert np.linalg.eigvalsh(out.X - prev)[0] >= -1e-8
        prev = out.X


def test_bound_lemma1_examples(scalar3):
    m = 1
    B = np.ones((1, 1))
    assert check_bound_lemma1(np.zeros((1, 1)), B, 1.0, 3.0, m)
    assert check_bound_lemma1(np.array([[X_PLUS]]), B, 1.0, 3.0, m)
    data = bound_data(scalar3)
    assert data["pdag_norm"] == pytest.approx(1.0, rel=1e-10)
    assert not check_bound_lemma1(np.array([[X_PLUS * 10]]), B, 1.0, 3.0, m)


def test_bound_lemma2_examples():
    Xm = np.array([[X_MINUS]])
    assert check_bound_lemma2(np.array([[X_PLUS]]), Xm)
    assert not check_bound_lemma2(np.array([[2 * X_MINUS]]), Xm)


def test_smallest_solution_scalar():
    X = deterministic_smallest_solution(scalar_system(-1, 1, 1, 1), 3.0)
    assert X[0, 0] == pytest.approx(X_MINUS, rel=1e-12)


def test_smallest_solution_below_stabilizing():
    s = random_system(4, 1, 1, seed=3).deterministic()
    out = newton_solve(RiccatiProblem(s, 20.0))
    Xm = deterministic_smallest_solution(s, 20.0)
    assert np.linalg.eigvalsh(out.X - Xm)[0] >= -1e-8


def test_smallest_solution_residual_and_spectrum():
    s = random_system(4, 2, 2, seed=11)
    gamma = 30.0
    Xm = deterministic_smallest_solution(s, gamma)
    p = RiccatiProblem(s.deterministic(), gamma)
    assert np.linalg.norm(riccati_eval(p, Xm)) <= 1e-8 * max(1.0, np.linalg.norm(Xm))
    Ac = s.A - s.B @ gain(p, Xm)
    assert np.all(np.linalg.eigvals(Ac).real > 0)


def test_smallest_solution_requires_large_gamma():
    with pytest.raises(ValueError):
        deterministic_smallest_solution(scalar_system(-1, 1, 1, 1), 0.5)
