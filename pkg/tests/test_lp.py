import numpy as np
import pytest
from scipy.optimize import linprog

from spherecover.lp import LPError, exact_simplex_minimize, l1_feasibility, simplex_minimize


def scipy_l1(A, b):
    m, k = A.shape
    c = np.concatenate([np.zeros(k), np.ones(2 * m)])
    A_eq = np.hstack([A, np.eye(m), -np.eye(m)])
    res = linprog(c, A_eq=A_eq, b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def test_feasible_system_has_zero_residual():
    A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    b = np.array([0.5, 0.5])
    res = l1_feasibility(A, b)
    assert res.value <= 1e-12
    assert np.all(res.x >= 0)
    np.testing.assert_allclose(A @ res.x, b, atol=1e-12)


def test_infeasible_system_residual():
    # x >= 0 cannot produce a negative first coordinate
    A = np.eye(2)
    b = np.array([-1.0, 2.0])
    res = l1_feasibility(A, b)
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_matches_scipy_on_random_systems():
    rng = np.random.default_rng(1)
    for _ in range(300):
        m = int(rng.integers(2, 7))
        k = int(rng.integers(1, 10))
        A = rng.standard_normal((m, k))
        b = rng.standard_normal(m)
        ours = l1_feasibility(A, b)
        assert np.all(ours.x >= 0)
        assert ours.value == pytest.approx(scipy_l1(A, b), abs=1e-8)


def test_degenerate_cone_systems_match_scipy():
    # repeated and nearly repeated columns provoke degenerate pivots
    rng = np.random.default_rng(2)
    for _ in range(200):
        G = rng.standard_normal((3, 3))
        G = np.hstack([G, G[:, :1], G[:, 1:2] + 1e-12])
        x = rng.standard_normal(3)
        ours = l1_feasibility(G, x)
        assert ours.value == pytest.approx(scipy_l1(G, x), abs=1e-8)


def test_simplex_minimize_small_lp():
    # min -x1 - x2 s.t. x1 + s1 = 1, x2 + s2 = 2
    c = np.array([-1.0, -1.0, 0.0, 0.0])
    A = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    b = np.array([1.0, 2.0])
    res = simplex_minimize(c, A, b, basis=[2, 3])
    assert res.value == pytest.approx(-3.0)
    np.testing.assert_allclose(res.x, [1.0, 2.0, 0.0, 0.0])


def test_simplex_minimize_detects_unbounded():
    c = np.array([-1.0, 0.0])
    A = np.array([[-1.0, 1.0]])
    with pytest.raises(LPError):
        simplex_minimize(c, A, np.array([1.0]), basis=[1])


def test_simplex_minimize_rejects_bad_basis():
    with pytest.raises(LPError):
        simplex_minimize(np.zeros(2), np.eye(2), np.ones(2), basis=[0])


# -- exact fallback ---------------------------------------------------------


def test_exact_simplex_matches_scipy():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = int(rng.integers(2, 7))
        k = int(rng.integers(2, 9))
        A = np.hstack([rng.standard_normal((m, k)), np.eye(m)])
        b = np.abs(rng.standard_normal(m))
        c = np.concatenate([0.1 * np.abs(rng.standard_normal(k)), np.ones(m)])
        ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs").fun
        cold = exact_simplex_minimize(c, A, b, list(range(k, k + m)))
        warm = exact_simplex_minimize(c, A, b, list(range(k, k + m)),
                                      warm=simplex_minimize(c, A, b, list(range(k, k + m))).basis)
        assert cold.exact and warm.exact
        assert cold.value == pytest.approx(ref, abs=1e-9)
        assert warm.value == pytest.approx(ref, abs=1e-9)
        np.testing.assert_allclose(A @ cold.x, b, atol=1e-12)


def test_exact_simplex_is_exact_on_dyadic_data():
    # the optimum is exactly the right-hand side 1 + 2^-52, one ulp above 1
    c = np.array([1.0, 1.0, 0.0])
    A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0 + 2.0 ** -52, 0.5])
    res = exact_simplex_minimize(c, A, b, basis=[0, 2])
    assert res.value == 1.0 + 2.0 ** -52


def test_recheck_band_uses_exact_solver():
    A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    b = np.array([0.5, 0.5])
    assert not l1_feasibility(A, b).exact
    assert l1_feasibility(np.eye(2), np.array([-1.0, 2.0]), recheck=(0.5, 2.0)).exact
