import numpy as np
import pytest
from scipy.optimize import minimize

from simalm.reference import active_set_qp, portfolio_reference, simplex_qp
from conftest import make_small_portfolio


def scipy_qp(Q, c, G, d):
    n = c.size
    cons = [{"type": "eq", "fun": lambda z: np.sum(z) - 1.0,
             "jac": lambda z: np.ones(n)}]
    if G is not None and len(G):
        cons.append({"type": "ineq", "fun": lambda z: d - G @ z,
                     "jac": lambda z: -G})
    res = minimize(lambda z: 0.5 * z @ Q @ z + c @ z, np.full(n, 1.0 / n),
                   jac=lambda z: Q @ z + c, bounds=[(0, None)] * n,
                   constraints=cons, method="SLSQP",
                   options={"maxiter": 800, "ftol": 1e-14})
    return res.x, res.fun


def test_active_set_matches_scipy(rng):
    for _ in range(15):
        n = int(rng.integers(4, 30))
        m = int(rng.integers(1, 5))
        F = rng.standard_normal((n, n))
        Q = F @ F.T / n + 0.1 * np.eye(n)
        c = rng.standard_normal(n) * 0.4
        G = (rng.random((m, n)) < 0.35).astype(float)
        G[G.sum(axis=1) == 0, 0] = 1.0
        d = rng.uniform(0.2, 0.7, m)
        if np.any(G @ np.full(n, 1.0 / n) >= d):
            continue
        out = active_set_qp(Q, c, G, d)
        _, f_scipy = scipy_qp(Q, c, G, d)
        f_as = 0.5 * out["x"] @ Q @ out["x"] + c @ out["x"]
        assert out["kkt_residual"] <= 1e-10
        assert f_as == pytest.approx(f_scipy, abs=1e-8)


def test_simplex_qp_against_brute_force(rng):
    # small enough to enumerate supports exactly
    import itertools

    for _ in range(10):
        n = 5
        F = rng.standard_normal((n, n))
        Q = F @ F.T / n + 0.2 * np.eye(n)
        c = rng.standard_normal(n) * 0.5
        x, f_val, kkt = simplex_qp(Q, c)
        assert kkt <= 1e-10
        best = np.inf
        for r in range(1, n + 1):
            for T in itertools.combinations(range(n), r):
                T = list(T)
                K = np.zeros((r + 1, r + 1))
                K[:r, :r] = Q[np.ix_(T, T)]
                K[:r, r] = 1.0
                K[r, :r] = 1.0
                rhs = np.concatenate([-c[T], [1.0]])
                try:
                    sol = np.linalg.solve(K, rhs)
                except np.linalg.LinAlgError:
                    continue
                z = np.zeros(n)
                z[T] = sol[:r]
                if np.all(z >= -1e-12):
                    best = min(best, 0.5 * z @ Q @ z + c @ z)
        assert f_val == pytest.approx(best, abs=1e-10)


def test_portfolio_reference_multiplier_sign_and_complementarity():
    instance, _ = make_small_portfolio(sector_limit=0.45)
    ref = portfolio_reference(instance)
    assert ref.kkt_residual <= 1e-9
    assert np.all(ref.lam >= 0.0)
    slack = instance.sector_limits - instance.sector_matrix @ ref.x
    assert np.all(slack >= -1e-10)
    np.testing.assert_allclose(ref.lam * slack, 0.0, atol=1e-9)
    assert abs(ref.x.sum() - 1.0) <= 1e-10


def test_portfolio_reference_unconstrained_limits():
    # generous caps never bind: multiplier is identically zero
    instance, _ = make_small_portfolio(sector_limit=5.0)
    ref = portfolio_reference(instance)
    np.testing.assert_allclose(ref.lam, 0.0, atol=1e-12)


def test_infeasible_start_rejected():
    Q = np.eye(2)
    c = np.zeros(2)
    with pytest.raises(ValueError):
        active_set_qp(Q, c, G=np.array([[1.0, 1.0]]), d=np.array([0.4]))
