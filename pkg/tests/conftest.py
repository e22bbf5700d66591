import numpy as np
import pytest

from simalm.cones import NonnegativeOrthant
from simalm.model import (ParametricProblem, PortfolioInstance,
                          ProblemConstants, portfolio_problem, simplex_prox)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_toy_problem(n=3, m=2, seed=0):
    """Tiny QP over the simplex whose constraint map depends on theta.

    p(x; theta) = 0.5 x'Px + (c + C theta)'x, h(x; theta) = A(theta) x +
    b(theta) with A(theta) = A0 + theta_0 A1 and b(theta) = b0 + B theta,
    q == 0, X the unit simplex, orthant cone. Exercises the
    theta-dependent-constraint code paths the portfolio family never hits.
    """
    gen = np.random.default_rng(seed)
    F = gen.standard_normal((n, n))
    P = F @ F.T / n + 0.5 * np.eye(n)
    c = gen.standard_normal(n) * 0.2
    C = gen.standard_normal((n, 2)) * 0.1
    A0 = gen.standard_normal((m, n)) * 0.5
    A1 = gen.standard_normal((m, n)) * 0.2
    b0 = gen.standard_normal(m) * 0.1
    B = gen.standard_normal((m, 2)) * 0.1

    def smooth_value_grad(x, theta):
        x = np.asarray(x, float)
        lin = c + C @ theta
        return 0.5 * float(x @ P @ x) + float(lin @ x), P @ x + lin

    def amat(theta):
        return A0 + theta[0] * A1

    def boff(theta):
        return b0 + B @ theta

    constants = ProblemConstants(
        L_p_x=float(np.linalg.norm(P, 2)),
        L_h_x=float(np.linalg.norm(A0, 2) + np.linalg.norm(A1, 2)),
        L_h_theta=float(np.linalg.norm(A1, 2) + np.linalg.norm(B, 2)),
        L_f=float(np.linalg.norm(C, 2)),
        D_x=1.0,
    )

    def vertex(g):
        out = np.zeros(n)
        out[int(np.argmin(g))] = 1.0
        return out

    return ParametricProblem(
        smooth_value_grad=smooth_value_grad,
        nonsmooth_value=lambda x, theta: 0.0,
        prox_step=lambda y, g, L, theta: simplex_prox(y, g, L),
        constraint_matrix=amat,
        constraint_offset=boff,
        cone=NonnegativeOrthant(m),
        constants=constants,
        membership=lambda x: bool(np.all(np.asarray(x) >= -1e-9)
                                  and abs(float(np.sum(x)) - 1.0) <= 1e-9),
        linear_minimizer=vertex,
    )


def make_small_portfolio(n=12, s=3, seed=5, sector_limit=0.5):
    """Small dense portfolio instance with a positive definite covariance."""
    gen = np.random.default_rng(seed)
    F = gen.standard_normal((n, n))
    sigma = F @ F.T / n + 0.3 * np.eye(n)
    A = np.zeros((s, n))
    for j, idx in enumerate(np.array_split(np.arange(n), s)):
        A[j, idx] = 1.0
    A[0, n - 1] = 1.0  # overlapping membership
    instance = PortfolioInstance(
        n=n, s=s, sector_matrix=A,
        sector_limits=np.full(s, sector_limit),
        mu=gen.uniform(-1.0, 1.0, n), risk_tradeoff=0.1,
        sigma=sigma, seed=seed,
    )
    return instance, portfolio_problem(instance)


@pytest.fixture
def toy_problem():
    return make_toy_problem()


@pytest.fixture
def small_portfolio():
    return make_small_portfolio()


def random_simplex_point(gen, n):
    return gen.dirichlet(np.ones(n))
