"""Accelerated proximal gradient (FISTA) for the penalized subproblems.

Each outer iteration minimizes q(x; theta) + nu_rho(x, lam; theta) over X,
where nu_rho collects the smooth objective part and the quadratic cone
penalty. nu_rho has Lipschitz gradient with constant L_p + rho ||A(theta)||^2,
so plain FISTA (momentum (1 + sqrt(1 + 4 m^2)) / 2, no restarts, no line
search) applies. In budget mode the solver runs the fixed iteration count

    T = ceil(sqrt(2 L / alpha) * D_x)

that suffices for an alpha-accurate value; in certified mode it stops as
soon as a measured optimality gap drops below alpha.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import spectral_norm
from .model import constraint_value

__all__ = [
    "ApgConfig", "BudgetError", "lipschitz_nu", "grad_nu", "nu_value",
    "iteration_budget", "fista", "apg_solve", "certified_solve",
]


class BudgetError(RuntimeError):
    """Raised when a required iteration budget exceeds the configured cap."""


@dataclass
class ApgConfig:
    """Inner-solver settings.

    mode is "budget" (run the guaranteed iteration count) or "certified"
    (stop early once the measured gap against reference_value is at most
    alpha; reference_value should come from a high-accuracy reference solve
    and is meant for test harnesses).
    """

    alpha: float
    mode: str = "budget"
    max_iterations: int = 2_000_000
    reference_value: Optional[float] = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("target inexactness alpha must be positive")
        if self.mode not in ("budget", "certified"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def lipschitz_nu(problem, rho, theta):
    """Gradient Lipschitz constant of the smooth subproblem part.

    L_p(theta) + rho * ||A(theta)||^2; monotone increasing in rho.
    """
    if rho < 0:
        raise ValueError("penalty rho must be nonnegative")
    A = np.asarray(problem.constraint_matrix(theta), dtype=float)
    return problem.smooth_curvature(theta) + rho * spectral_norm(A) ** 2


def grad_nu(problem, x, lam, rho, theta):
    """Gradient in x of the smooth part: grad p + rho A' proj_{K*}(h + lam/rho)."""
    if rho <= 0:
        raise ValueError("penalty rho must be positive")
    lam = np.asarray(lam, dtype=float)
    A = np.asarray(problem.constraint_matrix(theta), dtype=float)
    h = constraint_value(problem, x, theta)
    _, gp = problem.smooth_value_grad(x, theta)
    return np.asarray(gp, dtype=float) + rho * (A.T @ problem.cone.project_dual(h + lam / rho))


def nu_value(problem, x, lam, rho, theta):
    """Value of the smooth subproblem part nu_rho(x, lam; theta)."""
    if rho <= 0:
        raise ValueError("penalty rho must be positive")
    lam = np.asarray(lam, dtype=float)
    p, _ = problem.smooth_value_grad(x, theta)
    d = problem.cone.dist_neg(constraint_value(problem, x, theta) + lam / rho)
    return float(p) + 0.5 * rho * float(d) ** 2 - float(lam @ lam) / (2.0 * rho)


def iteration_budget(problem, rho, theta, alpha):
    """Iteration count sqrt(2 L / alpha) * D_x, rounded up to an integer.

    The bound is a real number while iterations are integral; ceiling keeps
    the accuracy guarantee.
    """
    L = lipschitz_nu(problem, rho, theta)
    return max(1, math.ceil(math.sqrt(2.0 * L / alpha) * problem.constants.D_x))


def fista(grad, prox, L, x0, max_steps, callback=None, stop=None):
    """Core accelerated proximal gradient loop.

    grad(y) and prox(y, g, L) define the composite model; iterates start at
    z_0 = x0 with unit momentum. Returns (last iterate, steps taken). The
    optional stop(t, z) predicate is evaluated after each step; callback(t, z)
    is invoked for tracing.
    """
    z = np.asarray(x0, dtype=float)
    y = z
    m = 1.0
    t = 0
    for t in range(1, max_steps + 1):
        g = grad(y)
        z_new = prox(y, g, L)
        m_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * m * m))
        y = z_new + ((m - 1.0) / m_next) * (z_new - z)
        z, m = z_new, m_next
        if callback is not None:
            callback(t, z)
        if stop is not None and stop(t, z):
            break
    return z, t


def apg_solve(problem, x_init, lam, rho, theta, config, epoch=None):
    """Solve one penalized subproblem from the warm start x_init.

    Returns (x, iterations_used, certified_gap_bound). In budget mode the
    gap bound is the target alpha by construction; in certified mode it is
    the measured value gap at the stopping iterate.
    """
    lam = np.asarray(lam, dtype=float)
    L = lipschitz_nu(problem, rho, theta)
    budget = max(1, math.ceil(math.sqrt(2.0 * L / config.alpha)
                              * problem.constants.D_x))

    def grad(y):
        return grad_nu(problem, y, lam, rho, theta)

    def prox(y, g, Lc):
        return problem.prox_step(y, g, Lc, theta)

    if config.mode == "budget":
        if budget > config.max_iterations:
            where = f" at epoch {epoch}" if epoch is not None else ""
            raise BudgetError(
                f"required budget {budget} exceeds cap "
                f"{config.max_iterations}{where}")
        x, steps = fista(grad, prox, L, x_init, budget)
        return x, steps, config.alpha

    if config.reference_value is None:
        raise ValueError("certified mode needs a reference_value")
    ref = config.reference_value
    cap = min(budget, config.max_iterations)
    gap = {"value": math.inf}

    def composite(z):
        return float(problem.nonsmooth_value(z, theta)) + nu_value(problem, z, lam, rho, theta)

    def stop(t, z):
        gap["value"] = composite(z) - ref
        return gap["value"] <= config.alpha

    x, steps = fista(grad, prox, L, x_init, cap, stop=stop)
    return x, steps, max(gap["value"], 0.0)


def certified_solve(problem, x_init, lam, rho, theta, gap_tol, max_iter=200_000,
                    check_every=1):
    """Inner solve with a self-contained optimality-gap certificate.

    Requires problem.linear_minimizer and q == 0. For a smooth convex
    objective F over compact X, convexity gives

        F(z) - F* <= max_{s in X} <grad F(z), z - s>,

    and the right-hand side is computable from one linear minimization.
    Stops once that certificate is at most gap_tol.

    Returns (x, value, certified_gap, steps). Raises RuntimeError when the
    certificate is not reached within max_iter steps.
    """
    if problem.linear_minimizer is None:
        raise ValueError("problem lacks a linear minimization oracle")
    lam = np.asarray(lam, dtype=float)
    L = lipschitz_nu(problem, rho, theta)

    def grad(y):
        return grad_nu(problem, y, lam, rho, theta)

    def prox(y, g, Lc):
        return problem.prox_step(y, g, Lc, theta)

    best = {"gap": math.inf, "x": np.asarray(x_init, dtype=float)}

    def stop(t, z):
        if t % check_every:
            return False
        g = grad(z)
        s = problem.linear_minimizer(g)
        cert = float(g @ (z - s))
        if cert < best["gap"]:
            best["gap"], best["x"] = cert, z
        return cert <= gap_tol

    x, steps = fista(grad, prox, L, x_init, max_iter, stop=stop)
    if best["gap"] > gap_tol:
        raise RuntimeError(
            f"gap certificate {best['gap']:.3e} above {gap_tol:.3e} "
            f"after {steps} iterations")
    x = best["x"]
    value = float(problem.nonsmooth_value(x, theta)) + nu_value(problem, x, lam, rho, theta)
    return x, value, best["gap"], steps
