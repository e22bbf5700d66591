"""Closed-form theoretical constants and bound curves for both penalty regimes.

Given schedule parameters, the learning rate, and reference quantities
(distance of the starting parameter and multiplier from their limits, norm
of an optimal multiplier), these functions evaluate the constants that
bound dual suboptimality, primal infeasibility, and primal suboptimality
along a run, so empirical traces can be overlaid against theory. The
pseudo-Lipschitz constant `kappa` of the inner solution map is an input; it
scales the reported curves only and never enters the algorithm itself.

All infinite series reduce to sums of (k+1)^(-p), evaluated to absolute
accuracy below 1e-12 by explicit summation plus an integral-test
(Euler-Maclaurin) tail.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "inverse_power_series", "BoundInputs", "c_lambda", "b_g", "v_of_k",
    "u_const", "primal_subopt_upper", "primal_subopt_lower", "dual_gap_bound",
    "c_lambda_prime", "b_k", "infeasibility_bound_geometric", "bound_report",
]

_TAIL_FROM = 10_000


def inverse_power_series(p):
    """Sum of k^(-p) over k >= 1 for p > 1, to absolute error below 1e-12.

    The first terms are summed explicitly; the tail from K = 10^4 uses the
    Euler-Maclaurin expansion K^(1-p)/(p-1) + K^(-p)/2 + p K^(-p-1)/12,
    whose truncation error is below p^3 K^(-p-3).
    """
    if p <= 1.0:
        raise ValueError("series diverges for exponent <= 1")
    k = np.arange(1, _TAIL_FROM, dtype=float)
    head = float(np.sum(k ** (-p)))
    K = float(_TAIL_FROM)
    tail = K ** (1.0 - p) / (p - 1.0) + 0.5 * K ** (-p) + p * K ** (-p - 1.0) / 12.0
    return head + tail


@dataclass(frozen=True)
class BoundInputs:
    """Everything the bound formulas consume.

    rho0/beta describe the penalty schedule (beta == 1 means constant
    penalty rho0); alpha0/c the inexactness schedule alpha0 / (k+1)^(2(1+c))
    (divided by beta^k in the geometric regime). theta0_err, lambda0_err and
    lambda_star_norm are ||theta_0 - theta*||, ||lambda_0 - lambda*|| and
    ||lambda*||, obtained from the reference solve.
    """

    rho0: float
    alpha0: float
    c: float
    tau: float
    theta0_err: float
    lambda0_err: float
    lambda_star_norm: float
    beta: float = 1.0
    kappa: float = 1.0
    L_f: float = 0.0
    L_h_theta: float = 0.0
    L_h_x: float = 0.0
    lambda0_norm: float = 0.0

    def __post_init__(self):
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive")
        if self.alpha0 < 0 or self.c <= 0:
            raise ValueError("need alpha0 >= 0 and c > 0")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.beta < 1.0:
            raise ValueError("beta must be at least 1")
        for name in ("theta0_err", "lambda0_err", "lambda_star_norm",
                     "kappa", "L_f", "L_h_theta", "L_h_x", "lambda0_norm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def rho(self):
        if self.beta != 1.0:
            raise ValueError("constant-penalty quantity requested on a "
                             "geometric schedule")
        return self.rho0

    @property
    def delta(self):
        return self.beta * self.tau

    def sqrt_alpha_series(self):
        """Sum of sqrt(alpha_k) for the constant regime."""
        if self.alpha0 == 0.0:
            return 0.0
        return np.sqrt(self.alpha0) * inverse_power_series(1.0 + self.c)

    def alpha_series(self):
        """Sum of alpha_k for the constant regime."""
        if self.alpha0 == 0.0:
            return 0.0
        return self.alpha0 * inverse_power_series(2.0 * (1.0 + self.c))

    def sqrt_alpha_rho_series(self):
        """Sum of sqrt(2 alpha_k rho_k) in the geometric regime.

        The beta^k factors cancel, leaving sqrt(2 alpha0 rho0) times the
        same inverse-power series, which is finite for every c > 0.
        """
        if self.alpha0 == 0.0:
            return 0.0
        return np.sqrt(2.0 * self.alpha0 * self.rho0) * inverse_power_series(1.0 + self.c)


def c_lambda(inputs):
    """Radius bound on the multiplier iterates, constant penalty.

    sqrt(2 rho) sum sqrt(alpha_i) + rho kappa ||theta_0 - theta*|| / (1-tau)
    + ||lambda_0 - lambda*||.
    """
    rho = inputs.rho
    return (np.sqrt(2.0 * rho) * inputs.sqrt_alpha_series()
            + rho * inputs.kappa * inputs.theta0_err / (1.0 - inputs.tau)
            + inputs.lambda0_err)


def b_g(inputs):
    """Dual suboptimality constant: the averaged dual gap is at most b_g / k."""
    rho = inputs.rho
    return (inputs.lambda0_err ** 2 / (2.0 * rho)
            + c_lambda(inputs) * (np.sqrt(2.0 / rho) * inputs.sqrt_alpha_series()
                                  + inputs.kappa * inputs.theta0_err / (1.0 - inputs.tau)))


def dual_gap_bound(inputs, k):
    """Bound b_g / k on the dual gap of the averaged multiplier."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return b_g(inputs) / k


def v_of_k(inputs, k):
    """Infeasibility bound C1/sqrt(k) + C2/k for the averaged iterate."""
    if np.any(np.asarray(k) < 1):
        raise ValueError("k must be at least 1")
    k = np.asarray(k, dtype=float)
    rho = inputs.rho
    cl = c_lambda(inputs)
    C1 = np.sqrt(2.0 * b_g(inputs) / rho + (cl / rho) ** 2)
    C2 = (np.sqrt(2.0 / rho) * inputs.sqrt_alpha_series()
          + (inputs.L_h_theta + inputs.kappa) * inputs.theta0_err / (1.0 - inputs.tau))
    out = C1 / np.sqrt(k) + C2 / k
    return float(out) if out.ndim == 0 else out


def u_const(inputs):
    """Constant in the averaged-iterate suboptimality bound u_const / k."""
    rho = inputs.rho
    cbar = c_lambda(inputs) + inputs.lambda_star_norm
    return (inputs.alpha_series()
            + 0.5 * inputs.lambda0_norm ** 2
            + 0.5 * rho * inputs.L_h_theta ** 2 * inputs.theta0_err ** 2 / (1.0 - inputs.tau ** 2)
            + (cbar * inputs.L_h_theta + 2.0 * inputs.L_f) * inputs.theta0_err / (1.0 - inputs.tau))


def primal_subopt_upper(inputs, k):
    """Upper bound u_const / k on f(xbar_k) - f*."""
    if np.any(np.asarray(k) < 1):
        raise ValueError("k must be at least 1")
    return u_const(inputs) / np.asarray(k, dtype=float)


def primal_subopt_lower(inputs, k):
    """Lower bound -(rho/2) V(k)^2 - ||lambda*|| V(k) on f(xbar_k) - f*."""
    v = v_of_k(inputs, k)
    return -(0.5 * inputs.rho * v ** 2 + inputs.lambda_star_norm * v)


def _require_geometric(inputs):
    if inputs.beta <= 1.0:
        raise ValueError("geometric-regime quantity needs beta > 1")
    if inputs.delta >= 1.0:
        raise ValueError(
            f"penalty growth is incompatible with the learning rate: "
            f"beta * tau = {inputs.delta:.6g} must be below 1")


def c_lambda_prime(inputs):
    """Multiplier radius bound for the geometric penalty regime.

    sum sqrt(2 alpha_i rho_i) + rho0 kappa ||theta_0 - theta*|| / (1 - beta
    tau) + ||lambda_0 - lambda*||.
    """
    _require_geometric(inputs)
    return (inputs.sqrt_alpha_rho_series()
            + inputs.rho0 * inputs.kappa * inputs.theta0_err / (1.0 - inputs.delta)
            + inputs.lambda0_err)


def b_k(inputs, k):
    """Constant B_k in the geometric suboptimality bound B_k / beta^k.

    When L_h_theta > 0 this is the completed-square form

        (1/rho0)(2 C' + ||lambda*||)^2
        + rho0 (L_h_theta ||theta_0-theta*|| delta^k + L_f/(rho0 L_h_theta))^2
        + alpha0 / (k+1)^(2(1+c)).

    When L_h_theta == 0 the square completion degenerates, so the
    algebraically equal pre-completion form is used: the middle term becomes
    2 L_f ||theta_0 - theta*|| delta^k.
    """
    _require_geometric(inputs)
    if np.any(np.asarray(k) < 0):
        raise ValueError("k must be nonnegative")
    k = np.asarray(k, dtype=float)
    cp = c_lambda_prime(inputs)
    lead = (2.0 * cp + inputs.lambda_star_norm) ** 2 / inputs.rho0
    deltak = inputs.delta ** k
    if inputs.L_h_theta > 0:
        mid = inputs.rho0 * (inputs.L_h_theta * inputs.theta0_err * deltak
                             + inputs.L_f / (inputs.rho0 * inputs.L_h_theta)) ** 2
    else:
        mid = 2.0 * inputs.L_f * inputs.theta0_err * deltak
    out = lead + mid + inputs.alpha0 / (k + 1.0) ** (2.0 * (1.0 + inputs.c))
    return float(out) if out.ndim == 0 else out


def infeasibility_bound_geometric(inputs, k):
    """Geometric-regime infeasibility bound.

    (1/beta^k)(2 C'/rho0 + L_h_theta ||theta_0 - theta*|| delta^k).
    """
    _require_geometric(inputs)
    if np.any(np.asarray(k) < 0):
        raise ValueError("k must be nonnegative")
    k = np.asarray(k, dtype=float)
    cp = c_lambda_prime(inputs)
    out = (2.0 * cp / inputs.rho0
           + inputs.L_h_theta * inputs.theta0_err * inputs.delta ** k) / inputs.beta ** k
    return float(out) if out.ndim == 0 else out


def bound_report(inputs, k_max=50):
    """Every evaluated constant plus the bound curves over epochs 1..k_max.

    Returns {"constants": name -> value, "curves": name -> array}; the curve
    names match the trace overlay columns. Constant-penalty inputs report
    c_lambda, b_g, C1, C2, and u_const with the averaged-iterate curves;
    geometric inputs report c_lambda_prime and b_0 with the last-iterate
    curves, where row k describes the iterate produced at epoch k-1.
    """
    ks = np.arange(1, k_max + 1, dtype=float)
    if inputs.beta == 1.0:
        rho = inputs.rho
        cl = c_lambda(inputs)
        bg = b_g(inputs)
        constants = {
            "c_lambda": cl,
            "b_g": bg,
            "C1": float(np.sqrt(2.0 * bg / rho + (cl / rho) ** 2)),
            "C2": float(np.sqrt(2.0 / rho) * inputs.sqrt_alpha_series()
                        + (inputs.L_h_theta + inputs.kappa) * inputs.theta0_err
                        / (1.0 - inputs.tau)),
            "u_const": u_const(inputs),
        }
        curves = {
            "v_k_bound": v_of_k(inputs, ks),
            "subopt_upper_bound": primal_subopt_upper(inputs, ks),
            "subopt_lower_bound": np.abs(primal_subopt_lower(inputs, ks)),
            "dual_gap_bound": bg / ks,
        }
    else:
        epochs = ks - 1.0
        constants = {
            "c_lambda_prime": c_lambda_prime(inputs),
            "b_0": float(b_k(inputs, 0)),
        }
        sub = b_k(inputs, epochs) / inputs.beta ** epochs
        curves = {
            "v_k_bound": infeasibility_bound_geometric(inputs, epochs),
            "subopt_upper_bound": sub,
            "subopt_lower_bound": sub,
            "dual_gap_bound": np.full(ks.shape, np.nan),
        }
    return {"constants": constants, "curves": curves}
