"""Outer multiplier loop: schedules, the run driver, and run traces.

One outer epoch k requests the parameter estimate theta_k from the learner
(only estimates up to the current epoch are ever revealed), solves the
penalized subproblem to inexactness alpha_k warm-started at the previous
iterate, and applies the multiplier update with penalty rho_k. Two penalty
regimes are supported:

* constant rho: inexactness alpha_k = alpha0 / (k+1)^(2(1+c)); the running
  average of the iterates is the reported solution;
* geometric rho_k = rho0 beta^k with alpha_k additionally divided by
  beta^k; the last iterate is reported. This regime requires beta * tau < 1
  against the learner's linear rate.

The outer loop is sequential by construction; the learner may live
elsewhere as long as step() blocks until the next estimate is available.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .al_core import dual_update
from .bounds import inverse_power_series
from .inner_apg import ApgConfig, apg_solve, certified_solve
from .model import evaluate_f, infeasibility

__all__ = [
    "ScheduleError", "PenaltySchedule", "InexactnessSchedule", "StopRule",
    "AlmRecord", "AlmTrace", "make_constant_schedule",
    "make_increasing_schedule", "alm_run", "sequential_baseline",
    "TRACE_COLUMNS", "BOUND_COLUMNS",
]

TRACE_COLUMNS = ("k", "rho_k", "alpha_k", "inner_iters", "f_rel_subopt",
                 "infeas", "theta_err_rel", "cpu_learn_s", "cpu_opt_s")
BOUND_COLUMNS = ("v_k_bound", "subopt_upper_bound", "subopt_lower_bound",
                 "dual_gap_bound")


class ScheduleError(ValueError):
    """Invalid or incompatible penalty / inexactness configuration."""


@dataclass(frozen=True)
class PenaltySchedule:
    """Penalty sequence rho_k = rho0 * beta^k (beta == 1 means constant)."""

    rho0: float
    beta: float = 1.0

    def __post_init__(self):
        if self.rho0 <= 0:
            raise ScheduleError("rho0 must be positive")
        if self.beta < 1.0:
            raise ScheduleError("beta must be at least 1")

    @classmethod
    def constant(cls, rho):
        return cls(rho0=rho, beta=1.0)

    @classmethod
    def geometric(cls, rho0, beta):
        if beta <= 1.0:
            raise ScheduleError("geometric schedule needs beta > 1")
        return cls(rho0=rho0, beta=beta)

    @property
    def is_geometric(self):
        return self.beta > 1.0

    def rho(self, k):
        return self.rho0 * self.beta ** k


@dataclass(frozen=True)
class InexactnessSchedule:
    """Inexactness sequence alpha0 / (k+1)^(2(1+c)), optionally / beta^k.

    With c > 0 the square roots sum to a finite value, which every
    constant-penalty guarantee relies on; the geometric variant additionally
    keeps sum sqrt(alpha_k rho_k) finite.
    """

    alpha0: float
    c: float
    geometric_decay: bool = False
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha0 <= 0 or self.c <= 0:
            raise ScheduleError("alpha0 and c must be positive")
        if self.geometric_decay and self.beta <= 1.0:
            raise ScheduleError("geometric decay needs beta > 1")

    def alpha(self, k):
        a = self.alpha0 / (k + 1.0) ** (2.0 * (1.0 + self.c))
        if self.geometric_decay:
            a /= self.beta ** k
        return a


@dataclass(frozen=True)
class StopRule:
    """Run caps: hard outer-iteration limit, optional target accuracy.

    With epsilon set (and a reference value available) the run stops as
    soon as the reported iterate has relative suboptimality and
    infeasibility both at most epsilon.
    """

    max_outer: int
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.max_outer < 1:
            raise ScheduleError("max_outer must be at least 1")
        if self.epsilon is not None and not 0.0 < self.epsilon:
            raise ScheduleError("epsilon must be positive")


def make_constant_schedule(epsilon, rho_o, learner_known, c=1.0):
    """Constant-penalty schedule pair for target accuracy epsilon.

    With the parameter known in advance the penalty is rho_o / epsilon; under
    learning it stays at rho_o. In both cases alpha0 solves

        sqrt(alpha0) * sum_k (k+1)^(-(1+c)) = 1 / sqrt(2 rho),

    with the series summed to machine precision.
    """
    if not 0.0 < epsilon < 1.0:
        raise ScheduleError("epsilon must lie in (0, 1)")
    if rho_o <= 0:
        raise ScheduleError("rho_o must be positive")
    rho = rho_o / epsilon if learner_known else rho_o
    series = inverse_power_series(1.0 + c)
    alpha0 = 1.0 / (2.0 * rho * series ** 2)
    return PenaltySchedule.constant(rho), InexactnessSchedule(alpha0=alpha0, c=c)


def make_increasing_schedule(rho0, beta, alpha0, c, tau):
    """Geometric-penalty schedule pair rho_k = rho0 beta^k.

    Requires beta > 1, tau in (0, 1), and beta * tau < 1; the inexactness
    form alpha0 / ((k+1)^(2(1+c)) beta^k) makes sum sqrt(alpha_k rho_k) =
    sqrt(alpha0 rho0) * sum (k+1)^(-(1+c)), finite for every c > 0.
    """
    if beta <= 1.0:
        raise ScheduleError("beta must exceed 1")
    if not 0.0 < tau < 1.0:
        raise ScheduleError("tau must lie in (0, 1)")
    if beta * tau >= 1.0:
        raise ScheduleError(
            f"penalty growth is incompatible with the learning rate: "
            f"beta * tau = {beta * tau:.6g} must be below 1")
    return (PenaltySchedule.geometric(rho0, beta),
            InexactnessSchedule(alpha0=alpha0, c=c, geometric_decay=True, beta=beta))


@dataclass
class AlmRecord:
    """State logged after one outer epoch (or one pre-solve learning step)."""

    k: int
    rho: float
    alpha: float
    inner_iterations: int
    x: np.ndarray
    lam: np.ndarray
    x_bar: np.ndarray
    theta_err: float
    theta_err_rel: float
    f_at_theta_star: float
    infeas_at_theta_star: float
    f_rel_subopt: float
    learner_steps: int
    cpu_learn_s: float
    cpu_opt_s: float
    wall_time: float
    phase: str = "opt"


@dataclass
class AlmTrace:
    """Full run record plus the regime-dependent reported iterate."""

    records: list = field(default_factory=list)
    regime: str = "constant"
    f_star: Optional[float] = None
    converged: bool = False

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def opt_records(self):
        return [r for r in self.records if r.phase == "opt"]

    @property
    def reported_x(self):
        last = self.opt_records[-1]
        return last.x_bar if self.regime == "constant" else last.x

    @property
    def total_inner(self):
        return int(sum(r.inner_iterations for r in self.records))

    def to_csv(self, path, bound_curves=None):
        """Write the fixed-order trace CSV, one row per outer iteration.

        bound_curves, when given, maps each of the theory-overlay column
        names to an array aligned with the records and is appended after
        the empirical columns.
        """
        headers = list(TRACE_COLUMNS)
        columns = {
            "k": self.column("k"),
            "rho_k": self.column("rho"),
            "alpha_k": self.column("alpha"),
            "inner_iters": self.column("inner_iterations"),
            "f_rel_subopt": self.column("f_rel_subopt"),
            "infeas": self.column("infeas_at_theta_star"),
            "theta_err_rel": self.column("theta_err_rel"),
            "cpu_learn_s": self.column("cpu_learn_s"),
            "cpu_opt_s": self.column("cpu_opt_s"),
        }
        if bound_curves:
            for name in BOUND_COLUMNS:
                if name in bound_curves:
                    headers.append(name)
                    columns[name] = np.asarray(bound_curves[name])
        with open(path, "w") as fh:
            fh.write(",".join(headers) + "\n")
            for i in range(len(self.records)):
                cells = []
                for name in headers:
                    v = columns[name][i]
                    if name in ("k", "inner_iters"):
                        cells.append(str(int(v)))
                    else:
                        cells.append(f"{float(v):.12g}")
                fh.write(",".join(cells) + "\n")


def _theta_errors(theta, theta_star):
    err = float(np.linalg.norm(np.asarray(theta, float) - np.asarray(theta_star, float)))
    scale = float(np.linalg.norm(np.asarray(theta_star, float)))
    return err, err / scale if scale > 0 else err


def _learner_rate(learner):
    try:
        return learner.rate_tau()
    except (ValueError, AttributeError):
        return None


def alm_run(problem, learner, penalty, inexact, x0, theta_star, lambda0=None,
            stop=StopRule(max_outer=50), reference=None, apg_mode="budget",
            apg_max_iterations=2_000_000):
    """Run the inexact multiplier scheme and return its trace.

    Parameters
    ----------
    problem : ParametricProblem
    learner : object with .theta, .step(), .steps_taken
        Supplies theta_k; at epoch k exactly k step() calls have been made.
    penalty, inexact : schedules for rho_k and alpha_k.
    x0 : starting point in X.
    theta_star : true parameter used for reporting objective values,
        infeasibility, and parameter errors.
    lambda0 : starting multiplier, projected onto the dual cone (default 0).
    stop : StopRule; with epsilon set and `reference` available the run
        stops once the reported iterate meets the target.
    reference : ReferenceSolution, optional; provides f* for suboptimality.
    apg_mode : "budget" runs the guaranteed inner iteration count;
        "certified" stops each inner solve on a measured gap certificate.
    """
    if penalty.is_geometric:
        tau = _learner_rate(learner)
        if tau is not None and penalty.beta * tau >= 1.0:
            raise ScheduleError(
                f"penalty growth is incompatible with the learning rate: "
                f"beta * tau = {penalty.beta * tau:.6g} must be below 1")
    m = problem.cone.dim
    lam = np.zeros(m) if lambda0 is None else np.asarray(lambda0, dtype=float)
    lam = problem.cone.project_dual(lam)
    x = np.asarray(x0, dtype=float).copy()
    if problem.membership is not None and not problem.membership(x):
        raise ValueError("x0 is not a member of X")

    trace = AlmTrace(regime="increasing" if penalty.is_geometric else "constant",
                     f_star=None if reference is None else reference.f_value)
    x_sum = np.zeros_like(x)
    cpu_learn = 0.0
    cpu_opt = 0.0
    t_start = time.perf_counter()

    for k in range(stop.max_outer):
        t0 = time.perf_counter()
        theta_k = learner.theta if k == 0 else learner.step()
        if learner.steps_taken > k:
            raise RuntimeError("learner advanced beyond the outer epoch")
        t1 = time.perf_counter()
        cpu_learn += t1 - t0

        rho_k = penalty.rho(k)
        alpha_k = inexact.alpha(k)
        if apg_mode == "budget":
            config = ApgConfig(alpha=alpha_k, mode="budget",
                               max_iterations=apg_max_iterations)
            x, inner, _ = apg_solve(problem, x, lam, rho_k, theta_k, config, epoch=k)
        elif apg_mode == "certified":
            x, _, _, inner = certified_solve(problem, x, lam, rho_k, theta_k,
                                             gap_tol=alpha_k,
                                             max_iter=apg_max_iterations)
        else:
            raise ValueError(f"unknown apg_mode {apg_mode!r}")
        lam = dual_update(problem, lam, rho_k, x, theta_k)
        x_sum += x
        x_bar = x_sum / (k + 1.0)
        cpu_opt += time.perf_counter() - t1

        reported = x_bar if trace.regime == "constant" else x
        f_rep = evaluate_f(problem, reported, theta_star)
        infeas_rep = infeasibility(problem, reported, theta_star)
        theta_err, theta_err_rel = _theta_errors(theta_k, theta_star)
        rel = np.nan
        if reference is not None and reference.f_value != 0.0:
            rel = abs(f_rep - reference.f_value) / abs(reference.f_value)
        trace.records.append(AlmRecord(
            k=k + 1, rho=rho_k, alpha=alpha_k, inner_iterations=inner,
            x=x.copy(), lam=lam.copy(), x_bar=x_bar.copy(),
            theta_err=theta_err, theta_err_rel=theta_err_rel,
            f_at_theta_star=f_rep, infeas_at_theta_star=infeas_rep,
            f_rel_subopt=rel, learner_steps=learner.steps_taken,
            cpu_learn_s=cpu_learn, cpu_opt_s=cpu_opt,
            wall_time=time.perf_counter() - t_start,
        ))
        if (stop.epsilon is not None and not math.isnan(rel)
                and rel <= stop.epsilon and infeas_rep <= stop.epsilon):
            trace.converged = True
            break
    return trace


def sequential_baseline(problem, learner, learn_budget, penalty, inexact, x0,
                        theta_star, **run_kwargs):
    """Learn-then-optimize baseline.

    Runs the learner for learn_budget steps while the decision variable
    stays at x0 (logged as flat learning-phase rows), freezes the estimate,
    and then runs the multiplier scheme against it. The frozen estimate
    generally differs from the true parameter, so the optimization phase
    plateaus at a positive suboptimality.
    """
    from .learning import FrozenLearner

    if learn_budget < 0:
        raise ValueError("learn_budget must be nonnegative")
    reference = run_kwargs.get("reference")
    x0 = np.asarray(x0, dtype=float)
    f0 = evaluate_f(problem, x0, theta_star)
    infeas0 = infeasibility(problem, x0, theta_star)
    rel0 = np.nan
    if reference is not None and reference.f_value != 0.0:
        rel0 = abs(f0 - reference.f_value) / abs(reference.f_value)

    learn_records = []
    cpu_learn = 0.0
    t_start = time.perf_counter()
    for j in range(learn_budget):
        t0 = time.perf_counter()
        theta_j = learner.step()
        cpu_learn += time.perf_counter() - t0
        theta_err, theta_err_rel = _theta_errors(theta_j, theta_star)
        learn_records.append(AlmRecord(
            k=j + 1, rho=0.0, alpha=0.0, inner_iterations=0,
            x=x0.copy(), lam=np.zeros(problem.cone.dim), x_bar=x0.copy(),
            theta_err=theta_err, theta_err_rel=theta_err_rel,
            f_at_theta_star=f0, infeas_at_theta_star=infeas0,
            f_rel_subopt=rel0, learner_steps=learner.steps_taken,
            cpu_learn_s=cpu_learn, cpu_opt_s=0.0,
            wall_time=time.perf_counter() - t_start, phase="learn",
        ))

    frozen = FrozenLearner(learner.theta)
    trace = alm_run(problem, frozen, penalty, inexact, x0, theta_star, **run_kwargs)
    for rec in trace.records:
        rec.k += learn_budget
        rec.cpu_learn_s += cpu_learn
        rec.learner_steps += learn_budget
    trace.records = learn_records + trace.records
    return trace
