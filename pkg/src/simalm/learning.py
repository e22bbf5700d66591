"""Learners that reveal the problem parameter one estimate per epoch.

A learner holds the current estimate in `theta`, advances one iteration per
`step()` call, and reports a linear convergence rate through `rate_tau()`.
Two concrete learners are provided: an exact geometric learner for
controlled tests, and a two-block ADMM solver for the sparse covariance
selection problem

    minimize (1/2) ||Sigma - S||_F^2 + upsilon * |offdiag(Sigma)|_1
    subject to Sigma >= psd_floor * I.

Learner instances are single-owner mutable state; the estimates they hand
out are fresh arrays that may be shared freely.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import jacobi_eigh, soft_threshold_offdiag, symmetrize

__all__ = [
    "SyntheticLearner", "FrozenLearner", "ScsProblem", "ScsState",
    "eigh_clip", "scs_init", "scs_admm_step", "AdmmScsLearner",
    "estimate_tau", "admm_solve",
]


class SyntheticLearner:
    """Geometric test learner: theta_k = theta* + tau^k (theta_0 - theta*).

    Realizes the linear-rate contract with equality, which makes it the
    reference double for rate experiments.
    """

    def __init__(self, theta_star, theta0, tau):
        if not 0.0 < tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        self.theta_star = np.asarray(theta_star, dtype=float).copy()
        self.theta0 = np.asarray(theta0, dtype=float).copy()
        if self.theta_star.shape != self.theta0.shape:
            raise ValueError("theta0 and theta_star shapes differ")
        self.tau = float(tau)
        self.steps_taken = 0
        self.theta = self.theta0.copy()

    @property
    def theta_dim(self):
        return self.theta_star.size

    def step(self):
        self.steps_taken += 1
        drift = self.tau ** self.steps_taken * (self.theta0 - self.theta_star)
        self.theta = self.theta_star + drift
        return self.theta.copy()

    def rate_tau(self):
        return self.tau


class FrozenLearner:
    """Degenerate learner that always reveals the same estimate.

    Used by sequential baselines after their learning budget is exhausted;
    it carries no linear-rate guarantee.
    """

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float).copy()
        self.steps_taken = 0

    @property
    def theta_dim(self):
        return self.theta.size

    def step(self):
        self.steps_taken += 1
        return self.theta.copy()

    def rate_tau(self):
        raise ValueError("a frozen estimate has no learning rate")


@dataclass(frozen=True)
class ScsProblem:
    """Sparse covariance selection inputs.

    S is the sample covariance, upsilon the l1 weight on off-diagonal
    entries, psd_floor the eigenvalue floor of the feasible set, and
    admm_penalty the splitting penalty.
    """

    S: np.ndarray
    upsilon: float = 0.4
    psd_floor: float = 1e-2
    admm_penalty: float = 1.0

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("S must be square")
        if not np.allclose(S, S.T, atol=1e-8):
            raise ValueError("S must be symmetric")
        if self.upsilon <= 0 or self.psd_floor <= 0 or self.admm_penalty <= 0:
            raise ValueError("upsilon, psd_floor and admm_penalty must be positive")
        object.__setattr__(self, "S", symmetrize(S))

    @property
    def n(self):
        return self.S.shape[0]

    def objective(self, Sigma):
        """SCS objective value at Sigma (constraint not included)."""
        Sigma = np.asarray(Sigma, dtype=float)
        off = Sigma - np.diag(np.diag(Sigma))
        return 0.5 * np.linalg.norm(Sigma - self.S, "fro") ** 2 \
            + self.upsilon * np.sum(np.abs(off))

    def to_json(self, path=None):
        payload = {
            "S": self.S.tolist(),
            "upsilon": self.upsilon,
            "psd_floor": self.psd_floor,
            "admm_penalty": self.admm_penalty,
        }
        text = json.dumps(payload, sort_keys=True, indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, source):
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(source) as fh:
                payload = json.load(fh)
        else:
            payload = json.loads(text)
        return cls(
            S=np.array(payload["S"], dtype=float),
            upsilon=float(payload["upsilon"]),
            psd_floor=float(payload["psd_floor"]),
            admm_penalty=float(payload["admm_penalty"]),
        )


@dataclass
class ScsState:
    """Mutable ADMM state: primal blocks, scaled dual, and residuals."""

    Sigma: np.ndarray
    Phi: np.ndarray
    U: np.ndarray
    k: int = 0
    primal_residual: float = np.inf
    dual_residual: float = np.inf
    eig_basis: Optional[np.ndarray] = None


def eigh_clip(M, floor, basis=None):
    """Project a symmetric matrix onto {Sigma : Sigma >= floor * I}.

    Symmetrizes defensively, factors with the Jacobi kernel (warm-started by
    `basis` when given), clamps eigenvalues below the floor, and returns
    (projected matrix, eigenvector basis).
    """
    w, V = jacobi_eigh(symmetrize(M), basis=basis)
    w = np.maximum(w, floor)
    return symmetrize((V * w) @ V.T), V


def scs_init(problem):
    """Initial ADMM state: both primal blocks at the floored sample covariance."""
    Sigma0, basis = eigh_clip(problem.S, problem.psd_floor)
    return ScsState(
        Sigma=Sigma0.copy(),
        Phi=Sigma0.copy(),
        U=np.zeros_like(Sigma0),
        eig_basis=basis,
    )


def scs_admm_step(problem, state):
    """One two-block ADMM sweep; returns (Sigma_k, new state).

    Sigma-update: eigenvalue-floored projection of
    (S + mu (Phi - U)) / (1 + mu); Phi-update: off-diagonal soft threshold
    of Sigma + U at upsilon / mu, diagonal copied; dual: U += Sigma - Phi.
    Every emitted Sigma is symmetric with smallest eigenvalue >= psd_floor.
    """
    mu = problem.admm_penalty
    target = (problem.S + mu * (state.Phi - state.U)) / (1.0 + mu)
    Sigma, basis = eigh_clip(target, problem.psd_floor, basis=state.eig_basis)
    Phi = soft_threshold_offdiag(Sigma + state.U, problem.upsilon / mu)
    U = state.U + Sigma - Phi
    new_state = ScsState(
        Sigma=Sigma,
        Phi=Phi,
        U=U,
        k=state.k + 1,
        primal_residual=float(np.linalg.norm(Sigma - Phi, "fro")),
        dual_residual=float(mu * np.linalg.norm(Phi - state.Phi, "fro")),
        eig_basis=basis,
    )
    return Sigma, new_state


class AdmmScsLearner:
    """Learner facade over the SCS ADMM iteration.

    The very first sweep provably leaves the covariance block unchanged
    (it shares the eigenbasis of the floored sample covariance), so it is
    consumed at construction; the first step() therefore already moves the
    estimate. When sigma_ref (the limit point) is supplied the learner
    records its error history, so rate_tau() can fit a geometric rate to it.
    """

    def __init__(self, problem, sigma_ref=None):
        self.problem = problem
        self.state = scs_init(problem)
        _, self.state = scs_admm_step(problem, self.state)
        self._calls = 0
        self.sigma_ref = None if sigma_ref is None else np.asarray(sigma_ref, float)
        self.errors = []
        self._record_error(self.state.Sigma)

    def _record_error(self, Sigma):
        if self.sigma_ref is not None:
            self.errors.append(float(np.linalg.norm(Sigma - self.sigma_ref, "fro")))

    @property
    def theta(self):
        return self.state.Sigma

    @property
    def theta_dim(self):
        return self.state.Sigma.size

    @property
    def steps_taken(self):
        return self._calls

    def step(self):
        Sigma, self.state = scs_admm_step(self.problem, self.state)
        self._calls += 1
        self._record_error(Sigma)
        return Sigma.copy()

    def rate_tau(self):
        if self.sigma_ref is None:
            raise ValueError("rate estimation needs the reference limit point")
        return estimate_tau(self.errors)


def estimate_tau(error_history, floor=1e-14):
    """Geometric rate fitted to an error history.

    Least-squares slope of log(error) against the iteration index,
    exponentiated and clipped into (0, 1). Raises ValueError when fewer
    than three positive errors are given or when the history does not
    decrease overall.
    """
    err = np.asarray([e for e in error_history if e > floor], dtype=float)
    if err.size < 3:
        raise ValueError("need at least 3 positive error values")
    k = np.arange(err.size, dtype=float)
    slope = np.polyfit(k, np.log(err), 1)[0]
    if slope >= 0:
        raise ValueError("error history is not decreasing; no geometric rate")
    eps = np.finfo(float).tiny
    return float(np.clip(np.exp(slope), eps, 1.0 - 1e-16))


def admm_solve(problem, tol=1e-9, max_sweeps=10_000, collect_history=False):
    """Run the SCS ADMM iteration to convergence.

    Stops when both the primal residual ||Sigma - Phi||_F and the dual
    residual mu ||Phi_k - Phi_{k-1}||_F fall below tol. Returns
    (Sigma_star, info) where info records sweeps, final residuals, and the
    Sigma history when collect_history is set.
    """
    state = scs_init(problem)
    history = [state.Sigma.copy()] if collect_history else None
    for _ in range(max_sweeps):
        Sigma, state = scs_admm_step(problem, state)
        if collect_history:
            history.append(Sigma.copy())
        if max(state.primal_residual, state.dual_residual) <= tol:
            break
    else:
        raise RuntimeError(f"ADMM did not reach residual {tol:g} "
                           f"within {max_sweeps} sweeps")
    info = {
        "sweeps": state.k,
        "primal_residual": state.primal_residual,
        "dual_residual": state.dual_residual,
        "history": history,
    }
    return state.Sigma.copy(), info
