"""Experiment harness: instance generation, full runs, tables, comparisons.

The pipeline mirrors the portfolio study: banded ground-truth covariance and
uniform mean returns generate a sample covariance, the sparse covariance
selection problem defines the learning target Sigma*, and the portfolio
program at Sigma* is solved under four regimes (constant or geometric
penalty, parameter known or learned). Every derived file is a deterministic
function of the configuration seed; wall-clock timings are written to
sidecar files so the primary CSV outputs are byte-reproducible.
"""

import json
import time
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .bounds import (BoundInputs, b_k, dual_gap_bound,
                     infeasibility_bound_geometric, primal_subopt_lower,
                     primal_subopt_upper, v_of_k)
from .inner_apg import BudgetError, certified_solve
from .learning import (AdmmScsLearner, ScsProblem, SyntheticLearner,
                       admm_solve, estimate_tau)
from .linalg import spectral_norm
from .model import PortfolioInstance, portfolio_problem
from .outer_alm import (StopRule, alm_run, make_constant_schedule,
                        make_increasing_schedule, sequential_baseline)
from .reference import portfolio_reference

__all__ = [
    "ExperimentConfig", "SampleData", "InstanceBundle", "TableRow",
    "band_covariance", "make_sectors", "generate_instance", "prepare_bundle",
    "save_bundle", "load_bundle", "portfolio_kappa", "bound_inputs_for_run",
    "bound_curves_for_trace", "dual_gap_estimates", "run_solve", "run_table",
    "write_table", "run_seq_vs_sim", "write_seqsim",
]

_FMT = "{:.12g}"

_MAX_OUTER = {"constant": {"known": 40, "learned": 400}, "increasing": {"known": 150, "learned": 150}}


@dataclass(frozen=True)
class ExperimentConfig:
    """Run configuration; serialized verbatim as the config-file schema."""

    n: int = 100
    s: int = 10
    seed: int = 12
    epsilon: tuple = (1e-1, 1e-2)
    regime: str = "constant"
    specification: str = "known"
    rho_o: float = 1.0
    beta: float = 1.05
    c: float = 1.0
    sequential_budgets: tuple = (0, 2, 4, 6)
    output_dir: str = "runs"

    def __post_init__(self):
        if not (self.n >= self.s >= 1):
            raise ValueError("need n >= s >= 1")
        eps = tuple(float(e) for e in self.epsilon)
        if not all(0.0 < e < 1.0 for e in eps):
            raise ValueError("epsilon values must lie in (0, 1)")
        if self.regime not in ("constant", "increasing"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.specification not in ("known", "learned"):
            raise ValueError(f"unknown specification {self.specification!r}")
        if self.rho_o <= 0 or self.c <= 0:
            raise ValueError("rho_o and c must be positive")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "sequential_budgets",
                           tuple(int(b) for b in self.sequential_budgets))

    def to_json(self, path=None):
        text = json.dumps(asdict(self), sort_keys=True, indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, source):
        path = Path(source) if not str(source).lstrip().startswith("{") else None
        payload = json.loads(path.read_text() if path else source)
        return cls(**payload)


@dataclass
class SampleData:
    """Ground truth and the sampled returns behind one instance."""

    mu_true: np.ndarray
    sigma_true: np.ndarray
    samples: np.ndarray
    sample_cov: np.ndarray


def band_covariance(n, width=10):
    """Banded covariance sigma_ij = max(1 - |i-j| / width, 0)."""
    idx = np.arange(n)
    return np.maximum(1.0 - np.abs(idx[:, None] - idx[None, :]) / width, 0.0)


def make_sectors(n, s, rng, overlap=0.2):
    """0/1 sector matrix: contiguous blocks plus random spillover.

    Every asset belongs to its block sector and, with probability `overlap`,
    also to the next sector (wrapping), so sectors may overlap and are not a
    partition.
    """
    A = np.zeros((s, n))
    blocks = np.array_split(np.arange(n), s)
    block_of = np.empty(n, dtype=int)
    for j, idx in enumerate(blocks):
        A[j, idx] = 1.0
        block_of[idx] = j
    extra = rng.random(n) < overlap
    A[(block_of + 1) % s, np.arange(n)] = np.where(extra, 1.0, A[(block_of + 1) % s, np.arange(n)])
    return A


def _sample_instance(config, seed, sector_limit=0.3, psd_floor=1e-2, upsilon=0.4,
                     risk_tradeoff=0.1):
    n, s = config.n, config.s
    rng = np.random.default_rng(seed)
    mu_true = rng.uniform(-1.0, 1.0, n)
    sigma_true = band_covariance(n)
    chol = np.linalg.cholesky(sigma_true)
    p = n // 2
    samples = mu_true + rng.standard_normal((p, n)) @ chol.T
    centered = samples - samples.mean(axis=0)
    sample_cov = centered.T @ centered / (p - 1)
    A = make_sectors(n, s, rng)
    instance = PortfolioInstance(
        n=n, s=s, sector_matrix=A,
        sector_limits=np.full(s, sector_limit),
        mu=mu_true, risk_tradeoff=risk_tradeoff,
        sigma=sigma_true, seed=seed,
    )
    scs = ScsProblem(S=sample_cov, upsilon=upsilon, psd_floor=psd_floor)
    return instance, scs, SampleData(mu_true, sigma_true, samples, sample_cov)


def generate_instance(config, max_attempts=50, binding_tol=1e-7, f_floor=1e-3,
                      load_gap=0.04):
    """Draw a reproducible instance whose sector constraints bind.

    The ground-truth covariance is positive definite by construction
    (checked), and uniform weights must be strictly feasible so first-order
    runs can start there. Binding is verified at the learned covariance
    limit: when the nominal cap 0.3 is slack there, the caps are lowered to
    the midpoint between the uniform sector load and the peak sector
    exposure of the cap-free optimum, which makes at least one cap active
    while keeping the uniform start strictly feasible. Seeds whose cap-free
    optimum is too spread out to leave room for that window (or whose
    optimal value is degenerate) are skipped deterministically, so a given
    configuration seed always yields the same instance.
    """
    from .reference import simplex_qp

    for attempt in range(max_attempts):
        seed = config.seed + attempt
        instance, scs, sample = _sample_instance(config, seed)
        w = np.linalg.eigvalsh(sample.sigma_true)
        if w.min() <= 1e-10:
            raise RuntimeError("ground-truth covariance is not positive definite")
        uniform_load = instance.sector_matrix.sum(axis=1) / config.n
        if np.any(uniform_load >= instance.sector_limits):
            continue
        sigma_star, _ = admm_solve(scs, tol=1e-9)
        x_free, _, _ = simplex_qp(0.5 * (sigma_star + sigma_star.T),
                                  -instance.risk_tradeoff * instance.mu)
        free_peak = float(np.max(instance.sector_matrix @ x_free))
        cap = float(instance.sector_limits[0])
        if free_peak <= cap + binding_tol:
            if free_peak - float(uniform_load.max()) < load_gap:
                continue
            cap = round(0.5 * (float(uniform_load.max()) + free_peak), 3)
            instance = PortfolioInstance(
                n=instance.n, s=instance.s,
                sector_matrix=instance.sector_matrix,
                sector_limits=np.full(instance.s, cap),
                mu=instance.mu, risk_tradeoff=instance.risk_tradeoff,
                sigma=instance.sigma, seed=seed)
        ref = portfolio_reference(instance, sigma=sigma_star)
        slack = instance.sector_limits - instance.sector_matrix @ ref.x
        if np.min(slack) <= binding_tol and abs(ref.f_value) >= f_floor:
            return instance, scs, sample
    raise RuntimeError(f"no instance with binding sector constraints found "
                       f"in {max_attempts} attempts from seed {config.seed}")


@dataclass
class InstanceBundle:
    """Instance plus every derived reference quantity experiments reuse."""

    config: ExperimentConfig
    instance: PortfolioInstance
    scs: ScsProblem
    sigma_star: np.ndarray
    learner_errors: np.ndarray
    tau_hat: float
    tau_cert: float
    reference: object
    binding: np.ndarray
    admm_sweeps: int

    @property
    def theta0_err(self):
        return float(self.learner_errors[0])

    def problem(self, kappa=None):
        if kappa is None:
            kappa = portfolio_kappa(self.instance, self.scs.psd_floor)
        return portfolio_problem(self.instance, kappa=kappa)


def portfolio_kappa(instance, psd_floor):
    """Certified sensitivity constant of the inner solution map in Sigma.

    The inner problems are psd_floor-strongly convex for every revealed
    covariance, so the solution map moves by at most D_x / psd_floor times
    the Frobenius change of Sigma, and the constraint map is theta-free:
    kappa = ||A|| * D_x / psd_floor.
    """
    return spectral_norm(instance.sector_matrix) * 1.0 / psd_floor


def _certified_rate(errors, floor=1e-10):
    """Smallest tau with err_k <= tau^k err_0 across the usable history."""
    errors = np.asarray(errors, dtype=float)
    e0 = errors[0]
    rates = [(errors[k] / e0) ** (1.0 / k)
             for k in range(1, errors.size) if errors[k] > floor * e0]
    return float(np.clip(max(rates), 1e-12, 1.0 - 1e-12))


def prepare_bundle(config, admm_tol=1e-9):
    """Generate an instance and compute every shared reference quantity.

    Runs the learning iteration to convergence for Sigma*, fits and
    certifies its geometric rate, and solves the portfolio program at
    Sigma* for (x*, lambda*, f*). The error history is aligned with the
    sequence a learner reveals (the inert first sweep dropped), so
    errors[k] = ||theta_k - Sigma*|| for the k-th revealed estimate.
    """
    instance, scs, _sample = generate_instance(config)
    sigma_star, info = admm_solve(scs, tol=admm_tol, collect_history=True)
    errors = np.array([np.linalg.norm(S - sigma_star, "fro")
                       for S in info["history"][1:]])
    usable = errors > max(100.0 * admm_tol, 1e-12)
    tau_hat = estimate_tau(errors[usable])
    tau_cert = _certified_rate(errors)
    reference = portfolio_reference(instance, sigma=sigma_star)
    binding = (instance.sector_limits - instance.sector_matrix @ reference.x) <= 1e-7
    return InstanceBundle(
        config=config, instance=instance, scs=scs, sigma_star=sigma_star,
        learner_errors=errors, tau_hat=tau_hat, tau_cert=tau_cert,
        reference=reference, binding=binding, admm_sweeps=info["sweeps"],
    )


def save_bundle(bundle, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle.instance.to_json(out / "instance.json")
    bundle.scs.to_json(out / "scs.json")
    np.save(out / "sigma_star.npy", bundle.sigma_star)
    np.save(out / "learner_errors.npy", bundle.learner_errors)
    meta = {
        "instance_key": {"n": bundle.config.n, "s": bundle.config.s,
                         "seed": bundle.config.seed},
        "tau_hat": bundle.tau_hat,
        "tau_cert": bundle.tau_cert,
        "f_star": bundle.reference.f_value,
        "lambda_star": bundle.reference.lam.tolist(),
        "x_star": bundle.reference.x.tolist(),
        "kkt_residual": bundle.reference.kkt_residual,
        "binding": bundle.binding.astype(int).tolist(),
        "admm_sweeps": bundle.admm_sweeps,
    }
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")


def load_bundle(config, out_dir):
    from .reference import ReferenceSolution

    out = Path(out_dir)
    meta = json.loads((out / "meta.json").read_text())
    key = meta.get("instance_key", {})
    if key != {"n": config.n, "s": config.s, "seed": config.seed}:
        raise ValueError("cached bundle belongs to a different instance")
    instance = PortfolioInstance.from_json(out / "instance.json")
    scs = ScsProblem.from_json(out / "scs.json")
    sigma_star = np.load(out / "sigma_star.npy")
    errors = np.load(out / "learner_errors.npy")
    reference = ReferenceSolution(
        x=np.array(meta["x_star"]), lam=np.array(meta["lambda_star"]),
        f_value=float(meta["f_star"]), kkt_residual=float(meta["kkt_residual"]))
    return InstanceBundle(
        config=config, instance=instance, scs=scs, sigma_star=sigma_star,
        learner_errors=errors, tau_hat=float(meta["tau_hat"]),
        tau_cert=float(meta["tau_cert"]), reference=reference,
        binding=np.array(meta["binding"], dtype=bool),
        admm_sweeps=int(meta["admm_sweeps"]),
    )


def _schedules(config, bundle, epsilon, specification=None, regime=None):
    regime = regime or config.regime
    spec = specification or config.specification
    if regime == "constant":
        return make_constant_schedule(epsilon, config.rho_o, spec == "known",
                                      c=config.c)
    tau = bundle.tau_hat if spec == "learned" else 1e-9
    return make_increasing_schedule(config.rho_o, config.beta, 1.0, config.c, tau)


def _learner(bundle, specification):
    if specification == "known":
        return SyntheticLearner(bundle.sigma_star, bundle.sigma_star, 0.5)
    return AdmmScsLearner(bundle.scs, sigma_ref=bundle.sigma_star)


def bound_inputs_for_run(bundle, penalty, inexact, specification):
    """Assemble the theoretical-bound inputs for one configured run."""
    constants = bundle.problem().constants
    known = specification == "known"
    lam_star = bundle.reference.lambda_norm
    return BoundInputs(
        rho0=penalty.rho0, beta=penalty.beta,
        alpha0=inexact.alpha0, c=inexact.c,
        tau=bundle.tau_cert if not known else 0.5,
        theta0_err=0.0 if known else bundle.theta0_err,
        lambda0_err=lam_star, lambda_star_norm=lam_star, lambda0_norm=0.0,
        kappa=constants.kappa, L_f=constants.L_f,
        L_h_theta=constants.L_h_theta, L_h_x=constants.L_h_x,
    )


def bound_curves_for_trace(trace, inputs, f_star):
    """Theory-overlay columns aligned with the trace records.

    Suboptimality bounds are scaled by 1/|f*| to match the relative
    empirical column; infeasibility bounds stay absolute. In the geometric
    regime row r holds the iterate produced at epoch r-1, so bounds are
    evaluated at k = r-1 there, and the averaged-iterate dual-gap bound
    does not apply.
    """
    ks = trace.column("k").astype(float)
    scale = abs(f_star)
    if trace.regime == "constant":
        return {
            "v_k_bound": v_of_k(inputs, ks),
            "subopt_upper_bound": primal_subopt_upper(inputs, ks) / scale,
            "subopt_lower_bound": np.abs(primal_subopt_lower(inputs, ks)) / scale,
            "dual_gap_bound": np.array([dual_gap_bound(inputs, k) for k in ks]),
        }
    epochs = ks - 1.0
    sub = b_k(inputs, epochs) / inputs.beta ** epochs / scale
    return {
        "v_k_bound": infeasibility_bound_geometric(inputs, epochs),
        "subopt_upper_bound": sub,
        "subopt_lower_bound": sub,
        "dual_gap_bound": np.full(ks.shape, np.nan),
    }


def dual_gap_estimates(problem, trace, theta_star, f_star, slack=1e-8,
                       max_iter=400_000):
    """Conservative dual-gap estimates f* - g(lambda_bar_k) per logged epoch.

    The dual value at the averaged multiplier is estimated by a certified
    inner solve; its certificate slack is added to the gap so the estimate
    errs on the large side.
    """
    records = trace.opt_records
    out = []
    lam_sum = np.zeros_like(records[0].lam)
    warm = records[0].x
    for i, rec in enumerate(records):
        lam_k, rho_k = rec.lam, rec.rho
        lam_sum += lam_k
        lam_bar = lam_sum / (i + 1.0)
        warm, value, cert, _ = certified_solve(
            problem, warm, lam_bar, rho_k, theta_star,
            gap_tol=slack, max_iter=max_iter)
        out.append(max(f_star - value, 0.0) + cert)
    return np.array(out)


@dataclass
class TableRow:
    epsilon: float
    rel_subopt: float
    infeas: float
    outer: int
    inner_total: int
    cpu_learn_s: float
    cpu_opt_s: float
    flagged: bool


def run_solve(config, epsilon, bundle, specification=None, regime=None,
              apg_mode="budget", max_outer=None):
    """One full run at a target accuracy; returns (trace, bound curves)."""
    regime = regime or config.regime
    spec = specification or config.specification
    penalty, inexact = _schedules(config, bundle, epsilon, spec, regime)
    problem = bundle.problem()
    learner = _learner(bundle, spec)
    if max_outer is None:
        max_outer = _MAX_OUTER[regime][spec]
    x0 = np.full(config.n, 1.0 / config.n)
    trace = alm_run(problem, learner, penalty, inexact, x0,
                    theta_star=bundle.sigma_star,
                    stop=StopRule(max_outer=max_outer, epsilon=epsilon),
                    reference=bundle.reference, apg_mode=apg_mode)
    inputs = bound_inputs_for_run(bundle, penalty, inexact, spec)
    curves = bound_curves_for_trace(trace, inputs, bundle.reference.f_value)
    return trace, curves


def run_table(config, bundle=None):
    """Solution quality and effort per requested accuracy.

    One row per epsilon; rows that fail to reach their target inside the
    iteration caps are flagged and the run continues.
    """
    if bundle is None:
        bundle = prepare_bundle(config)
    rows = []
    for eps in config.epsilon:
        t0 = time.perf_counter()
        try:
            trace, _ = run_solve(config, eps, bundle)
            last = trace.records[-1]
            rows.append(TableRow(
                epsilon=eps, rel_subopt=last.f_rel_subopt,
                infeas=last.infeas_at_theta_star,
                outer=len(trace.records), inner_total=trace.total_inner,
                cpu_learn_s=last.cpu_learn_s, cpu_opt_s=last.cpu_opt_s,
                flagged=not trace.converged))
        except (BudgetError, RuntimeError):
            # iteration-cap failures flag the row; the sweep continues
            rows.append(TableRow(epsilon=eps, rel_subopt=np.nan, infeas=np.nan,
                                 outer=0, inner_total=0,
                                 cpu_learn_s=0.0,
                                 cpu_opt_s=time.perf_counter() - t0,
                                 flagged=True))
    return rows


def write_table(rows, path, timing_path=None):
    """Write the deterministic table CSV; timings go to a sidecar file."""
    with open(path, "w") as fh:
        fh.write("epsilon,rel_subopt,infeas,outer,inner,flagged\n")
        for r in rows:
            fh.write(",".join([
                _FMT.format(r.epsilon), _FMT.format(r.rel_subopt),
                _FMT.format(r.infeas), str(r.outer), str(r.inner_total),
                str(int(r.flagged)),
            ]) + "\n")
    if timing_path is not None:
        with open(timing_path, "w") as fh:
            fh.write("epsilon,cpu_learn_s,cpu_opt_s\n")
            for r in rows:
                fh.write(",".join([
                    _FMT.format(r.epsilon), _FMT.format(r.cpu_learn_s),
                    _FMT.format(r.cpu_opt_s),
                ]) + "\n")


def run_seq_vs_sim(config, bundle=None, max_outer=50):
    """Learn-then-optimize sweeps against the interleaved scheme.

    Returns a dict with one suboptimality-vs-work curve per sequential
    budget plus the simultaneous run; work counts learning steps and inner
    iterations. Inner solves stop on measured gap certificates so the work
    axis reflects iterations actually needed, mirroring how effort is
    compared across schemes. Requires at least two sequential budgets.
    """
    if len(config.sequential_budgets) < 2:
        raise ValueError("need at least two sequential budgets")
    if bundle is None:
        bundle = prepare_bundle(config)
    problem = bundle.problem()
    f_star = bundle.reference.f_value
    x0 = np.full(config.n, 1.0 / config.n)
    penalty, inexact = _schedules(config, bundle, epsilon=1e-2,
                                  specification="learned", regime="increasing")
    stop = StopRule(max_outer=max_outer)

    curves = {}
    for budget in config.sequential_budgets:
        learner = AdmmScsLearner(bundle.scs, sigma_ref=bundle.sigma_star)
        trace = sequential_baseline(
            problem, learner, budget, penalty, inexact, x0,
            theta_star=bundle.sigma_star, stop=stop, reference=bundle.reference,
            apg_mode="certified")
        work, subopt = _work_curve(trace, f_star, learn_prefix=budget)
        curves[f"sequential_{budget}"] = {
            "work": work, "subopt": subopt, "plateau": float(subopt[-1]),
            "budget": budget,
        }

    learner = AdmmScsLearner(bundle.scs, sigma_ref=bundle.sigma_star)
    trace = alm_run(problem, learner, penalty, inexact, x0,
                    theta_star=bundle.sigma_star, stop=stop,
                    reference=bundle.reference, apg_mode="certified")
    work, subopt = _work_curve(trace, f_star, learn_prefix=0, interleaved=True)
    curves["simultaneous"] = {
        "work": work, "subopt": subopt, "plateau": float(subopt[-1]),
        "budget": -1,
    }
    return curves


def _work_curve(trace, f_star, learn_prefix, interleaved=False):
    work = []
    subopt = []
    inner_cum = 0
    for i, rec in enumerate(trace.records):
        inner_cum += rec.inner_iterations
        if rec.phase == "learn":
            w = rec.k
        elif interleaved:
            w = rec.learner_steps + inner_cum
        else:
            w = learn_prefix + inner_cum
        work.append(w)
        subopt.append(abs(rec.f_at_theta_star - f_star))
    return np.array(work, dtype=float), np.array(subopt)


def write_seqsim(curves, path):
    with open(path, "w") as fh:
        fh.write("scheme,step,cum_work,abs_subopt\n")
        for name in sorted(curves):
            data = curves[name]
            for i, (w, v) in enumerate(zip(data["work"], data["subopt"])):
                fh.write(f"{name},{i + 1},{_FMT.format(w)},{_FMT.format(v)}\n")
