import csv
import json

import numpy as np
import pytest

from simalm.experiments import (ExperimentConfig, band_covariance,
                                generate_instance, load_bundle, make_sectors,
                                portfolio_kappa, prepare_bundle,
                                run_seq_vs_sim, run_solve, run_table,
                                save_bundle, write_seqsim, write_table)
from simalm.linalg import spectral_norm
from simalm.outer_alm import TRACE_COLUMNS, BOUND_COLUMNS


@pytest.fixture(scope="module")
def small_config():
    return ExperimentConfig(n=30, s=5, seed=3, epsilon=(0.1,),
                            regime="constant", specification="learned")


@pytest.fixture(scope="module")
def small_bundle(small_config):
    return prepare_bundle(small_config)


def test_band_covariance_values():
    sigma = band_covariance(15)
    assert sigma[0, 0] == 1.0
    assert sigma[0, 5] == 0.5   # |i - j| = 5
    assert sigma[0, 10] == 0.0  # |i - j| = 10
    assert np.all(np.linalg.eigvalsh(sigma) > 0)


def test_sample_counts_and_reproducibility():
    config = ExperimentConfig(n=30, s=5, seed=3, epsilon=(0.1,))
    inst1, scs1, sample1 = generate_instance(config)
    inst2, scs2, sample2 = generate_instance(config)
    assert sample1.samples.shape == (15, 30)  # p = n / 2
    assert inst1.to_json() == inst2.to_json()
    np.testing.assert_array_equal(sample1.samples, sample2.samples)
    np.testing.assert_array_equal(scs1.S, scs2.S)


def test_sectors_cover_every_asset(rng):
    A = make_sectors(40, 7, rng)
    assert np.all(A.sum(axis=0) >= 1)
    assert np.all((A == 0) | (A == 1))
    assert np.all(A.sum(axis=1) >= 1)


def test_generated_instance_is_well_posed(small_bundle):
    inst = small_bundle.instance
    # uniform start strictly feasible
    load = inst.sector_matrix.sum(axis=1) / inst.n
    assert np.all(load < inst.sector_limits)
    # at least one cap binds at the learned covariance limit
    assert small_bundle.binding.any()
    assert abs(small_bundle.reference.f_value) >= 1e-3
    assert small_bundle.reference.kkt_residual <= 1e-9


def test_learner_error_alignment(small_bundle):
    from simalm.learning import AdmmScsLearner

    learner = AdmmScsLearner(small_bundle.scs, sigma_ref=small_bundle.sigma_star)
    assert learner.errors[0] == pytest.approx(small_bundle.theta0_err)
    learner.step()
    assert learner.errors[1] == pytest.approx(small_bundle.learner_errors[1])
    # certified envelope covers the revealed sequence pointwise
    errs = small_bundle.learner_errors
    tau = small_bundle.tau_cert
    for k in range(1, len(errs)):
        if errs[k] > 1e-8:
            assert errs[k] <= tau ** k * errs[0] * (1 + 1e-9)


def test_bundle_round_trip(tmp_path, small_config, small_bundle):
    save_bundle(small_bundle, tmp_path)
    loaded = load_bundle(small_config, tmp_path)
    np.testing.assert_allclose(loaded.sigma_star, small_bundle.sigma_star)
    assert loaded.tau_hat == small_bundle.tau_hat
    assert loaded.reference.f_value == small_bundle.reference.f_value
    np.testing.assert_array_equal(loaded.binding, small_bundle.binding)


def test_portfolio_kappa_formula(small_bundle):
    inst = small_bundle.instance
    got = portfolio_kappa(inst, small_bundle.scs.psd_floor)
    assert got == pytest.approx(
        spectral_norm(inst.sector_matrix) / small_bundle.scs.psd_floor)


def test_run_table_rows_meet_targets(small_config, small_bundle):
    rows = run_table(small_config, small_bundle)
    assert len(rows) == 1
    row = rows[0]
    assert not row.flagged
    assert row.rel_subopt <= row.epsilon
    assert row.infeas <= row.epsilon
    assert row.outer >= 1 and row.inner_total >= 1


def test_run_table_deterministic(small_config, small_bundle):
    rows1 = run_table(small_config, small_bundle)
    rows2 = run_table(small_config, small_bundle)
    assert rows1[0].rel_subopt == rows2[0].rel_subopt
    assert rows1[0].inner_total == rows2[0].inner_total


def test_write_table_csv(tmp_path, small_config, small_bundle):
    rows = run_table(small_config, small_bundle)
    path = tmp_path / "table.csv"
    timing = tmp_path / "timing.csv"
    write_table(rows, path, timing)
    parsed = list(csv.DictReader(open(path)))
    assert list(parsed[0]) == ["epsilon", "rel_subopt", "infeas", "outer",
                               "inner", "flagged"]
    assert float(parsed[0]["epsilon"]) == 0.1
    timing_rows = list(csv.DictReader(open(timing)))
    assert list(timing_rows[0]) == ["epsilon", "cpu_learn_s", "cpu_opt_s"]


def test_trivially_loose_accuracy_converges_fast(small_config, small_bundle):
    trace, _ = run_solve(small_config, 0.5, small_bundle)
    assert trace.converged
    assert len(trace) <= 2


def test_trivially_feasible_instance_converges_at_first_epoch(small_bundle):
    # caps so generous the constraints never bind: one epoch suffices
    from simalm.learning import SyntheticLearner
    from simalm.model import PortfolioInstance, portfolio_problem
    from simalm.outer_alm import StopRule, alm_run, make_constant_schedule
    from simalm.reference import portfolio_reference

    base = small_bundle.instance
    inst = PortfolioInstance(
        n=base.n, s=base.s, sector_matrix=base.sector_matrix,
        sector_limits=np.full(base.s, 10.0), mu=base.mu,
        risk_tradeoff=base.risk_tradeoff, sigma=small_bundle.sigma_star,
        seed=base.seed)
    problem = portfolio_problem(inst)
    reference = portfolio_reference(inst)
    penalty, inexact = make_constant_schedule(0.5, 1.0, learner_known=True)
    learner = SyntheticLearner(inst.sigma, inst.sigma, 0.5)
    trace = alm_run(problem, learner, penalty, inexact,
                    x0=np.full(inst.n, 1.0 / inst.n), theta_star=inst.sigma,
                    stop=StopRule(max_outer=10, epsilon=0.5),
                    reference=reference)
    assert trace.converged
    assert len(trace) == 1
    assert trace.records[0].infeas_at_theta_star == 0.0


def test_solve_emits_bound_overlay_columns(tmp_path, small_config, small_bundle):
    trace, curves = run_solve(small_config, 0.1, small_bundle)
    assert set(curves) == set(BOUND_COLUMNS)
    path = tmp_path / "trace.csv"
    trace.to_csv(path, bound_curves=curves)
    parsed = list(csv.DictReader(open(path)))
    assert tuple(parsed[0])[:9] == TRACE_COLUMNS
    assert set(tuple(parsed[0])[9:]) == set(BOUND_COLUMNS)
    # overlay soundness on this run
    for rec, row in zip(trace.records, parsed):
        assert rec.infeas_at_theta_star <= float(row["v_k_bound"])
        assert rec.f_rel_subopt <= float(row["subopt_upper_bound"])


def test_increasing_overlay_majorizes(small_config, small_bundle):
    trace, curves = run_solve(small_config, 0.1, small_bundle,
                              regime="increasing", specification="learned")
    for i, rec in enumerate(trace.records):
        assert rec.infeas_at_theta_star <= curves["v_k_bound"][i]
        assert rec.f_rel_subopt <= curves["subopt_upper_bound"][i]


def test_seq_vs_sim_shape(small_config, small_bundle):
    curves = run_seq_vs_sim(small_config, small_bundle, max_outer=30)
    sim = curves["simultaneous"]["plateau"]
    seq = sorted((c["budget"], c["plateau"]) for k, c in curves.items()
                 if c["budget"] >= 0)
    assert len(seq) >= 2
    assert all(p > sim for _, p in seq)
    plateaus = [p for _, p in seq]
    assert all(a >= b for a, b in zip(plateaus, plateaus[1:]))
    # sequential curves are flat while learning
    zero_budget = curves["sequential_0"]
    assert zero_budget["work"][0] >= 1


def test_write_seqsim_csv(tmp_path, small_config, small_bundle):
    curves = run_seq_vs_sim(small_config, small_bundle, max_outer=10)
    path = tmp_path / "seqsim.csv"
    write_seqsim(curves, path)
    parsed = list(csv.DictReader(open(path)))
    assert list(parsed[0]) == ["scheme", "step", "cum_work", "abs_subopt"]
    schemes = {row["scheme"] for row in parsed}
    assert "simultaneous" in schemes


def test_config_json_round_trip(tmp_path):
    config = ExperimentConfig(n=24, s=4, seed=9, epsilon=(0.2, 0.1),
                              regime="increasing", specification="learned",
                              rho_o=2.0, beta=1.04, c=0.5,
                              sequential_budgets=(0, 3), output_dir="x")
    path = tmp_path / "config.json"
    config.to_json(path)
    loaded = ExperimentConfig.from_json(path)
    assert loaded == config
    payload = json.loads(config.to_json())
    assert sorted(payload) == ["beta", "c", "epsilon", "n", "output_dir",
                               "regime", "rho_o", "s", "seed",
                               "sequential_budgets", "specification"]


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n=5, s=6)
    with pytest.raises(ValueError):
        ExperimentConfig(epsilon=(1.5,))
    with pytest.raises(ValueError):
        ExperimentConfig(regime="warp")
    with pytest.raises(ValueError):
        ExperimentConfig(specification="psychic")
