import json
import os
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def run_cli(*args, cwd=None):
    env = dict(os.environ)
    env["PYTHONPATH"] = str(ROOT / "src") + os.pathsep + env.get("PYTHONPATH", "")
    return subprocess.run([sys.executable, "-m", "simalm.cli", *args],
                          capture_output=True, text=True, env=env, cwd=cwd)


def small_config(tmp_path, out_name, **overrides):
    payload = {
        "n": 30, "s": 5, "seed": 3, "epsilon": [0.1],
        "regime": "constant", "specification": "learned",
        "rho_o": 1.0, "beta": 1.05, "c": 1.0,
        "sequential_budgets": [0, 2, 4],
        "output_dir": str(tmp_path / out_name),
    }
    payload.update(overrides)
    path = tmp_path / f"{out_name}.json"
    path.write_text(json.dumps(payload))
    return path


def test_missing_config_file_is_config_error(tmp_path):
    res = run_cli("table", "--config", str(tmp_path / "nope.json"))
    assert res.returncode == 2


def test_invalid_regime_is_config_error(tmp_path):
    cfg = small_config(tmp_path, "bad", regime="warp")
    res = run_cli("table", "--config", str(cfg))
    assert res.returncode == 2
    assert "configuration error" in res.stderr


def test_incompatible_penalty_growth_is_config_error(tmp_path):
    # beta so large that beta * tau >= 1 against the measured learning rate
    cfg = small_config(tmp_path, "fast", regime="increasing", beta=2.6)
    res = run_cli("table", "--config", str(cfg))
    assert res.returncode == 2


def test_generate_writes_instance_files(tmp_path):
    cfg = small_config(tmp_path, "gen")
    res = run_cli("generate", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    out = tmp_path / "gen"
    for name in ("instance.json", "scs.json", "sigma_star.npy",
                 "learner_errors.npy", "meta.json"):
        assert (out / name).exists()
    meta = json.loads((out / "meta.json").read_text())
    assert 0.0 < meta["tau_hat"] < 1.0
    assert meta["kkt_residual"] <= 1e-9


def test_solve_writes_trace(tmp_path):
    cfg = small_config(tmp_path, "solve")
    res = run_cli("solve", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    trace = tmp_path / "solve" / "trace_constant_learned_eps0.1.csv"
    assert trace.exists()
    header = trace.read_text().splitlines()[0]
    assert header.startswith("k,rho_k,alpha_k,inner_iters,f_rel_subopt,infeas")
    assert "v_k_bound" in header


def test_table_subcommand_and_flags(tmp_path):
    cfg = small_config(tmp_path, "table")
    res = run_cli("table", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    out = tmp_path / "table"
    assert (out / "table_constant_learned.csv").exists()
    assert (out / "table_constant_learned_timing.csv").exists()
    # flag overrides: different spec goes to a different file
    res = run_cli("table", "--config", str(cfg), "--spec", "known",
                  "--epsilon", "0.2")
    assert res.returncode == 0, res.stderr
    assert (out / "table_constant_known.csv").exists()


def test_seqsim_subcommand(tmp_path):
    cfg = small_config(tmp_path, "seqsim")
    res = run_cli("seqsim", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "seqsim" / "seqsim.csv").exists()


def test_bounds_subcommand(tmp_path):
    cfg = small_config(tmp_path, "bounds")
    res = run_cli("bounds", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    out = tmp_path / "bounds"
    assert (out / "bound_constants_constant.csv").exists()
    assert (out / "bound_curves_constant.csv").exists()


def test_table_byte_identical_across_runs(tmp_path):
    cfg1 = small_config(tmp_path, "det1")
    cfg2 = small_config(tmp_path, "det2")
    res1 = run_cli("table", "--config", str(cfg1))
    res2 = run_cli("table", "--config", str(cfg2))
    assert res1.returncode == 0 and res2.returncode == 0
    t1 = (tmp_path / "det1" / "table_constant_learned.csv").read_bytes()
    t2 = (tmp_path / "det2" / "table_constant_learned.csv").read_bytes()
    assert t1 == t2
