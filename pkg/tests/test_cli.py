import json
import subprocess
import sys

import numpy as np
import pytest

from ahbopt import IterationRecord, Trace, read_csv, write_csv
from ahbopt.cli import main


def _json_stdout(capsys):
    return json.loads(capsys.readouterr().out)


def test_solve_writes_trace_summary_and_meta(tmp_path, capsys):
    code = main(["solve", "--problem", "quadratic",
                 "--params", '{"spectrum": [1.0, 10.0]}',
                 "--x0", '{"seed": 3, "norm": 2.0}',
                 "--max-iters", "50", "--out", str(tmp_path)])
    assert code == 0
    printed = capsys.readouterr().out.strip()
    assert printed == str(tmp_path / "ahb.csv")

    trace = read_csv(tmp_path / "ahb.csv")
    assert trace.records[0].k == 0
    assert trace.meta["stop_reason"] in ("max_iters", "gap_tol")

    summary = json.loads((tmp_path / "ahb.summary.json").read_text())
    assert summary["iterations"] <= 50
    assert summary["final_gap"] < 1.0
    sidecar = json.loads((tmp_path / "ahb.csv.meta.json").read_text())
    assert sidecar["problem"]["kind"] == "quadratic"
    assert sidecar["x0_seed"] == 3


def test_solve_seeded_start_is_reproducible(tmp_path):
    argv = ["solve", "--problem", "least_squares", "--seed", "5",
            "--x0", '{"seed": 11, "norm": 3.0}', "--max-iters", "40"]
    main(argv + ["--out", str(tmp_path / "a")])
    main(argv + ["--out", str(tmp_path / "b")])
    first = (tmp_path / "a" / "ahb.csv").read_bytes()
    second = (tmp_path / "b" / "ahb.csv").read_bytes()
    assert first == second


def test_solve_without_problem_is_a_config_error(tmp_path, capsys):
    assert main(["solve", "--out", str(tmp_path)]) == 1
    assert "problem" in capsys.readouterr().err


def test_unknown_flag_is_a_config_error(capsys):
    assert main(["solve", "--problem", "quadratic", "--bogus"]) == 1
    capsys.readouterr()


def test_malformed_params_json_is_a_config_error(capsys):
    assert main(["solve", "--problem", "quadratic", "--params", "{oops"]) == 1
    capsys.readouterr()


def test_solver_objective_mismatch_is_a_config_error(tmp_path, capsys):
    code = main(["solve", "--problem", "abs_value", "--max-iters", "5",
                 "--out", str(tmp_path)])
    assert code == 1
    assert "gradient" in capsys.readouterr().err


def test_overflowing_run_reports_numerical_failure(tmp_path, capsys):
    with np.errstate(over="ignore"):
        code = main(["solve", "--problem", "quadratic",
                     "--params", '{"spectrum": [1e308]}',
                     "--x0", '{"seed": 1, "norm": 100.0}',
                     "--max-iters", "5", "--out", str(tmp_path)])
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err


def test_out_path_collision_is_a_config_error(tmp_path, capsys):
    blocker = tmp_path / "occupied"
    blocker.write_text("not a directory\n")
    code = main(["solve", "--problem", "quadratic", "--max-iters", "5",
                 "--x0", '{"seed": 1}', "--out", str(blocker)])
    assert code == 1
    capsys.readouterr()


def test_compare_runs_stock_method_set(tmp_path, capsys):
    code = main(["compare", "--problem", "quadratic",
                 "--params", '{"spectrum": [1.0, 4.0]}',
                 "--x0", '{"seed": 1, "norm": 1.0}',
                 "--max-iters", "30", "--out", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.strip().endswith("compare.json")
    summaries = json.loads((tmp_path / "compare.json").read_text())
    assert set(summaries) == {"ahb", "alrhb", "nesterov", "gd"}
    for name in summaries:
        assert (tmp_path / f"{name}.csv").exists()


def test_config_file_drives_solve(tmp_path):
    config = {
        "problem": {"kind": "quadratic", "params": {"spectrum": [1.0, 10.0]}},
        "runs": [{"method": "gd", "max_iters": 20}],
        "x0": {"seed": 2, "norm": 1.0},
        "out_dir": str(tmp_path / "runs"),
    }
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["solve", "--config", str(cfg_path)]) == 0
    trace = read_csv(tmp_path / "runs" / "gd.csv")
    assert trace.records[-1].k == 20

    # Flags override the file entry by entry.
    assert main(["solve", "--config", str(cfg_path), "--max-iters", "7"]) == 0
    trace = read_csv(tmp_path / "runs" / "gd.csv")
    assert trace.records[-1].k == 7


def test_compare_rejects_disagreeing_embedded_problems(tmp_path, capsys):
    config = {
        "problem": {"kind": "quadratic", "params": {"spectrum": [1.0]}},
        "runs": [
            {"method": "gd",
             "problem": {"kind": "quadratic", "params": {"spectrum": [2.0]}}},
        ],
        "out_dir": str(tmp_path),
    }
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["compare", "--config", str(cfg_path)]) == 1
    assert "shared problem" in capsys.readouterr().err


def test_certify_growth_passes_with_slop_factor(capsys):
    code = main(["certify", "growth", "--problem", "abs_value",
                 "--phi-alpha", "1.0", "--factor", "2.0"])
    assert code == 0
    report = _json_stdout(capsys)
    assert report["violations"] == 0
    assert report["worst_ratio"] == pytest.approx(0.5)


def test_certify_kl_violations_set_exit_code(capsys):
    code = main(["certify", "kl", "--problem", "quadratic",
                 "--phi-alpha", "1.0", "--r", "0.5", "--eta", "0.1"])
    assert code == 3
    assert _json_stdout(capsys)["violations"] > 0


def test_certify_rate_needs_no_problem(capsys):
    code = main(["certify", "rate", "--delta0", "1.0", "--c", "0.1",
                 "--theta", "2.0", "--steps", "500"])
    assert code == 0
    report = _json_stdout(capsys)
    assert report["violations"] == 0
    assert report["fitted"]["C"] > 0


def test_certify_infinite_eta_uses_surrogate_and_says_so(capsys):
    code = main(["certify", "kl", "--problem", "abs_value",
                 "--phi-alpha", "1.0", "--eta", "inf"])
    assert code == 0
    report = _json_stdout(capsys)
    assert any("surrogate" in note for note in report["notes"])


def test_certify_growth_ppa_reports_per_tau(capsys):
    code = main(["certify", "growth-ppa", "--problem", "quadratic",
                 "--x", "[2.0]", "--phi-c", "1.4142135623730951",
                 "--phi-alpha", "0.5", "--tau-list", "1,0.1"])
    assert code == 0
    report = _json_stdout(capsys)
    assert report["violations"] == 0
    assert [row["tau"] for row in report["per_tau"]] == [1.0, 0.1]


def test_fit_rate_reads_solver_trace(tmp_path, capsys):
    assert main(["solve", "--problem", "quadratic",
                 "--params", '{"spectrum": [1.0]}', "--method", "gd",
                 "--gd-mu", "0.5", "--x0", '{"seed": 4, "norm": 1.0}',
                 "--max-iters", "40", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    code = main(["fit-rate", "--trace", str(tmp_path / "gd.csv"),
                 "--model", "linear", "--k-min", "1"])
    assert code == 0
    fit = _json_stdout(capsys)
    assert fit["model"] == "linear"
    assert 0.0 < fit["rho"] < 1.0


def test_fit_rate_without_distances_is_a_config_error(tmp_path, capsys):
    records = [IterationRecord(k=k, fval=1.0, gap=1.0, gnorm=1.0, alpha=0.5,
                               beta=0.0, step_norm=0.0, dist=None)
               for k in range(12)]
    path = tmp_path / "no_dist.csv"
    write_csv(Trace(records=records), path)
    code = main(["fit-rate", "--trace", str(path), "--model", "linear"])
    assert code == 1
    assert "distance" in capsys.readouterr().err


def test_module_invocation_smoke(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "ahbopt", "solve", "--problem", "quadratic",
         "--x0", '{"seed": 1}', "--max-iters", "5", "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert result.returncode == 0
    assert result.stdout.strip().endswith("ahb.csv")
