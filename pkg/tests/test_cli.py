import csv
import json
from collections import defaultdict

import numpy as np
import pytest

from sobolev_lab import cli
from sobolev_lab.config import RunConfig, load_config
from sobolev_lab.domain import build_box_grid
from sobolev_lab.instanton import compute_S
from sobolev_lab.io import read_field, read_report, write_field
from sobolev_lab.minimize import SolverFailure, TRACE_COLUMNS
from sobolev_lab.verify import constant_main_margin

THRESHOLD = compute_S(5) / 2**0.4
SMALL_BOX = {"kind": "box", "N": 5, "sides": [1, 1, 1, 1, 1], "points_per_axis": 5}


def _write_cfg(tmp_path, **overrides):
    cfg = {"domain": SMALL_BOX, "params": {"a": 1.0, "alpha": 0.7}}
    cfg.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


def _run(cmd, cfg_path, out, *extra):
    return cli.main([cmd, "--config", str(cfg_path), "--out", str(out), *extra])


def test_report_constant_field(tmp_path):
    cfg = _write_cfg(tmp_path)
    assert _run("report", cfg, tmp_path / "o") == 0
    rep = read_report(tmp_path / "o" / "report.txt")
    assert float(rep["delta"]) == pytest.approx(1.0, abs=1e-10)
    assert float(rep["psi"]) == pytest.approx(1.7, abs=1e-10)
    assert rep["n_nodes"] == str(5**5)
    # 17 significant digits
    assert rep["phi"] == "%.17g" % float(rep["phi"])


def test_report_instanton_field(tmp_path):
    cfg = _write_cfg(tmp_path, field={"type": "instanton", "epsilon": 0.3, "center": "face"})
    assert _run("report", cfg, tmp_path / "o") == 0
    rep = read_report(tmp_path / "o" / "report.txt")
    assert rep["field"] == "instanton(eps=0.3)"
    assert float(rep["psi"]) > 0


def test_report_from_field_file(tmp_path):
    d = build_box_grid(5, [1] * 5, 5)
    vals = 2.0 * np.ones(d.shape)
    write_field(tmp_path / "u.field", d, vals)
    cfg = _write_cfg(tmp_path, field={"type": "file", "path": str(tmp_path / "u.field")})
    assert _run("report", cfg, tmp_path / "o") == 0
    rep = read_report(tmp_path / "o" / "report.txt")
    assert float(rep["psi"]) == pytest.approx(1.7, abs=1e-10)


def test_field_file_wrong_count(tmp_path, capsys):
    path = tmp_path / "bad.field"
    path.write_text("5 box 5\n" + "1.0\n" * 100)
    cfg = _write_cfg(tmp_path, field={"type": "file", "path": str(path)})
    assert _run("report", cfg, tmp_path / "o") == 1
    err = capsys.readouterr().err
    assert "expected 3125 node values, found 100" in err
    assert err.count("error:") == 1


def test_field_file_round_trip(tmp_path):
    d = build_box_grid(5, [1, 2, 1, 1, 1], 4)
    vals = np.random.default_rng(0).standard_normal(d.shape)
    write_field(tmp_path / "f", d, vals)
    assert np.array_equal(read_field(tmp_path / "f", d).values, vals)
    assert (tmp_path / "f").read_text().splitlines()[0] == "5 box 4"


def test_report_is_byte_identical(tmp_path):
    cfg = _write_cfg(tmp_path)
    _run("report", cfg, tmp_path / "a")
    _run("report", cfg, tmp_path / "b")
    assert (tmp_path / "a" / "report.txt").read_bytes() == (tmp_path / "b" / "report.txt").read_bytes()


@pytest.fixture(scope="module")
def minimize_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("min")
    cfg = _write_cfg(tmp, minimize={"max_iters": 60, "grad_tol": 1e-4})
    assert _run("minimize", cfg, tmp / "o") == 0
    return tmp / "o"


def test_minimize_csv_header(minimize_out):
    first = (minimize_out / "trace.csv").read_bytes().split(b"\n")[0]
    assert first == b"iter,start_id,psi,beta,delta,grad_norm,max_value,eps_scale,boundary_distance"
    assert (minimize_out / "trace.csv").read_bytes().endswith(b"\n")
    assert b"\r" not in (minimize_out / "trace.csv").read_bytes()


def test_minimize_psi_nonincreasing_per_start(minimize_out):
    with open(minimize_out / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(TRACE_COLUMNS)
    by_start = defaultdict(list)
    for r in rows:
        by_start[r["start_id"]].append(float(r["psi"]))
    assert len(by_start) == 4
    for psis in by_start.values():
        assert all(b <= a * (1 + 1e-10) for a, b in zip(psis, psis[1:]))


def test_minimize_final_grad_norm_when_converged(minimize_out):
    rep = read_report(minimize_out / "report.txt")
    with open(minimize_out / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    last = defaultdict(dict)
    for r in rows:
        last[r["start_id"]] = r
    for i, r in last.items():
        if rep[f"start.{i}.status"] == "converged":
            assert float(r["grad_norm"]) <= 1e-4
    assert rep["status"] == "ok"
    assert (minimize_out / "minimizer.field").exists()


def test_minimize_solver_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverFailure("all starts diverged: constant=diverged")

    monkeypatch.setattr(cli, "minimize_psi", boom)
    cfg = _write_cfg(tmp_path)
    assert _run("minimize", cfg, tmp_path / "o") == 2
    rep = read_report(tmp_path / "o" / "report.txt")
    assert rep["status"] == "solver_failure"
    assert "constant=diverged" in rep["error"]


def test_unknown_key_is_validation_error(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, params={"a": 1.0, "alpah": 2.0})
    assert _run("report", cfg, tmp_path / "o") == 1
    assert "alpah" in capsys.readouterr().err


def test_low_dimension_is_validation_error(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, domain={"kind": "box", "N": 3, "sides": [1, 1, 1], "points_per_axis": 5})
    assert _run("report", cfg, tmp_path / "o") == 1
    assert "below paper hypothesis" in capsys.readouterr().err


def test_bad_threads_is_validation_error(tmp_path):
    assert _run("report", _write_cfg(tmp_path), tmp_path / "o", "--threads", "0") == 1


def test_config_round_trip():
    cfg = RunConfig.model_validate(
        {"domain": SMALL_BOX, "params": {"a": 2.0, "alpha": 1.5},
         "field": {"type": "instanton", "epsilon": 0.2, "center": [0.5, 0.5, 0.5, 0.5, 0.0]},
         "minimize": {"starts": [{"kind": "random", "seed": 4}]}, "seed": 2**63}
    )
    again = RunConfig.model_validate_json(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()


def test_default_config_loads():
    assert load_config(None) == RunConfig()


def test_verify_zero_samples(tmp_path):
    cfg = _write_cfg(tmp_path, verify={"n_samples": 0, "alpha0_proxy": 10.0})
    assert _run("verify", cfg, tmp_path / "o") == 0
    rep = read_report(tmp_path / "o" / "report.txt")
    assert rep["counterexamples"] == "0"
    assert not any(k.startswith("check.") for k in rep)


def test_verify_counterexample_exit_code(tmp_path):
    cfg = _write_cfg(tmp_path, verify={"n_samples": 2, "alpha0_proxy": 0.0})
    assert _run("verify", cfg, tmp_path / "o") == 3
    rep = read_report(tmp_path / "o" / "report.txt")
    n = int(rep["counterexamples"])
    assert n > 0
    files = [rep[f"counterexample.{i}.file"] for i in range(n)]
    assert all((tmp_path / "o" / f).exists() for f in files)


def test_verify_constant_margin_closed_form(tmp_path):
    # alpha0_proxy = 0 puts the constant below the threshold, so its main
    # margin is reported as a counterexample and can be read back exactly
    cfg = _write_cfg(tmp_path, verify={"n_samples": 1, "alpha0_proxy": 0.0})
    assert _run("verify", cfg, tmp_path / "o") == 3
    rep = read_report(tmp_path / "o" / "report.txt")
    n = int(rep["counterexamples"])
    hits = [i for i in range(n)
            if rep[f"counterexample.{i}.check"] == "main" and rep[f"counterexample.{i}.sample"] == "constant"]
    assert len(hits) == 1
    exact = constant_main_margin(1.0, 1.0, 0.0, THRESHOLD, 5)
    assert float(rep[f"counterexample.{hits[0]}.margin"]) == pytest.approx(exact, abs=1e-12)
    assert rep["check.holder.failed"] == "0"


def test_seed_override_changes_random_start(tmp_path):
    cfg = _write_cfg(tmp_path, minimize={"max_iters": 2})
    _run("minimize", cfg, tmp_path / "a", "--seed", "1")
    _run("minimize", cfg, tmp_path / "b", "--seed", "2")
    ta = (tmp_path / "a" / "trace.csv").read_text()
    tb = (tmp_path / "b" / "trace.csv").read_text()
    assert ta != tb
