import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from orbitpool.cli import main
from orbitpool.reporting import validate_report

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SMALL = {"grid": {"n": 128}, "plots": True}

EXPERIMENTS = {
    "theorem1_sweep": {"theorem1": {"instances": 3}, "monte_carlo": {"sample_count": 50_000}},
    "theorem2_check": {"theorem2": {"instances": 2}, "quadrature": {"n_theta": 5, "n_x": 5, "n_y": 5}},
    "curvature_se2": {"quadrature": {"n_theta": 5, "n_x": 5, "n_y": 5}},
    "signature_invariance": {"signatures": {"templates": 3, "rotations": 2}},
    "contraction_profile": {"contraction": {"a_values": [0.5, 1.0], "t_values": [0.0, 0.1]}},
}


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(Path(root).rglob("*")) if p.is_file()}


@pytest.mark.parametrize("experiment", sorted(EXPERIMENTS))
def test_run_each_experiment(tmp_path, experiment):
    cfg = write_config(tmp_path, {"experiment": experiment, "seed": 2, **SMALL, **EXPERIMENTS[experiment]})
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--quiet"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["pass"] is True
    assert summary["config"]["grid"]["n"] == 128
    reports = sorted((out / "reports").glob("*.json"))
    assert reports
    for p in reports:
        doc = json.loads(p.read_text())
        validate_report(doc)
        assert doc["pass"] == (doc["measured_lhs"] <= doc["analytic_rhs"] * (1 + doc["epsilon"]) + doc["abs_floor"])
    assert list(out.glob("*.csv"))


def test_full_suite_layout(tmp_path):
    doc = {"experiment": "full_suite", "seed": 5, **SMALL, "plots": False,
           "experiments": [{"experiment": k, **v} for k, v in sorted(EXPERIMENTS.items())]}
    out = tmp_path / "suite"
    assert main(["run", write_config(tmp_path, doc), "--out", str(out), "--quiet"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert [e["name"] for e in summary["experiments"]] == [f"{i:02d}_{k}" for i, k in enumerate(sorted(EXPERIMENTS))]
    assert (out / "00_contraction_profile" / "summary.json").exists()
    assert not list(out.rglob("*.svg"))


def test_determinism_across_thread_counts(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, {"experiment": "theorem1_sweep", "seed": 9, **SMALL, **EXPERIMENTS["theorem1_sweep"]})
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("ORBITPOOL_THREADS", threads)
        out = tmp_path / f"t{threads}"
        assert main(["run", cfg, "--out", str(out), "--quiet"]) == 0
        outs.append(tree(out))
    assert outs[0] == outs[1]


def test_seed_override_changes_outputs(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "theorem1_sweep", **SMALL, **EXPERIMENTS["theorem1_sweep"]})
    assert main(["run", cfg, "--out", str(tmp_path / "a"), "--seed", "1", "--quiet"]) == 0
    assert main(["run", cfg, "--out", str(tmp_path / "b"), "--seed", "2", "--quiet"]) == 0
    a = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert a["config"]["seed"] == 1
    assert tree(tmp_path / "a") != tree(tmp_path / "b")


def test_small_grid_is_degenerate(capsys):
    assert main(["run", str(CONFIGS / "invalid_small_grid.json"), "--out", os.devnull + "_x", "--quiet"]) == 1
    assert "degenerate input" in capsys.readouterr().err
    assert main(["validate", str(CONFIGS / "invalid_small_grid.json")]) == 1


@pytest.mark.parametrize(
    "doc, needle",
    [
        ({"experiment": "curvature_se2", "bogus": 1}, "bogus"),
        ({"experiment": "theorem1_sweep", "grid": {"n": "big"}}, "grid.n"),
        ({"experiment": "nope"}, "experiment"),
        ({"experiment": "theorem2_check", "monte_carlo": {"sample_count": 10}}, "monte_carlo.sample_count"),
        ({"experiment": "curvature_se2", "group": "translations"}, "group"),
    ],
)
def test_invalid_config_names_field(tmp_path, capsys, doc, needle):
    assert main(["validate", write_config(tmp_path, doc)]) == 1
    assert needle in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "experiment": "curvature_se2",\n  oops\n}')
    assert main(["validate", str(p)]) == 1
    assert "line 3" in capsys.readouterr().err


def test_shipped_configs_validate():
    for p in sorted(CONFIGS.glob("*.json")):
        expected = 1 if p.name.startswith("invalid") else 0
        assert main(["validate", str(p)]) == expected, p.name


def test_violation_exit_code(tmp_path, capsys):
    # an unattainable invariance tolerance on a full-circle pooling region must be reported
    doc = {"experiment": "signature_invariance", **SMALL,
           "signatures": {"templates": 2, "rotations": 1, "tolerance": 1e-12}}
    out = tmp_path / "out"
    assert main(["run", write_config(tmp_path, doc), "--out", str(out), "--quiet"]) == 2
    err = capsys.readouterr().err
    assert "bound violated" in err and "transform_000.json" in err
    rep = json.loads((out / "reports" / "transform_000.json").read_text())
    assert rep["pass"] is False


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "orbitpool.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("orbitpool ")
