import json
import math
import subprocess
import sys

import pytest

from capdisc.cli import run

PHI = (1 + math.sqrt(5)) / 2


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_csv(capsys):
    code, out, _ = call(capsys, "generate", "--matrix", 1, 0, 0, 1, "--k", 50, "--perturbation", "center",
                        "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "px,py,ix,iy"
    assert len(lines) == 2501


def test_generate_json_modified(capsys):
    code, out, _ = call(capsys, "generate", "--matrix", PHI, -1, 1, PHI, "--k", 50, "--modified",
                        "--format", "json")
    body = json.loads(out)
    assert code == 0 and body["N"] == 691 and body["modified"]


def test_discrepancy_exact(capsys):
    code, out, _ = call(capsys, "discrepancy", "--mode", "exact", "--k", 8, "--matrix", 1, 0, 0, 1,
                        "--perturbation", "center")
    body = json.loads(out)
    assert code == 0
    assert body["schema"] == "capdisc/1"
    assert 0.25 <= math.sqrt(64) * body["report"]["value"] <= 4.2427
    assert body["bounds"]["clq_source"] == "analytic-3"


def test_bounds(capsys):
    code, out, _ = call(capsys, "bounds", "--matrix", 1.618034, -1, 1, 1.618034, "--k", 50)
    body = json.loads(out)
    assert code == 0
    assert body["report"]["det"] == pytest.approx(3.618, abs=1e-3)
    assert body["report"]["theorem_leading"] > 0 and body["report"]["corollary_leading"] > 0
    assert body["theorem_leading_without_d"] <= body["report"]["theorem_leading"]


def test_estimate_is_default_above_limit(capsys):
    code, out, err = call(capsys, "discrepancy", "--k", 5, "--limit", 10, "--trials", 300, "--seed", 1)
    assert code == 0
    assert "limit 10" in err
    assert json.loads(out)["report"]["method"] == "estimate"


@pytest.mark.parametrize("argv", [
    ["discrepancy", "--mode", "exact", "--trials", "10", "--k", "3"],
    ["generate", "--k", "3", "--perturbation", "wobble"],
    ["generate", "--k", "3", "--perturbation", "random"],
    ["generate", "--perturbation", "center"],
    ["generate", "--k", "3", "--bogus"],
    ["bounds", "--k", "3", "--format", "csv"],
    ["discrepancy", "--k", "30", "--mode", "exact", "--limit", "100"],
    ["intersect", "--k", "3", "--curve", "polyline"],
    [],
])
def test_invalid_config_exits_2(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 2
    assert err


def test_singular_matrix_exits_3(capsys):
    code, out, err = call(capsys, "bounds", "--matrix", 1, 2, 2, 4, "--k", 5)
    assert code == 3
    assert "singular" in err and out == ""


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "generate", "matrix": [1, 0, 0, 1], "K": 4, "format": "json"}))
    code, out, _ = call(capsys, "--config", cfg)
    assert code == 0 and json.loads(out)["N"] == 16
    code, out, _ = call(capsys, "generate", "--config", cfg, "--k", 5)
    assert json.loads(out)["N"] == 25
    cfg.write_text(json.dumps({"command": "generate", "colour": "red"}))
    assert call(capsys, "--config", cfg)[0] == 2


def test_deterministic_output(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["discrepancy", "--k", 12, "--perturbation", "random", "--seed", 4, "--mode", "estimate",
            "--trials", 2000]
    assert call(capsys, *args, "--output", a)[0] == 0
    assert call(capsys, *args, "--output", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json", "b.json"]


@pytest.mark.parametrize("sphere", [False, True])
def test_generate_roundtrip_through_discrepancy(tmp_path, capsys, sphere):
    pts = tmp_path / "pts.csv"
    gen = ["generate", "--matrix", 1.2, 0.3, -0.2, 0.9, "--k", 6, "--perturbation", "random", "--seed", 2,
           "--output", pts] + (["--sphere"] if sphere else [])
    assert call(capsys, *gen)[0] == 0
    _, direct, _ = call(capsys, "discrepancy", "--matrix", 1.2, 0.3, -0.2, 0.9, "--k", 6,
                        "--perturbation", "random", "--seed", 2, "--mode", "exact")
    _, reread, _ = call(capsys, "discrepancy", "--input", pts, "--mode", "exact")
    d, r = json.loads(direct)["report"], json.loads(reread)["report"]
    assert d["N"] == r["N"]
    assert d["value"] == r["value"]


def test_intersect_segment(capsys):
    code, out, _ = call(capsys, "intersect", "--k", 5, "--from", 0.05, 0, "--to", 1.05, 1)
    body = json.loads(out)
    assert code == 0 and body["count"] == 11 and body["holds"]


def test_intersect_circle_spiral_cap(capsys):
    for extra in (["--curve", "circle"], ["--curve", "spiral", "--half-turns", 4],
                  ["--curve", "cap", "--cap", 0.2, 0.1, 0.9, 0.3]):
        code, out, _ = call(capsys, "intersect", "--k", 20, "--matrix", 1, 0.3, 0, 1, *extra)
        assert code == 0 and json.loads(out)["holds"]


def test_clq_export_and_intersect_polyline(tmp_path, capsys):
    pre = tmp_path / "pre.csv"
    assert call(capsys, "clq", "--cap", 0.3, 0, 0.95, 0.2, "--format", "csv", "--output", pre)[0] == 0
    assert pre.read_text().startswith("component,px,py\n")
    code, out, _ = call(capsys, "intersect", "--k", 30, "--curve", "polyline", "--input", pre, "--n", 7)
    body = json.loads(out)
    assert code == 0 and body["holds"] and body["count"] > 0


def test_clq_estimate(capsys):
    code, out, _ = call(capsys, "clq", "--centers", 8, "--heights", 8, "--samples", 32)
    body = json.loads(out)
    assert code == 0 and 2.0 <= body["estimate"] <= 3.0 + 1e-6
    assert body["certified_upper"] == 3.0


def test_separation(capsys):
    code, out, _ = call(capsys, "separation", "--k", 20)
    body = json.loads(out)
    assert code == 0 and body["N"] == 400 and 4 <= body["scaled"] <= 13


def test_paper_suite_small(capsys, tmp_path):
    code, out, _ = call(capsys, "paper-suite", "--ks", 4, 6, "--trials", 300)
    assert code == 0
    assert "sqrtN*D" in out and "golden-modified" in out
    code, out, _ = call(capsys, "paper-suite", "--ks", 4, "--trials", 300, "--format", "json")
    rows = json.loads(out)["rows"]
    assert [r["N"] for r in rows] == [16, 691]
    assert rows[0]["method"] == "exact" and rows[1]["method"] == "estimate"
    assert rows[0]["certificate"] >= 0.25 - 1e-6
    assert rows[0]["theorem"] == pytest.approx(math.sqrt(18))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "capdisc", "bounds", "--k", "4"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["report"]["N"] == 16
