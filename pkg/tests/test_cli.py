import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from tacnode_rh.cli import GridSpec, UsageError, classify_convergence, fmt_float, main

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "report.schema.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_dg_kernel_grid(capsys):
    code, out, _ = run(capsys, "eval-kernel", "--kind", "dg", "--s", "0.1", "--tau", "0.3",
                       "--grid", "-1:1:9")
    assert code == 0
    assert out.splitlines()[0] == "x,y,re,im,form"
    rows = rows_of(out)
    assert len(rows) == 81
    assert max(abs(float(r["im"])) for r in rows) <= 1e-9
    assert "\r" not in out


def test_malformed_flag(capsys):
    code, _, err = run(capsys, "eval-kernel", "--frobnicate", "3")
    assert code == 2
    assert "usage:" in err
    assert run(capsys, "eval-kernel", "--grid", "1:2")[0] == 2
    assert run(capsys, "eval-kernel", "--threads", "0")[0] == 2
    assert run(capsys, "eval-kernel", "--kind", "M")[0] == 2
    assert run(capsys, "eval-m", "--r1", "-1")[0] == 2
    assert run(capsys)[0] == 2


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"params": {"r1": 1.3, "r2": 0.8, "tau": 0.9},
                               "grid": "-0.5:0.5:3", "kind": "tacnode",
                               "quadrature": {"panel_nodes": 25, "domain_len": 16.0}}))
    code, from_file, _ = run(capsys, "eval-kernel", "--config", str(cfg), "--tau", "0.25")
    assert code == 0
    code, direct, _ = run(capsys, "eval-kernel", "--kind", "tacnode", "--r1", "1.3", "--r2", "0.8",
                          "--tau", "0.25", "--grid", "-0.5:0.5:3")
    assert code == 0 and from_file == direct


def test_config_errors(tmp_path, capsys):
    assert run(capsys, "verify", "--config", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"colour": "blue"}')
    assert run(capsys, "verify", "--config", str(bad))[0] == 2
    bad.write_text('{"quadrature": {"panel_nodes": 1}}')
    assert run(capsys, "verify", "--config", str(bad))[0] == 2
    bad.write_text("[1, 2]")
    assert run(capsys, "verify", "--config", str(bad))[0] == 2


def test_eval_m(capsys):
    code, out, _ = run(capsys, "eval-m", "--kind", "M", "--grid", "-1:1:3",
                       "--r1", "1.3", "--r2", "0.8", "--s1", "0.4", "--s2", "-0.3", "--tau", "0.25")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 9 and len(rows[0]) == 3 + 32
    on = [r for r in rows if float(r["im_z"]) == 0]
    assert all(r["sector"] == "-1" and math.isnan(float(r["M11_re"])) for r in on)
    upper = next(r for r in rows if float(r["re_z"]) == 0 and float(r["im_z"]) == 1)
    assert upper["sector"] == "1"
    code, out, _ = run(capsys, "eval-m", "--kind", "m4", "--grid", "-1:1:2")
    assert code == 0
    assert out.splitlines()[0].split(",") == ["re_z", "im_z", "sector", "m1_re", "m1_im",
                                              "m2_re", "m2_im", "m3_re", "m3_im", "m4_re", "m4_im"]


def test_json_tables_validate(capsys):
    code, out, _ = run(capsys, "eval-m", "--kind", "M", "--grid", "-1:1:2", "--format", "json")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    assert len(data["rows"]) == 4


def test_output_file_stable_and_thread_independent(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["eval-kernel", "--kind", "tacnode", "--tau", "0.2", "--grid", "-1:1:4"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert run(capsys, *args, "--out", str(tmp_path / "no" / "dir.csv"))[0] == 2


def test_verify_subset(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "verify", "--kind", "jumps,determinant", "--out", str(out))
    assert code == 0
    assert "PASS jumps" in err
    data = json.loads(out.read_text())
    jsonschema.validate(data, SCHEMA)
    assert data["passed"] is True and len(data["reports"]) == 2
    assert run(capsys, "verify", "--kind", "jumps", "--tol", "0")[0] == 1
    assert run(capsys, "verify", "--kind", "bogus")[0] == 2
    code, text, _ = run(capsys, "verify", "--kind", "determinant", "--format", "csv")
    assert code == 0 and text.startswith("check_name,max_residual,tolerance,passed\n")


def test_convergence(capsys):
    code, out, err = run(capsys, "convergence", "--r1", "1.3", "--r2", "0.8", "--tau", "0.25")
    assert code == 0
    assert "spectral" in err
    rows = rows_of(out)
    assert {int(r["panel_nodes"]) for r in rows} >= {3, 6, 12, 24, 25}
    by_n = {int(r["panel_nodes"]): float(r["max_rel_change"]) for r in rows}
    assert by_n[25] <= 1e-9 and by_n[3] > by_n[6] > by_n[12]


def test_classify_convergence():
    assert classify_convergence([1e-2, 1e-2 / 16, 1e-2 / 256, 1e-2 / 4096]) == "algebraic"
    assert classify_convergence([3e-5, 4e-11, 1e-15, 5e-16]) == "spectral"
    assert classify_convergence([1e-3, 1e-5, 1e-8, 1e-12 / 2]) == "spectral"
    assert classify_convergence([1e-3]) == "undetermined"


def test_helpers():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("nan")) == "nan" and fmt_float(-math.inf) == "-inf"
    assert list(GridSpec.parse("-1:1:3").values()) == [-1.0, 0.0, 1.0]
    with pytest.raises(UsageError):
        GridSpec.parse("a:b:c")
    with pytest.raises(UsageError):
        GridSpec.parse("0:1:0")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tacnode_rh.cli", "eval-kernel", "--bad"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "usage:" in proc.stderr
