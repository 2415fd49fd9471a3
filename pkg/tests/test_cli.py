from __future__ import annotations

import json
import subprocess
import sys

import pytest

from qtrans.cli import run


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 and out else None), err


def test_qtcheck_four_lines(capsys):
    code, out, _ = _run(capsys, "qtcheck", "catalog:4lines", "--fiber", "0")
    assert code == 0
    assert out["fiber_dimension"] == 4 and out["source_dimension"] == 3
    assert out["verdict"] == "not_quasi_transitive_at_fiber"


def test_qtcheck_cubic_and_identity(capsys, tmp_path):
    code, out, _ = _run(capsys, "qtcheck", "catalog:cubic", "--fiber", "0")
    assert (out["fiber_dimension"], out["verdict"]) == (3, "quasi_transitive_at_fiber")
    f = tmp_path / "id.json"
    f.write_text(json.dumps({"source_vars": ["a", "b"], "components": ["a", "b"]}))
    code, out, _ = _run(capsys, "qtcheck", str(f), "--fiber", "0,0")
    assert out["fiber_dimension"] == 2 and out["verdict"] == "quasi_transitive_at_fiber"
    code, out, _ = _run(capsys, "qtcheck", "catalog:cubic", "--generic")
    assert out["generic_fiber_dimension"] == 3


def test_kernel_and_bphi(capsys, tmp_path):
    code, out, _ = _run(capsys, "kernel", "catalog:psi4")
    assert len(out["vector_fields"]) == 3
    code, out, _ = _run(capsys, "kernel", "catalog:blowchart")
    assert out["vector_fields"] == []
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"source_vars": ["x"], "components": ["5"]}))
    code, out, _ = _run(capsys, "kernel", str(f))
    assert out["vector_fields"] == [["1"]]
    code, out, _ = _run(capsys, "bphi", str(f))
    assert out == {"generators": ["xi1"], "vars": ["x", "xi1"]}


def test_stratify_commands(capsys, tmp_path):
    code, out, _ = _run(capsys, "stratify", "catalog:xy", "--audit-fiber", "0")
    assert code == 0
    assert len(out["stratification"]["source"]["poset"]["elements"]) == 3
    assert out["audit"]["strongThom"] is True
    assert out["validation"]["valid"]
    f = tmp_path / "sq.json"
    f.write_text(json.dumps({"vars": ["x"], "polynomial": "x^2"}))
    code, out, _ = _run(capsys, "stratify", str(f))
    assert len(out["stratification"]["source"]["poset"]["elements"]) == 2
    assert len(out["stratification"]["target"]["poset"]["elements"]) == 2
    f.write_text(json.dumps({"vars": ["x"], "polynomial": "x"}))
    code, out, _ = _run(capsys, "stratify", str(f))
    assert len(out["stratification"]["source"]["poset"]["elements"]) == 1


def test_measure_commands(capsys):
    code, out, _ = _run(capsys, "push", "catalog:unit_ball_p2k1", "--map", "catalog:blowchart")
    assert out["values"] == {"0,0": "1/2", "1,0": "1/4", "1,1": "1/4"}
    code, out, _ = _run(capsys, "fourier", "catalog:mu1_p2k3")
    assert len(out["values"]) == 64
    assert all("rational" in v for v in out["values"])
    assert out["values"][0]["rational"] == "1/4"
    code, out, _ = _run(capsys, "germrank", "catalog:germs_p2", "--restrict", "1")
    assert out["germ_rank"] == 3
    code, out, _ = _run(capsys, "supportgerms", "catalog:direction_balls_p3", "--restrict", "1")
    assert out["support_germs"] >= 3


def test_level_override(capsys):
    code, out, _ = _run(capsys, "push", "catalog:mu1_p2k3", "--level", "4")
    assert out["k"] == 4


def test_ideal_commands(capsys):
    code, out, _ = _run(capsys, "dim", "catalog:conic")
    assert out["dimension"] == 1
    code, out, _ = _run(capsys, "gb", "catalog:conic", "--order", "lex")
    assert out["basis"] == ["x^2 + y^2 - 1"]
    code, out, _ = _run(capsys, "conormal", "catalog:conic")
    assert "-2*y*xi1 + 2*x*xi2" in out["generators"]
    code, out, _ = _run(capsys, "oracle-dim", "catalog:conic", "--primes", "5,7")
    assert out["estimate"] == 1


def test_exit_codes(capsys, tmp_path):
    assert _run(capsys, "qtcheck", str(tmp_path / "missing.json"), "--fiber", "0")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"source_vars": ["x"], "components": ["x+*1"]}))
    assert _run(capsys, "qtcheck", str(bad), "--fiber", "0")[0] == 2
    assert _run(capsys, "qtcheck", "catalog:4lines", "--fiber", "0,1")[0] == 2
    assert _run(capsys, "qtcheck", "catalog:4lines")[0] == 2
    assert _run(capsys, "push", "catalog:mu1_p2k3", "--prime", "4")[0] == 2
    assert _run(capsys, "oracle-dim", "catalog:conic", "--primes", "101,103", "--oracle-budget", "10")[0] == 3
    with pytest.raises(SystemExit) as info:
        run(["push", "catalog:mu1_p2k3", "--level", "0"])
    assert info.value.code == 2


def test_output_file_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["bphi", "catalog:psi4", "--out", str(a), "--threads", "1"]) == 0
    assert run(["bphi", "catalog:psi4", "--out", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "qtrans.cli", "dim", "catalog:conic"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["dimension"] == 1
