import csv
import io
import json
import subprocess
import sys

import pytest

from killing4d.cli import main


def _cfg(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


SPHERE = {"geometry": {"family": "sphere", "lambda": 1.0, "mu": 2.0}, "samples": 12, "seed": 1}


def test_verify_sphere_all_suites_passes(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["verify", "--config", _cfg(tmp_path, SPHERE), "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] is True and rep["failing_suites"] == []
    assert rep["n_samples"] == 12
    err = capsys.readouterr().err
    assert "PASS star-killing" in err and "FAIL" not in err


def test_verify_writes_stdout_by_default(tmp_path, capsys):
    assert main(["verify", "--config", _cfg(tmp_path, SPHERE), "--suite", "star-killing"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert list(rep["suites"]) == ["star-killing"]


def test_malformed_json_reports_position(tmp_path, capsys):
    path = _cfg(tmp_path, '{\n  "geometry": {"family": "sphere",,}\n}')
    assert main(["verify", "--config", path]) == 2
    assert "line 2, column" in capsys.readouterr().err


def test_schema_violation_names_field(tmp_path, capsys):
    bad = dict(SPHERE, samples=0)
    assert main(["verify", "--config", _cfg(tmp_path, bad)]) == 2
    assert "samples" in capsys.readouterr().err
    assert main(["verify", "--config", _cfg(tmp_path, {"geometry": {"family": "torus"}})]) == 2
    assert "geometry/family" in capsys.readouterr().err


def test_missing_file_and_bad_arguments(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["verify"]) == 2
    assert main(["verify", "--config", _cfg(tmp_path, SPHERE), "--suite", "nonsense"]) == 2


def test_broken_metric_fails_and_names_suite(tmp_path, capsys):
    cfg = {"geometry": {"family": "ambitoric", "A": [1.0, 0.2], "B": [1.0, -0.1]}, "samples": 10,
           "metric_perturbation": 0.01, "suites": ["star-killing"]}
    out = tmp_path / "r.json"
    assert main(["verify", "--config", _cfg(tmp_path, cfg), "-o", str(out)]) == 1
    assert "FAIL star-killing" in capsys.readouterr().err
    assert json.loads(out.read_text())["failing_suites"] == ["star-killing"]


def test_report_is_byte_stable(tmp_path):
    cfg = dict(SPHERE, suites=["star-killing", "kahler"])
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    path = _cfg(tmp_path, cfg)
    assert main(["verify", "--config", path, "-o", str(a)]) == 0
    assert main(["verify", "--config", path, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def _read_csv(path):
    raw = path.read_bytes()
    return raw, list(csv.reader(io.StringIO(raw.decode(), newline="")))


def test_dump_sphere_scal_is_12(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["dump", "--config", _cfg(tmp_path, SPHERE), "--fields", "Scal,b,star-killing",
                 "--grid", "20,20", "-o", str(out)]) == 0
    raw, rows = _read_csv(out)
    assert b"\r\n" in raw
    assert rows[0] == ["c0", "c1", "c2", "c3", "Scal", "b", "star-killing"]
    body = rows[1:]
    assert len(body) > 300
    for r in body:
        assert abs(float(r[4]) - 12.0) < 1e-8
        assert abs(float(r[5])) < 1e-8
        assert float(r[6]) < 1e-8


def test_dump_empty_field_list_is_header_only(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["dump", "--config", _cfg(tmp_path, SPHERE), "--fields", "", "-o", str(out)]) == 0
    assert out.read_bytes() == b"c0,c1,c2,c3\r\n"


def test_dump_unknown_field(tmp_path, capsys):
    assert main(["dump", "--config", _cfg(tmp_path, SPHERE), "--fields", "Scal,colour"]) == 2
    assert "colour" in capsys.readouterr().err
    assert main(["dump", "--config", _cfg(tmp_path, SPHERE), "--grid", "20x20"]) == 2


def test_schema_command(capsys):
    assert main(["schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert schema["properties"]["geometry"]["required"] == ["family"]


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "killing4d", "schema"], capture_output=True, text=True)
    assert r.returncode == 0 and '"geometry"' in r.stdout
