import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from amencert.cli import ConfigError, main, parse_config


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_radii_and_defaults():
    cfg = parse_config(["sweep", "--group", "Z^1", "--radii", "1..4"])
    assert cfg.radii == [1, 2, 3, 4]
    assert cfg.space == "point" and cfg.pivot_rule == "hybrid"
    assert parse_config(["sweep", "--group", "Z^1", "--radii", "1,3,5"]).radii == [1, 3, 5]


def test_config_file_matches_flags(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# trend run\ngroup = Z^1\nradii = 1..4\n\nmode=exact  # inline\n")
    from_file = parse_config(["sweep", "--config", str(conf)])
    from_flags = parse_config(["sweep", "--group", "Z^1", "--radii", "1..4", "--mode", "exact"])
    assert from_file == from_flags
    # flags override file values
    assert parse_config(["sweep", "--config", str(conf), "--radii", "2..3"]).radii == [2, 3]


def test_config_errors(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("gruop = Z^1\n")
    with pytest.raises(ConfigError):
        parse_config(["folner", "--config", str(conf), "--n", "1"])
    with pytest.raises(ConfigError):
        parse_config(["folner", "--group", "Z^1", "--n", "2", "--tol", "1e-9"])
    with pytest.raises(ConfigError):
        parse_config(["folner", "--group", "Z^1"])
    parse_config(["folner", "--group", "Z^1", "--n", "2", "--mode", "float", "--tol", "1e-9"])


def test_usage_errors_exit_2(capsys, tmp_path):
    assert run(capsys, "folner", "--group", "Z^0", "--n", "2")[0] == 2
    assert run(capsys, "folner", "--group", "Z^1")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "folner", "--group", "F_2", "--space", "finite:a->(0 0 1)", "--n", "1")[0] == 2


def test_unreadable_certificate_fails_verification(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out, _ = run(capsys, "verify", bad, tmp_path / "missing.json")
    assert code == 1 and out.count("status=fail") == 2


def test_resource_guard_exit_3(capsys):
    code, _, err = run(capsys, "folner", "--group", "F_2", "--n", "6", "--size-guard", "100")
    assert code == 3 and "resource guard" in err
    assert run(capsys, "boundary", "--rank", "2", "--n", "5", "--depth-cap", "3")[0] == 3


def test_folner_and_verify(capsys, tmp_path):
    path = tmp_path / "z.json"
    code, out, _ = run(capsys, "folner", "--group", "Z^1", "--n", "3", "--out", path)
    assert code == 0 and "2/7" in out
    assert run(capsys, "verify", path)[0] == 0
    data = json.loads(path.read_text())
    data["defect"] = "1/7"
    path.write_text(json.dumps(data))
    code, _, err = run(capsys, "verify", path)
    assert code == 1 and err


def test_ponzi_against(capsys, tmp_path):
    f, p = tmp_path / "f.json", tmp_path / "p.json"
    assert run(capsys, "folner", "--group", "F_2", "--n", "2", "--out", f)[0] == 0
    code, out, _ = run(capsys, "ponzi", "--group", "F_2", "--n", "2", "--out", p)
    assert code == 0 and "17/18" in out
    report = tmp_path / "r.json"
    assert run(capsys, "verify", p, "--against", f, "--report", report)[0] == 0
    assert json.loads(report.read_text())


def test_sweep_csv(capsys, tmp_path):
    table = tmp_path / "t.csv"
    code, out, _ = run(capsys, "sweep", "--group", "Z^1", "--radii", "1..4", "--csv", table,
                       "--out-dir", tmp_path / "certs")
    assert code == 0
    rows = list(csv.DictReader(table.open()))
    assert list(rows[0]) == ["radius", "t_star", "m_star", "duality_gap", "seconds"]
    assert [Fraction(r["t_star"]) for r in rows] == [Fraction(2, 2 * n + 1) for n in (1, 2, 3, 4)]
    certs = sorted((tmp_path / "certs").glob("*.json"))
    assert len(certs) == 8
    assert run(capsys, "verify", *certs)[0] == 0


def test_boundary_tent_residual(capsys, tmp_path):
    b = tmp_path / "b.json"
    assert run(capsys, "boundary", "--rank", "2", "--n", "10", "--out", b)[0] == 0
    assert json.loads(b.read_text())["defect"] == "1/5"
    t = tmp_path / "t.json"
    assert run(capsys, "tent", "--group", "F_2", "--n", "4", "--out", t)[0] == 0
    assert run(capsys, "verify", b, t)[0] == 0
    code, out, _ = run(capsys, "residual", "--group", "Z^1", "--n", "2")
    assert code == 0 and "3/5" in out


def test_transfer(capsys, tmp_path):
    code, out, _ = run(capsys, "transfer", "--group", "F_2", "--space", "finite:a->(0 1 2 3 4 5);b->(0 1)(3 4)",
                       "--target", "finite:a->(0 1 2);b->(0 1)", "--map", "0,1,2,0,1,2", "--n", "1")
    assert code == 0 and out


def test_outputs_are_byte_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(capsys, "sweep", "--group", "F_2", "--radii", "1..2", "--out-dir", d, "--json", d / "r.json")[0] == 0
    names = sorted(p.name for p in a.glob("*.json"))
    assert names == sorted(p.name for p in b.glob("*.json"))
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "amencert.cli", "folner", "--group", "Z^1", "--n", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "2/3" in proc.stdout
