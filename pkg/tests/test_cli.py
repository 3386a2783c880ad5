import csv
import io
import json

import pytest

from ergodic_towers.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def records(text):
    block = text.split("section,key,value,decimal\n", 1)[1]
    return {(r[0], r[1]): r[2:] for r in csv.reader(io.StringIO(block))}


def test_kakutani_report(capsys):
    code, out = run(capsys, "kakutani", "--system", "rotation:alpha=golden", "--base", "0,golden")
    assert code == 0
    rec = records(out)
    assert rec[("value", "kac_sum")] == ["1/1+0/1*sqrt(5)", "1.000000000000"]
    assert rec[("value", "columns")][0] == "2"
    assert rec[("audit", "partition")] == ["true", ""]
    assert out.splitlines()[0].startswith("N,base_measure,base_measure_decimal")


def test_counterexample_chain(capsys):
    code, out = run(capsys, "counterexample", "--imax", "10", "--horizon", "512")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.split("\n\n")[0])))
    assert rows[0]["chain_ok"] == "true" and rows[0]["H"] == "512"
    assert float(rows[0]["lhs_decimal"]) > 2


def test_malformed_rational_is_config_error(capsys):
    code, out = run(capsys, "intrinsic", "--eps", "0.1.1")
    assert code == 2
    doc = json.loads(out)
    assert doc["status"] == "config_error" and "0.1.1" in doc["reason"]


@pytest.mark.parametrize("argv", [
    ["kakutani", "--system", "torus:x=1"],
    ["kakutani", "--base", "1/2"],
    ["intrinsic", "--ks", "1,2,4"],
    ["intrinsic", "--ks", "1,16,20"],
    ["counterexample", "--imax", "10", "--bound", "1/1000000"],
    ["estimate", "--system", "rotation:alpha=golden"],
    ["rokhlin", "--eps", "2"],
])
def test_config_errors(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 2
    assert "config_error" in out


def test_intrinsic_json(capsys, tmp_path):
    dump = tmp_path / "tower.json"
    code, out = run(capsys, "intrinsic", "--ks", "1,16", "--stages", "2", "--dump-tower", str(dump))
    assert code == 0
    doc = json.loads(out)
    assert doc["audits"]["P1_partition"] is True
    assert doc["values"]["fatness_partial"]["decimal"] == "1.000000000000"
    assert [c["height"] for c in json.loads(dump.read_text())["columns"]] == [1, 16]


def test_estimate_csv_contract(capsys, tmp_path):
    out_file = tmp_path / "est.csv"
    code, _ = run(capsys, "estimate", "--horizons", "16,32", "--samples", "200", "--seed", "7",
                  "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().splitlines()
    assert lines[0] == "H,samples,mean,stderr,seed"
    assert len(lines) == 3 and lines[1].startswith("16,200,") and lines[1].endswith(",7")


def test_inflate_and_rokhlin(capsys):
    code, out = run(capsys, "inflate", "--imax", "10", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and all(doc["audits"].values())
    assert doc["values"]["total_mu"]["exact"] == "1/1+0/1*sqrt(5)"
    code, out = run(capsys, "rokhlin", "--height", "7", "--eps", "1/10")
    assert code == 0 and records(out)[("audit", "error_below_eps")][0] == "true"


def test_figures(capsys, tmp_path):
    png = tmp_path / "c.png"
    code, _ = run(capsys, "counterexample", "--horizons", "16,32", "--figure", str(png))
    assert code == 0 and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    png2 = tmp_path / "e.png"
    code, _ = run(capsys, "estimate", "--horizons", "16,32", "--samples", "100", "--exact",
                  "--figure", str(png2))
    assert code == 0 and png2.stat().st_size > 0


def test_audit_failure_exit_code(capsys, monkeypatch):
    import ergodic_towers.cli as cli

    def broken(sys_, t):
        return False

    monkeypatch.setattr(cli, "tower_check", broken)
    code, out = run(capsys, "kakutani")
    assert code == 1
    assert records(out)[("status", "status")][0] == "audit_failure"


def test_piece_cap_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("ERGODIC_TOWERS_PIECE_CAP", "3")
    code, out = run(capsys, "rokhlin", "--height", "40", "--eps", "1/100")
    assert code == 1
    assert "PieceCapExceeded" in out


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "ergodic_towers", "kakutani"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "kac_identity,true" in res.stdout
