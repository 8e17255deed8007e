import csv
import io
import json

import pytest

from semidata.cli import main
from semidata.sim.output import COLUMNS

SMALL = ["--trials", "2", "--t-u", "8", "--tree-depth", "2", "--ebn0", "0"]


def test_sweep_snr_csv(capsys):
    assert main(["sweep-snr", *SMALL, "--estimators", "pilot_ce,semi_pro_low"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert tuple(rows[0]) == COLUMNS
    assert [r[0] for r in rows[1:]] == ["pilot_ce", "semi_pro_low"]


def test_sweep_pilot_json(tmp_path):
    out = tmp_path / "pilot.json"
    argv = ["sweep-pilot", *SMALL, "--estimators", "pilot_ce", "--values", "2,4", "--format", "json", "--out", str(out)]
    assert main(argv) == 0
    data = json.loads(out.read_text())
    assert [d["t_p"] for d in data] == [2, 4]
    assert data[0]["nmse_mean"] > data[1]["nmse_mean"] * 0.5


@pytest.mark.parametrize(
    "cmd,key,values",
    [("sweep-tu", "t_u", "8"), ("sweep-depth", "tree_depth", "1"), ("sweep-doppler", "epsilon", "0.01")],
)
def test_other_sweeps(cmd, key, values, capsys):
    assert main([cmd, *SMALL, "--estimators", "pilot_ce", "--values", values]) == 0
    assert capsys.readouterr().out.splitlines()[0].split(",")[0] == key


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("trials = 1\nt_u = 6\nestimators = pilot_ce\nebn0_db = 4\n")
    assert main(["sweep-snr", "--config", str(cfg), "--ebn0", "-2"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[1][1] == "-2" and rows[1][-1] == "1"


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 3\n")
    assert main(["sweep-snr", "--config", str(cfg)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_single_frame_trace(capsys):
    assert main(["single-frame", "--t-u", "10", "--tree-depth", "3", "--ebn0", "0", "--trace", "--policy", "optimal"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [int(r["slot"]) for r in rows] == list(range(1, 11))
    assert set(r["gram_recomputed"] for r in rows) <= {"0", "1"}
    assert all(r["action"] in ("0", "1") for r in rows)


def test_single_frame_summary(capsys):
    assert main(["single-frame", "--t-u", "10", "--tree-depth", "2"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["t_u"] == 10 and 0 <= summary["selected"] <= 10


def test_selftest_exit_code(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out


def test_selftest_failure_reported(monkeypatch, capsys):
    from semidata.sim import selftest

    monkeypatch.setitem(selftest.CHECKS, "broken", lambda: (False, "forced"))
    assert main(["selftest"]) == 1
    assert "FAIL" in capsys.readouterr().out
