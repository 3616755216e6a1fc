import json

import pytest
from pytest import raises

from qandysig import __version__
from qandysig.harness.cli import build_parser, main


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_version(capsys):
    with raises(SystemExit):
        main(["--version"])
    assert __version__ in capsys.readouterr().out


def test_a_command_is_required():
    with raises(SystemExit):
        build_parser().parse_args([])


def test_optimize(capsys):
    assert main(["optimize", "--p-e", "0", "--p-f", "0.125"]) == 0
    doc = _json(capsys)
    assert doc["s_a"] == pytest.approx(1 / 24)
    assert doc["s_v"] == pytest.approx(1 / 12)
    assert doc["version"] == __version__
    assert {"seed", "config_hash", "rng"} <= set(doc)


def test_optimize_rejects_an_empty_gap(caplog):
    assert main(["optimize", "--p-e", "0.2", "--p-f", "0.1"]) == 2
    assert "p_e" in caplog.text or "p_f" in caplog.text


def test_run_writes_one_line_per_trial(capsys):
    argv = ["run", "--protocol", "otps", "--s-v", "0.1", "--n", "16", "--trials", "3"]
    assert main(argv + ["--seed", "9"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    records = [json.loads(line) for line in lines]
    assert [r["trial"] for r in records] == [0, 1, 2]
    assert all(r["outcome"] == "honest_acc" and r["base_seed"] == 9 for r in records)


def test_run_with_a_config_file(tmp_path, capsys):
    config = tmp_path / "plan.json"
    config.write_text(json.dumps({"protocol": "otps", "s-v": 0.1, "n": 16, "trials": 5}))
    summary = tmp_path / "summary.csv"
    assert main(["run", "--config", str(config), "--trials", "2", "--summary", str(summary)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2
    assert summary.read_text().startswith("# ")


def test_invalid_plan_exits_with_two(caplog):
    assert main(["run", "--protocol", "p1", "--n", "16", "--trials", "1"]) == 2
    assert caplog.records and caplog.records[-1].levelname == "ERROR"


def test_sweep_then_fit(tmp_path, capsys):
    summary = tmp_path / "sweep.csv"
    records = tmp_path / "records.jsonl"
    argv = ["sweep", "--protocol", "otps", "--s-v", "0.1", "--n", "8,16,32", "--trials", "20"]
    assert main(argv + ["--out", str(summary), "--records", str(records)]) == 0
    assert len(records.read_text().splitlines()) == 60

    assert main(["fit", "--in", str(summary), "--event", "honest_acc"]) == 0
    doc = _json(capsys)
    assert doc["event"] == "honest_acc"
    assert not doc["decays"]
    assert doc["source"]["seed"] == 0
    assert len(doc["points"]) == 3


def test_fit_with_thresholds_reports_the_gap(tmp_path, capsys):
    summary = tmp_path / "sweep.csv"
    argv = ["sweep", "--protocol", "otps", "--s-v", "0.1", "--n", "8,16,32", "--trials", "10"]
    assert main(argv + ["--out", str(summary)]) == 0
    thresholds = ["--p-e", "0", "--s-a", "0.05", "--s-v", "0.1", "--p-f", "0.125"]
    assert main(["fit", "--in", str(summary), "--event", "honest_acc"] + thresholds) == 0
    assert _json(capsys)["gap"] == pytest.approx(0.05)


def test_qkd_session(capsys):
    assert main(["qkd", "--n-sent", "2000", "--seed", "3"]) == 0
    doc = _json(capsys)
    assert not doc["aborted"]
    assert doc["qber"] == 0.0
    assert doc["final_length"] > 0
    assert doc["seed"] == 3


def test_qkd_session_aborts_on_a_noisy_channel(capsys):
    assert main(["qkd", "--n-sent", "2000", "--p-channel", "0.3"]) == 0
    doc = _json(capsys)
    assert doc["aborted"]
    assert doc["qber"] > 0.11
