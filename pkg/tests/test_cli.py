import json
from importlib import resources

import pytest

from faultsig.cli import main
from faultsig.model import fixture_path

SCENARIOS = resources.files("faultsig") / "data" / "scenarios"


def test_analyze_example1(tmp_path, capsys):
    out = tmp_path / "e1.json"
    assert main(["analyze", str(fixture_path("example1.model")), "-o", str(out)]) == 0
    text = capsys.readouterr().out
    assert "| f | ASig1 | ASig2 | ASig3 |" in text
    assert "input-strongly algebraically diagnosable" in text
    assert out.exists()


def test_analyze_json_format(tmp_path, capsys):
    out = tmp_path / "wt.json"
    assert main(["analyze", str(fixture_path("watertank.model")), "-o", str(out), "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"]["verdict"] == "input-strong"
    assert len(payload["table"]["cells"]) == 8


def test_analyze_empty_signature(tmp_path, capsys):
    model = tmp_path / "blind.model"
    model.write_text("name: blind\nparameters: [p1]\nfaults: [f1]\n"
                     "summary:\n  - {slot: phi1, gamma: \"p1\"}\n")
    assert main(["analyze", str(model), "-o", str(tmp_path / "b.json")]) == 2
    assert "empty" in capsys.readouterr().err


def test_analyze_parse_error(tmp_path, capsys):
    model = tmp_path / "bad.model"
    model.write_text("name: bad\nparameters: [p1]\nfaults: [f1]\n"
                     "summary:\n  - {slot: phi1, gamma: \"p1 +* f1\"}\n")
    assert main(["analyze", str(model), "-o", str(tmp_path / "b.json")]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_run_clogging(watertank_bundle_file, tmp_path, capsys):
    report = tmp_path / "r.json"
    series = tmp_path / "s.csv"
    rc = main(["run", str(watertank_bundle_file), str(SCENARIOS / "t2_3_f3.yaml"),
               "--report", str(report), "--series-csv", str(series)])
    assert rc == 0
    assert "discrimination: {3}" in capsys.readouterr().out
    assert json.loads(report.read_text())["pattern"] == "{3}"
    assert series.read_text().startswith("t,u,y")


def test_run_fault_free(watertank_bundle_file, capsys):
    assert main(["run", str(watertank_bundle_file), str(SCENARIOS / "fault_free.yaml")]) == 0
    assert "no fault detected" in capsys.readouterr().out


def test_run_json_and_csv(watertank_bundle_file, capsys):
    args = ["run", str(watertank_bundle_file), str(SCENARIOS / "t2_2_f2.yaml"), "--noiseless"]
    assert main(args + ["--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["pattern"] == "{2}" and rep["config"]["noise_sigma"] == 0.0
    assert main(args + ["--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("t,x0,distance")


def test_run_undeclared_fault(watertank_bundle_file, tmp_path, capsys):
    sc = tmp_path / "bad.yaml"
    sc.write_text("faults: {f7: 0.5}\n")
    assert main(["run", str(watertank_bundle_file), str(sc)]) == 1
    assert "undeclared" in capsys.readouterr().err


def test_run_tampered_bundle(watertank_bundle_file, tmp_path, capsys):
    payload = json.loads(watertank_bundle_file.read_text())
    payload["verdict"]["verdict"] = "undecided"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(payload))
    assert main(["run", str(bad), str(SCENARIOS / "fault_free.yaml")]) == 1


def test_run_simulation_failure(watertank_bundle_file, tmp_path, capsys):
    sc = tmp_path / "flood.yaml"
    sc.write_text("t_end: 200\ncontroller: {constant_input: 10}\n")
    assert main(["run", str(watertank_bundle_file), str(sc)]) == 3
    assert "[simulate]" in capsys.readouterr().err


def test_run_ambiguity_exit_code(watertank_bundle_file, tmp_path, capsys):
    # data end right after detection: no unique pattern yet
    sc = tmp_path / "short.yaml"
    sc.write_text("faults: {f1: 0.5}\nt_end: 22\n")
    assert main(["run", str(watertank_bundle_file), str(sc)]) == 3


def test_bench_noiseless(watertank_bundle_file, capsys):
    assert main(["bench", str(watertank_bundle_file), "--noiseless", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 8
