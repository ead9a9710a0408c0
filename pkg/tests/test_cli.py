"""
Tests for the command-line front end: exit codes and output files.
"""

import json

import pytest

from app.cli import build_parser, main
from tests.conftest import CATALOG_PATH, MODELS_DIR, OBJECT_PATH, SCENARIO_PATH


@pytest.mark.unit
class TestParser:
    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["simulate", str(SCENARIO_PATH), "--out", "runs", "--override", "dt=0.002"])
        assert args.command == "simulate"
        assert args.override == ["dt=0.002"]

    def test_unknown_mode_is_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["compare", str(SCENARIO_PATH), "--out", "runs", "--mode", "pid"])


@pytest.mark.integration
class TestValidate:
    def test_valid_model(self, capsys):
        assert main(["validate", str(MODELS_DIR / "three_link_chain.json")]) == 0
        out = capsys.readouterr().out
        assert "three_link_chain" in out
        assert "3" in out

    def test_quiet_prints_nothing(self, capsys):
        assert main(["validate", str(MODELS_DIR / "desk_robot.json"), "--quiet"]) == 0
        assert capsys.readouterr().out == ""

    def test_malformed_model(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"name": "bad", "links": [')
        assert main(["validate", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_model(self, tmp_path):
        assert main(["validate", str(tmp_path / "absent.json")]) == 1


@pytest.mark.integration
class TestSimulate:
    def test_writes_log_and_summary(self, tmp_path):
        out = tmp_path / "run"
        code = main(["simulate", str(SCENARIO_PATH), "--out", str(out), "--override", "duration=0.01", "--quiet"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["steps"] == 10
        assert summary["overrides"] == {"duration": 0.01}
        assert summary["aborted"] is None
        assert len((out / "log.csv").read_text().splitlines()) == 11

    def test_identical_runs_give_identical_bytes(self, tmp_path):
        for name in ("a", "b"):
            main(["simulate", str(SCENARIO_PATH), "--out", str(tmp_path / name), "--override", "duration=0.01", "--quiet"])
        for filename in ("log.csv", "summary.json"):
            assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()

    def test_invalid_override(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["simulate", str(SCENARIO_PATH), "--out", str(out), "--override", "dt=-1", "--quiet"]) == 1
        assert "dt" in capsys.readouterr().err
        assert not out.exists()

    def test_solver_failure_keeps_partial_output(self, tmp_path):
        out = tmp_path / "run"
        # the seat frame sits on the hip link: two welds on one body
        code = main([
            "simulate", str(SCENARIO_PATH), "--out", str(out), "--quiet",
            "--override", 'stages.S1.contacts.robot=["seat","hip_pitch"]',
            "--override", "duration=0.01",
        ])
        assert code == 2
        summary = json.loads((out / "summary.json").read_text())
        assert summary["aborted"]
        assert summary["steps"] == 0
        assert (out / "log.csv").read_text().startswith("t,state,switched")


@pytest.mark.integration
class TestTopologyCommands:
    def test_synthesize_then_identify(self, tmp_path):
        data = tmp_path / "data"
        code = main([
            "synthesize", str(OBJECT_PATH), str(CATALOG_PATH),
            "--assignment", "0,1,0",
            "--frame", "left_handle", "--frame", "right_handle",
            "--duration", "0.4", "--seed", "3",
            "--out", str(data),
        ])
        assert code == 0
        assert (data / "observations.columns.json").exists()

        out = tmp_path / "topology"
        code = main([
            "identify", str(OBJECT_PATH), str(CATALOG_PATH), str(data / "observations.csv"),
            "--out", str(out), "--quiet",
        ])
        assert code == 0
        ranking = json.loads((out / "ranking.json").read_text())
        assert ranking["ranking"][0]["assignment"] == [0, 1, 0]
        assert ranking["ambiguous"] is False

    def test_bad_assignment(self, tmp_path):
        code = main([
            "synthesize", str(OBJECT_PATH), str(CATALOG_PATH),
            "--assignment", "0,x,0", "--frame", "left_handle", "--out", str(tmp_path),
        ])
        assert code == 1

    def test_missing_observations(self, tmp_path):
        code = main([
            "identify", str(OBJECT_PATH), str(CATALOG_PATH), str(tmp_path / "none.csv"),
            "--out", str(tmp_path / "out"), "--quiet",
        ])
        assert code == 1
