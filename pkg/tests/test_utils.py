"""
Tests for utility modules.
"""

import json

import numpy as np
import pytest
from pydantic import ValidationError

from app.utils.config_loader import ConfigLoader, apply_overrides, parse_override
from app.utils.exceptions import (
    ConfigurationException,
    HriException,
    ModelParseException,
    ScenarioAbortedException,
    SingularContactException,
    TaskRankException,
    ValidationException,
)
from app.utils.formatting import format_duration, format_json, write_atomic
from app.utils.logging import add_numpy_conversion, to_loggable
from app.utils.settings import Settings, get_settings


def test_settings_load():
    """Test settings loading."""
    settings = get_settings()
    assert settings.env in ["development", "staging", "production"]
    assert settings.gamma_condition_limit == 1e10
    assert settings.max_topology_joints == 12


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("HRI_LOG_LEVEL", "debug")
    monkeypatch.setenv("HRI_FD_STEP", "1e-7")
    settings = get_settings()
    assert settings.log_level == "DEBUG"
    assert settings.fd_step == 1e-7


@pytest.mark.parametrize("field, value", [("log_level", "LOUD"), ("log_format", "xml"), ("fd_step", 0.0)])
def test_settings_validation(field, value):
    with pytest.raises(ValidationError):
        Settings(**{field: value})


class TestExceptions:
    def test_details_and_message(self):
        exc = HriException("Test error", details={"key": "value"})
        assert str(exc) == "Test error"
        assert exc.details == {"key": "value"}

    @pytest.mark.parametrize(
        "cls, code",
        [
            (ConfigurationException, 1),
            (ModelParseException, 1),
            (SingularContactException, 2),
            (TaskRankException, 2),
            (ScenarioAbortedException, 2),
        ],
    )
    def test_exit_codes(self, cls, code):
        assert cls("boom").exit_code == code

    def test_families(self):
        assert issubclass(ModelParseException, ValidationException)
        assert not issubclass(SingularContactException, ValidationException)

    def test_aborted_run_carries_partial_results(self):
        exc = ScenarioAbortedException("stopped", records=[1, 2], summary={"steps": 2})
        assert exc.records == [1, 2]
        assert exc.summary["steps"] == 2


class TestFormatting:
    def test_format_json_converts_numpy(self):
        text = format_json({"array": np.arange(3.0), "scalar": np.float64(0.5), "n": np.int64(4)})
        assert json.loads(text) == {"array": [0.0, 1.0, 2.0], "scalar": 0.5, "n": 4}

    def test_format_duration(self):
        assert format_duration(30) == "30.00s"
        assert format_duration(90) == "1m 30s"
        assert format_duration(3665) == "1h 1m"

    def test_write_atomic_leaves_only_the_target(self, tmp_path):
        target = tmp_path / "nested" / "out.txt"
        write_atomic(target, "first")
        write_atomic(target, "second")
        assert target.read_text() == "second"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


class TestLogging:
    def test_to_loggable_nested(self):
        value = {"a": (np.zeros(2), [np.bool_(True)]), "b": "text"}
        assert to_loggable(value) == {"a": [[0.0, 0.0], [True]], "b": "text"}

    def test_processor_converts_event_values(self):
        event = add_numpy_conversion(None, "info", {"event": "step", "residual": np.float64(1e-9)})
        assert type(event["residual"]) is float


class TestConfigLoader:
    def test_parse_override_decodes_json(self):
        assert parse_override("gains.kp=50") == ("gains.kp", 50)
        assert parse_override("name=desk") == ("name", "desk")
        assert parse_override('stages.S1.contacts.robot=["seat"]') == ("stages.S1.contacts.robot", ["seat"])

    def test_parse_override_needs_key(self):
        with pytest.raises(ConfigurationException):
            parse_override("kp")
        with pytest.raises(ConfigurationException):
            parse_override("=5")

    def test_apply_overrides_leaves_input_untouched(self):
        original = {"gains": {"kp": 100}, "dt": 0.001}
        merged, applied = apply_overrides(original, ["gains.kp=50", "stabilization.zeta=0.5"])
        assert merged == {"gains": {"kp": 50}, "dt": 0.001, "stabilization": {"zeta": 0.5}}
        assert original == {"gains": {"kp": 100}, "dt": 0.001}
        assert applied == {"gains.kp": 50, "stabilization.zeta": 0.5}

    def test_override_list_entry(self):
        merged, _ = apply_overrides({"mutual": ["palm", "grasp"]}, ["mutual.1=hand"])
        assert merged["mutual"] == ["palm", "hand"]

    def test_bad_list_index(self):
        with pytest.raises(ConfigurationException):
            apply_overrides({"mutual": ["palm"]}, ["mutual.5=hand"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationException):
            ConfigLoader(tmp_path).load_json("absent.json")
        assert ConfigLoader(tmp_path).load_json("absent.json", required=False) == {}

    def test_invalid_json_reports_line(self, tmp_path):
        (tmp_path / "broken.json").write_text('{\n  "a": 1,\n  oops\n}')
        with pytest.raises(ConfigurationException) as exc:
            ConfigLoader(tmp_path).load_json("broken.json")
        assert exc.value.details["line"] == 3

    def test_top_level_must_be_object(self, tmp_path):
        (tmp_path / "list.json").write_text("[1, 2]")
        with pytest.raises(ConfigurationException):
            ConfigLoader(tmp_path).load_json("list.json")

    def test_cached_copies_are_independent(self, tmp_path):
        (tmp_path / "c.json").write_text('{"a": {"b": 1}}')
        loader = ConfigLoader(tmp_path)
        first = loader.load_json("c.json")
        first["a"]["b"] = 2
        assert loader.load_json("c.json") == {"a": {"b": 1}}
