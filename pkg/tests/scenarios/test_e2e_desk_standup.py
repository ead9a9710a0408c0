"""
End-to-end stand-up on the desk agents.

Scenario: a seated robot grasps the partner's hand, is pulled up onto its feet and
releases the grasp once standing. The run goes through every machine state and two
contact switches (seat to feet, then grasp release).
"""

import numpy as np
import pytest

from app.simulate.config import load_scenario
from app.simulate.recorder import records_to_frame
from app.simulate.scenario import ScenarioRunner
from tests.conftest import SCENARIO_PATH


@pytest.fixture(scope="module")
def nominal_run():
    config, base_dir, _ = load_scenario(SCENARIO_PATH)
    runner = ScenarioRunner.from_config(config, base_dir)
    return runner.run()


@pytest.mark.slow
@pytest.mark.e2e
class TestDeskStandup:
    """Full stand-up under the partner-aware law."""

    def test_completes_without_abort(self, nominal_run):
        summary = nominal_run.summary
        assert summary["aborted"] is None
        assert summary["reached_state"] == "Done"

    def test_visits_every_state_in_order(self, nominal_run):
        transitions = nominal_run.summary["transitions"]
        assert [(tr["from"], tr["to"]) for tr in transitions] == [
            ("S1", "S2"),
            ("S2", "S3"),
            ("S3", "S4"),
            ("S4", "Done"),
        ]
        times = [tr["t"] for tr in transitions]
        assert times == sorted(times)

    def test_transitions_fire_on_wrench_thresholds(self, nominal_run):
        summary = nominal_run.summary
        machine = summary["effective_config"]["machine"]
        thresholds = [machine["hand_wrench_threshold"], machine["feet_threshold_1"], machine["feet_threshold_2"]]
        transitions = summary["transitions"]
        for tr, threshold in zip(transitions[:3], thresholds):
            assert tr["reason"] == "threshold", tr
            assert tr["measure"] > threshold
        assert transitions[3]["reason"] == "completed"

    def test_two_contact_switches(self, nominal_run):
        assert nominal_run.summary["contact_switches"] == 2
        switched = [r for r in nominal_run.records if r.switched]
        assert [r.state.value for r in switched] == ["S3", "S4"]

    def test_grasp_is_released_when_standing(self, nominal_run):
        last = nominal_run.records[-1]
        assert last.state.value == "S4"
        assert "mutual[palm|grasp]" not in last.wrenches
        assert "robot[sole]" in last.wrenches

    def test_constraints_hold(self, nominal_run):
        summary = nominal_run.summary
        assert summary["max_residual"] < 1e-8
        assert summary["max_drift"] <= 1e-5

    def test_lyapunov_function_never_increases(self, nominal_run):
        assert nominal_run.summary["lyapunov_violations"] == 0

    def test_logged_rate_matches_closed_loop_prediction(self, nominal_run):
        records = nominal_run.records
        pairs = [
            (current, following)
            for current, following in zip(records, records[1:])
            if not (current.switched or following.switched)
        ]
        assert len(pairs) > 0.9 * len(records)
        gaps = np.array([abs(following.Vdot_fd - current.Vdot_pred) for current, following in pairs])
        assert gaps.max() <= 1e-3

    def test_task_error_settles(self, nominal_run):
        summary = nominal_run.summary
        assert summary["chi_err_peak"] > 0.0
        assert summary["chi_err_final_window_mean"] <= 0.01 * summary["chi_err_peak"]

    def test_summary_metrics_are_sane(self, nominal_run):
        summary = nominal_run.summary
        assert 0.0 <= summary["helping_fraction"] <= 1.0
        assert np.isfinite(summary["chi_err_integral"])
        assert summary["chi_err_peak"] >= summary["chi_err_final"]
        assert summary["steps"] == len(nominal_run.records)
        assert summary["simulated_time"] <= summary["time_limit"]


@pytest.mark.slow
@pytest.mark.e2e
def test_repeated_runs_match():
    config, base_dir, _ = load_scenario(SCENARIO_PATH, ["duration=0.3"])
    frames = []
    for _ in range(2):
        runner = ScenarioRunner.from_config(config, base_dir)
        frames.append(records_to_frame(runner.run().records, runner.layout()))
    assert frames[0].equals(frames[1])
