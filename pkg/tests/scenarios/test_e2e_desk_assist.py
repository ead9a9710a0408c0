"""
End-to-end comparison of the partner-aware and partner-cancelling laws.

Scenario: the seated robot starts with its torso pitching forward, so its momentum
error is large from the first step, while the partner servoes its arm into the
grasp. No transition fires; both laws run the same second of S1 from the same state.
"""

import pytest

from app.simulate.config import load_scenario
from app.simulate.scenario import compare_control_modes
from tests.conftest import ASSIST_PATH


@pytest.fixture(scope="module")
def comparison():
    config, base_dir, _ = load_scenario(ASSIST_PATH)
    return compare_control_modes(config, base_dir=base_dir)


@pytest.mark.slow
@pytest.mark.e2e
class TestDeskAssist:
    def test_both_laws_finish(self, comparison):
        for summary in comparison.values():
            assert summary["aborted"] is None
            assert summary["lyapunov_violations"] == 0

    def test_partner_aware_error_is_at_most_half_the_cancelling_error(self, comparison):
        aware = comparison["partner_aware"]["chi_err_integral"]
        cancelling = comparison["partner_cancelling"]["chi_err_integral"]
        assert 0.0 < aware <= 0.5 * cancelling

    def test_partner_helps_for_part_of_the_run(self, comparison):
        assert comparison["partner_aware"]["helping_fraction"] > 0.0
