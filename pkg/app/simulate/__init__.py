"""
Simulation: minimum-jerk references, the stand-up state machine, constrained time
stepping and the scenario runner with its CSV log.
"""

from app.simulate.config import ScenarioConfig, load_scenario, parse_scenario
from app.simulate.integrator import (
    ForwardDynamics,
    constrained_forward_dynamics,
    integrate_step,
    switch_contacts,
)
from app.simulate.recorder import LogLayout, LogRecord, read_log, records_to_frame, write_log, write_summary
from app.simulate.scenario import ScenarioResult, ScenarioRunner, compare_control_modes, run_scenario
from app.simulate.state_machine import MachineState, StandupStateMachine, machine_step
from app.simulate.trajectory import MinJerkSpec, MoveSchedule, ScheduledMove, min_jerk_eval

__all__ = [
    "ScenarioConfig",
    "load_scenario",
    "parse_scenario",
    "ForwardDynamics",
    "constrained_forward_dynamics",
    "integrate_step",
    "switch_contacts",
    "LogLayout",
    "LogRecord",
    "read_log",
    "records_to_frame",
    "write_log",
    "write_summary",
    "ScenarioResult",
    "ScenarioRunner",
    "compare_control_modes",
    "run_scenario",
    "MachineState",
    "StandupStateMachine",
    "machine_step",
    "MinJerkSpec",
    "MoveSchedule",
    "ScheduledMove",
    "min_jerk_eval",
]
