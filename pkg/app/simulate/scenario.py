"""
Stand-up scenario runner.

Each step:
    machine step on the previous wrenches -> contact switch (if any)
    -> coupled terms -> partner servo torques -> robot control
    -> constrained forward dynamics -> Lyapunov monitor -> log -> integrate
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from app.control.gains import Gains
from app.control.lyapunov import LyapunovMonitor
from app.control.partner_aware import ControlMode, control_torques
from app.control.task import MomentumTask, com_momentum_reference
from app.coupled.system import (
    Anchors,
    CoupledSystem,
    SlotKind,
    SystemState,
    align_partner,
    assemble,
    record_anchors,
)
from app.coupled.wrenches import CoupledTerms, Stabilization, WrenchSolution, coupled_terms, project_velocity, wrench_maps
from app.dynamics.model_io import load_model_file
from app.dynamics.multibody import (
    AgentState,
    MultibodyModel,
    center_of_mass,
    check_state,
    gravity_forces,
    supported_inverse_dynamics,
)
from app.dynamics.spatial import Transform
from app.simulate.config import STAGES, ScenarioConfig, ServoMode
from app.simulate.integrator import constrained_forward_dynamics, integrate_step, switch_contacts
from app.simulate.recorder import LogLayout, LogRecord
from app.simulate.state_machine import MachineState, StandupStateMachine
from app.simulate.trajectory import MoveSchedule
from app.utils.exceptions import (
    ConfigurationException,
    ModelValidationException,
    ScenarioAbortedException,
    SolverException,
)
from app.utils.logging import get_logger

logger = get_logger(__name__)

FINAL_WINDOW = 0.5


@dataclass
class ScenarioResult:
    records: list[LogRecord]
    summary: dict[str, Any]
    layout: LogLayout


def _joint_vector(model: MultibodyModel, values: dict[str, float], base: np.ndarray, where: str) -> np.ndarray:
    out = np.array(base, dtype=float)
    for name, value in values.items():
        if name not in model.joint_names:
            raise ConfigurationException(
                f"{where}: '{name}' is not a joint of model '{model.name}'",
                details={"model": model.name, "joint": name},
            )
        out[model.joint_position_index(name)] = value
    return out


def _initial_state(model: MultibodyModel, setup, rng: np.random.Generator, perturbation: float) -> AgentState:
    s = _joint_vector(model, setup.joints, np.zeros(model.n), "initial joints")
    s = s + perturbation * rng.uniform(-1.0, 1.0, model.n)
    s_dot = _joint_vector(model, setup.joint_velocities, np.zeros(model.n), "initial joint velocities")
    pose = Transform.from_rpy_xyz(setup.base_rpy, setup.base_xyz)
    return AgentState(pose.translation, pose.rotation, s, np.array(setup.base_velocity, dtype=float), s_dot)


def _support_rows(system: CoupledSystem, terms: CoupledTerms) -> tuple[np.ndarray, np.ndarray]:
    """Partner environment rows of J and their bias J_dot V - b."""
    rows = [6 * i + k for i, slot in enumerate(system.slots) if slot.kind is SlotKind.HUMAN_ENV for k in range(6)]
    jacobian = terms.J[rows][:, system.human_slice]
    bias = terms.J_dot[rows] @ terms.V - terms.rhs[rows]
    return jacobian, bias


def _measures(system: CoupledSystem, solution: Optional[WrenchSolution], config: ScenarioConfig) -> tuple[float, float]:
    """
    (hand, feet) wrench measures from the last resolved wrenches.

    While the robot feet are not in contact the feet measure is the load taken off
    the seat: max(0, m g - seat F_z).
    """
    if solution is None:
        return 0.0, 0.0
    hand = 0.0
    feet = 0.0
    seat_fz = 0.0
    on_feet = False
    for i, slot in enumerate(system.slots):
        wrench = solution.slot(i)
        if slot.kind is SlotKind.MUTUAL:
            hand = float(np.linalg.norm(wrench))
        elif slot.kind is SlotKind.ROBOT_ENV and slot.robot_frame in config.feet_frames:
            feet += float(np.linalg.norm(wrench))
            on_feet = True
        elif slot.kind is SlotKind.ROBOT_ENV and slot.robot_frame in config.seat_frames:
            seat_fz += float(wrench[2])
    if not on_feet:
        weight = system.robot.total_mass * float(np.linalg.norm(system.robot.gravity))
        feet = max(0.0, weight - seat_fz)
    return hand, feet


@dataclass
class ScenarioRunner:
    """Runs one scenario; construct with ``from_config``."""

    config: ScenarioConfig
    human: MultibodyModel
    robot: MultibodyModel
    machine: StandupStateMachine = field(init=False)
    gains: Gains = field(init=False)

    def __post_init__(self) -> None:
        config = self.config
        self.gains = Gains.from_config(config.gains, p=6)
        self.machine = StandupStateMachine(
            hand_wrench_threshold=config.machine.hand_wrench_threshold,
            feet_threshold_1=config.machine.feet_threshold_1,
            feet_threshold_2=config.machine.feet_threshold_2,
            contact_sets={state: config.contact_spec(state) for state in STAGES},
            min_dwell={state: config.stage(state).min_dwell for state in STAGES},
            max_dwell={state: config.stage(state).max_dwell for state in STAGES},
            **({"hysteresis": config.machine.hysteresis} if config.machine.hysteresis is not None else {}),
        )
        for state in STAGES:
            assemble(self.human, self.robot, config.contact_spec(state))
            _joint_vector(self.human, config.stage(state).human_targets, np.zeros(self.human.n), f"stages.{state.value}.human_targets")
            _joint_vector(self.robot, config.stage(state).robot_posture, np.zeros(self.robot.n), f"stages.{state.value}.robot_posture")
        stabilization = config.stabilization
        self.stabilization = (
            Stabilization.from_settings(stabilization.zeta, stabilization.omega) if stabilization.enabled else None
        )
        self.control_period = config.dt if config.sampled_control else None
        if self.control_period is not None and config.control_mode is not ControlMode.FEEDBACK_LINEARIZATION:
            if not self.gains.isotropic:
                raise ConfigurationException(
                    "sampled_control needs scalar gains; set sampled_control=false for matrix gains",
                    details={"control_mode": config.control_mode.value},
                )

    @classmethod
    def from_config(cls, config: ScenarioConfig, base_dir: Optional[Path] = None) -> ScenarioRunner:
        base = Path(base_dir) if base_dir is not None else Path(".")
        human = load_model_file(base / config.human.model)
        robot = load_model_file(base / config.robot.model)
        return cls(config, human, robot)

    def initial_states(self) -> SystemState:
        config = self.config
        rng = np.random.default_rng(config.seed)
        state_r = _initial_state(self.robot, config.robot, rng, config.initial_perturbation)
        state_h = _initial_state(self.human, config.human, rng, config.initial_perturbation)
        if config.align_partner:
            state_h = align_partner(self.human, self.robot, state_h, state_r, config.mutual)
        check_state(self.human, state_h)
        check_state(self.robot, state_r)
        states = SystemState(state_h, state_r)
        system = assemble(self.human, self.robot, config.contact_spec(MachineState.S1))
        return states.with_velocity(project_velocity(coupled_terms(system, states)))

    def layout(self) -> LogLayout:
        labels: list[str] = []
        for state in STAGES:
            for label in self.config.contact_spec(state).labels:
                if label not in labels:
                    labels.append(label)
        return LogLayout(self.human.joint_names, self.robot.joint_names, tuple(labels))

    def _enter_stage(
        self,
        state: MachineState,
        t: float,
        states: SystemState,
        com_schedule: MoveSchedule,
        human_schedule: MoveSchedule,
    ) -> np.ndarray:
        """Queue the stage's com and partner moves; return the robot posture reference."""
        stage = self.config.stage(state)
        com_schedule.add_offset(np.array(stage.com_offset), stage.duration, t)
        target = _joint_vector(self.human, stage.human_targets, human_schedule.final, "human_targets")
        human_schedule.add_target(target, stage.duration, t)
        return _joint_vector(self.robot, stage.robot_posture, states.robot.s, "robot_posture")

    def _human_torques(self, system: CoupledSystem, terms: CoupledTerms, t: float, schedule: MoveSchedule) -> np.ndarray:
        """
        Partner servo torques.

        Computed torque and gravity compensation invert the partner's dynamics with
        its own environment contacts as support; the grasp is left out, so the robot
        is felt as a disturbance.
        """
        servo = self.config.human_servo
        state_h = terms.states.human
        s_ref, v_ref, a_ref = schedule(t)
        jacobian, bias = _support_rows(system, terms)
        if servo.mode is ServoMode.COMPUTED_TORQUE:
            s_ddot = a_ref + servo.kd * (v_ref - state_h.s_dot) + servo.kp * (s_ref - state_h.s)
            return supported_inverse_dynamics(self.human, state_h, s_ddot, jacobian, bias, terms.M_h, terms.h_h).tau
        tau = servo.kp * (s_ref - state_h.s) + servo.kd * (v_ref - state_h.s_dot)
        if servo.mode is ServoMode.GRAVITY_COMPENSATED:
            support = supported_inverse_dynamics(
                self.human,
                state_h,
                np.zeros(self.human.n),
                jacobian,
                np.zeros(jacobian.shape[0]),
                terms.M_h,
                gravity_forces(self.human, state_h),
            )
            tau = tau + support.tau
        return tau

    def _posture_accel(self, state_r: AgentState, posture: np.ndarray) -> np.ndarray:
        gains = self.config.robot_posture
        return -gains.kp * (state_r.s - posture) - gains.kd * state_r.s_dot

    def run(self) -> ScenarioResult:
        """
        Simulate the scenario.

        Returns:
            ScenarioResult with one record per step and the run summary

        Raises:
            ScenarioAbortedException: If a solver error stops the run; it carries the
                records and summary produced so far
        """
        config = self.config
        dt = config.dt
        steps = int(round(config.time_limit / dt))
        layout = self.layout()

        states = self.initial_states()
        system = assemble(self.human, self.robot, self.machine.active_contacts)
        anchors: Anchors = record_anchors(system, states)
        task = MomentumTask(self.robot)
        com_schedule = MoveSchedule(center_of_mass(self.robot, states.robot))
        task.set_reference(com_momentum_reference(self.robot.total_mass, com_schedule))
        human_schedule = MoveSchedule(states.human.s)
        posture = self._enter_stage(self.machine.state, 0.0, states, com_schedule, human_schedule)

        monitor = LyapunovMonitor()
        records: list[LogRecord] = []
        switches = 0
        solution: Optional[WrenchSolution] = None
        logger.info("scenario_started", name=config.name, steps=steps, dt=dt, mode=config.control_mode.value)

        try:
            for k in range(steps):
                t = k * dt
                switched = False
                hand, feet = _measures(system, solution, config)
                step = self.machine.step(hand, feet, t)
                if step.state is MachineState.DONE:
                    break
                if step.transitioned:
                    if step.contacts != system.contacts:
                        change = switch_contacts(system, step.contacts, states, anchors)
                        system, states, anchors = change.system, change.states, change.anchors
                        switches += 1
                        switched = True
                    posture = self._enter_stage(step.state, t, states, com_schedule, human_schedule)
                    if config.reset_integral_on_transition:
                        task.reset_integral()

                terms = coupled_terms(system, states, anchors, self.stabilization)
                maps = wrench_maps(terms)
                tau_h = self._human_torques(system, terms, t, human_schedule)

                chi = task.jacobian(states.robot, terms.kin.robot) @ states.robot.nu
                chi_d, _ = task.reference(t)
                task.update_integral(chi - chi_d, dt)

                diag = control_torques(
                    system,
                    states,
                    task,
                    self.gains,
                    tau_h,
                    mode=config.control_mode,
                    t=t,
                    terms=terms,
                    maps=maps,
                    dt=self.control_period,
                    posture_accel=self._posture_accel(states.robot, posture),
                )
                dynamics = constrained_forward_dynamics(
                    system, states, tau_h, diag.tau_r, terms=terms, maps=maps
                )
                solution = dynamics.solution
                rate = monitor.observe(t, diag.V, switched)
                records.append(
                    LogRecord(
                        t=t,
                        state=step.state,
                        switched=switched,
                        human=states.human,
                        robot=states.robot,
                        tau_h=tau_h,
                        tau_r=diag.tau_r,
                        wrenches=solution.by_label(),
                        chi=diag.chi,
                        chi_d=diag.chi_d,
                        chi_err=diag.chi_err,
                        alpha=diag.alpha,
                        beta_norm=diag.beta_norm,
                        V=diag.V,
                        Vdot_pred=diag.Vdot_predicted,
                        Vdot_fd=0.0 if rate is None else rate,
                        residual=dynamics.residual,
                        drift=float(np.max(np.abs(terms.position_error), initial=0.0)),
                    )
                )
                states = integrate_step(states, dynamics.V_dot, dt)
        except (SolverException, ModelValidationException) as e:
            summary = self._summary(records, switches, monitor, aborted=str(e))
            logger.error("scenario_aborted", name=config.name, error=e.message, steps=len(records))
            raise ScenarioAbortedException(
                f"Scenario '{config.name}' aborted at t={len(records) * dt:.4f}: {e.message}",
                details={"cause": type(e).__name__, **e.details},
                records=records,
                summary=summary,
            ) from e

        summary = self._summary(records, switches, monitor)
        logger.info(
            "scenario_completed",
            name=config.name,
            steps=len(records),
            reached=summary["reached_state"],
            switches=switches,
            lyapunov_violations=summary["lyapunov_violations"],
        )
        return ScenarioResult(records, summary, layout)

    def _summary(
        self,
        records: list[LogRecord],
        switches: int,
        monitor: LyapunovMonitor,
        aborted: Optional[str] = None,
    ) -> dict[str, Any]:
        config = self.config
        errors = np.array([np.linalg.norm(r.chi_err) for r in records])
        times = np.array([r.t for r in records])
        window = errors[times >= times[-1] - FINAL_WINDOW + 0.5 * config.dt] if records else errors
        alphas = np.array([r.alpha for r in records])
        return {
            "name": config.name,
            "effective_config": config.model_dump(mode="json"),
            "steps": len(records),
            "simulated_time": len(records) * config.dt,
            "time_limit": config.time_limit,
            "reached_state": self.machine.state.value,
            "transitions": [tr.to_dict() for tr in self.machine.transitions],
            "contact_switches": switches,
            "max_residual": float(max((r.residual for r in records), default=0.0)),
            "max_drift": float(max((r.drift for r in records), default=0.0)),
            "lyapunov_violations": monitor.violations,
            "max_lyapunov_rate": float(monitor.max_rate) if np.isfinite(monitor.max_rate) else None,
            "chi_err_final": float(errors[-1]) if records else 0.0,
            "chi_err_peak": float(errors.max()) if records else 0.0,
            "chi_err_final_window_mean": float(window.mean()) if window.size else 0.0,
            "chi_err_integral": float(errors.sum() * config.dt),
            "helping_fraction": float(np.mean(alphas < 0.0)) if records else 0.0,
            "aborted": aborted,
        }


def run_scenario(config: ScenarioConfig, base_dir: Optional[Path] = None) -> ScenarioResult:
    """
    Run a scenario from a validated configuration.

    Args:
        config: Scenario configuration
        base_dir: Directory the model paths are relative to

    Returns:
        ScenarioResult
    """
    return ScenarioRunner.from_config(config, base_dir).run()


def compare_control_modes(
    config: ScenarioConfig,
    modes: Iterable[ControlMode | str] = (ControlMode.PARTNER_AWARE, ControlMode.PARTNER_CANCELLING),
    base_dir: Optional[Path] = None,
) -> dict[str, dict[str, Any]]:
    """
    Run the same scenario under several control modes.

    Returns:
        mode -> {chi_err_integral, chi_err_final, lyapunov_violations, helping_fraction, aborted}
    """
    results: dict[str, dict[str, Any]] = {}
    for mode in modes:
        mode = ControlMode(mode)
        variant = config.model_copy(update={"control_mode": mode})
        try:
            summary = run_scenario(variant, base_dir).summary
        except ScenarioAbortedException as e:
            summary = e.summary
        results[mode.value] = {
            key: summary.get(key)
            for key in ("chi_err_integral", "chi_err_final", "lyapunov_violations", "helping_fraction", "aborted")
        }
        logger.info("control_mode_compared", mode=mode.value, **results[mode.value])
    return results
