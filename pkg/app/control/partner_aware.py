"""
Partner-aware task control.

With the robot-side wrench selection f_R = Gbar1 tau_H + Gbar2 tau_R + Gbar3 the
task error rate weighted by K_d reads

    K_d e_dot + K_p I = Omega tau_H + Delta tau_R + Lambda

    Delta  = K_d J_chi M^-1 (B + J^T Gbar2)
    Omega  = K_d J_chi M^-1 J^T Gbar1
    Lambda = K_d [J_chi M^-1 (J^T Gbar3 - h) + J_dot_chi nu - chi_d_dot] + K_p I

so that V_dot = e^T (Omega tau_H + Delta tau_R + Lambda). M, h, B, J are the robot's.

Given a control period dt the law is applied in its sampled form: the torque is held
over the step and the decrease is imposed on the step-mean error, which is what the
trapezoidal integral and a forward difference of V see.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from app.control.gains import Gains
from app.control.lyapunov import alpha_decomposition, closed_loop_rate, lyapunov_value
from app.control.task import TaskEvaluation, TaskSpec
from app.coupled.system import Agent, CoupledSystem, SystemState
from app.coupled.wrenches import CoupledTerms, WrenchMaps, coupled_terms, robot_wrench_terms, wrench_maps
from app.utils.exceptions import ConfigurationException, InfeasibleTaskException, TaskRankException
from app.utils.logging import get_logger
from app.utils.settings import get_settings

logger = get_logger(__name__)


class ControlMode(str, Enum):
    PARTNER_AWARE = "partner_aware"
    PARTNER_CANCELLING = "partner_cancelling"
    FEEDBACK_LINEARIZATION = "feedback_linearization"


@dataclass(frozen=True)
class TaskMaps:
    """
    Delta, Lambda, Omega and the task quantities they were built from.

    accel_torque, accel_human and accel_drift give the robot nu_dot as
    accel_torque tau_R + accel_human tau_H + accel_drift.
    """

    delta: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    torque_map: np.ndarray
    drift: np.ndarray
    human_map: np.ndarray
    task: TaskEvaluation
    chi_d: np.ndarray
    chi_d_dot: np.ndarray
    chi_err: np.ndarray
    integral_err: np.ndarray
    maps: WrenchMaps
    accel_torque: np.ndarray
    accel_human: np.ndarray
    accel_drift: np.ndarray

    def __iter__(self):
        return iter((self.delta, self.lam, self.omega))


@dataclass(frozen=True)
class ControlDiagnostics:
    tau_r: np.ndarray
    alpha: float
    beta_norm: float
    chi: np.ndarray
    chi_d: np.ndarray
    chi_err: np.ndarray
    V: float
    Vdot_predicted: float
    Vdot_identity: float
    Delta_cond: float
    mode: ControlMode
    task_maps: TaskMaps


@dataclass(frozen=True)
class DampedInverse:
    """Damped right pseudo-inverse of a fat matrix and its exact null-space projector."""

    pinv: np.ndarray
    null_projector: np.ndarray
    condition: float


def damped_pinv(matrix: np.ndarray, damping_ratio: Optional[float] = None) -> DampedInverse:
    """
    Damped least-squares inverse with lambda = damping_ratio * sigma_max.

    The projector I - V1 V1^T is built from the right singular vectors so that
    matrix @ projector vanishes to machine precision.
    """
    ratio = get_settings().pinv_damping_ratio if damping_ratio is None else damping_ratio
    rows, cols = matrix.shape
    u, sigma, vt = np.linalg.svd(matrix, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return DampedInverse(np.zeros((cols, rows)), np.eye(cols), np.inf)
    lam = ratio * sigma[0]
    scaled = sigma / (sigma**2 + lam**2)
    pinv = (vt.T * scaled) @ u.T
    rank = int(np.sum(sigma > sigma[0] * 1e-14))
    v1 = vt[:rank].T
    projector = np.eye(cols) - v1 @ v1.T
    condition = float(sigma[0] / sigma[-1]) if sigma[-1] > 0 and sigma.size == rows else np.inf
    return DampedInverse(pinv, projector, condition)


def compute_delta_lambda(
    system: CoupledSystem,
    states: SystemState,
    task: TaskSpec,
    gains: Gains,
    t: float = 0.0,
    terms: Optional[CoupledTerms] = None,
    maps: Optional[WrenchMaps] = None,
    dt: Optional[float] = None,
) -> TaskMaps:
    """
    Build Delta (p x n_R), Lambda (p) and Omega (p x n_H) at a state.

    Args:
        system: Composite system
        states: Both agents' states
        task: Robot task (its integral state is read, not advanced)
        gains: Controller gains
        t: Time for the task reference
        terms: Precomputed coupled terms (carry the constraint right-hand side)
        maps: Precomputed wrench decomposition at the same state
        dt: Control period; when given chi_d_dot is the secant rate over [t, t + dt]

    Returns:
        TaskMaps (unpacks as (Delta, Lambda, Omega))
    """
    terms = terms or coupled_terms(system, states)
    maps = maps or wrench_maps(terms)
    robot = system.robot
    state_r = states.robot

    evaluation = task.evaluate(state_r, terms.kin.robot)
    chi_d, chi_d_dot = task.reference(t)
    if dt is not None:
        chi_d_next, _ = task.reference(t + dt)
        chi_d_dot = (chi_d_next - chi_d) / dt
    chi_err = evaluation.chi - chi_d
    integral = task.integral_state

    gbar1, gbar2, gbar3 = robot_wrench_terms(system, maps)
    jac_r = system.agent_contact_jacobian(Agent.ROBOT, states, terms.kin)
    selection = robot.selection_matrix()

    torque_rhs = selection + jac_r.T @ gbar2
    human_rhs = jac_r.T @ gbar1
    drift_rhs = jac_r.T @ gbar3 - terms.h_r
    solved = terms.agent_solve(
        Agent.ROBOT, np.column_stack([torque_rhs, human_rhs, drift_rhs[:, None]])
    )
    n_r, n_h = system.n_r, system.n_h
    accel_torque = solved[:, :n_r]
    accel_human = solved[:, n_r : n_r + n_h]
    accel_drift = solved[:, -1]
    J_chi = evaluation.jacobian
    torque_map = J_chi @ accel_torque
    human_map = J_chi @ accel_human
    drift = J_chi @ accel_drift + evaluation.jdot_nu

    delta = gains.K_d @ torque_map
    omega = gains.K_d @ human_map
    lam = gains.K_d @ (drift - chi_d_dot) + gains.K_p @ integral
    return TaskMaps(
        delta=delta,
        lam=lam,
        omega=omega,
        torque_map=torque_map,
        drift=drift,
        human_map=human_map,
        task=evaluation,
        chi_d=chi_d,
        chi_d_dot=chi_d_dot,
        chi_err=chi_err,
        integral_err=integral.copy(),
        maps=maps,
        accel_torque=accel_torque,
        accel_human=accel_human,
        accel_drift=accel_drift,
    )


@dataclass(frozen=True)
class SampledStep:
    """
    One control period of the sampled law.

    midpoint is the step-mean task error the held torque produces, removed the share
    of the partner effect the robot compensates and damping K_D + dt/2 K_p.
    """

    midpoint: np.ndarray
    removed: np.ndarray
    damping: float


def sampled_step(
    gains: Gains,
    chi_err: np.ndarray,
    integral_err: np.ndarray,
    partner: np.ndarray,
    dt: float,
    mode: ControlMode = ControlMode.PARTNER_AWARE,
) -> SampledStep:
    """
    Solve the sampled law for the step-mean error.

    Holding q = K_d e_dot + K_p I over a step of the trapezoidal integral gives the
    step mean e_m = e + dt/2 K_d^-1 (q - K_p I) and

        (V+ - V) / dt = e_m^T q + dt/2 e_m^T K_p e_m.

    With q = Omega tau_H - (K_D + dt/2 K_p) e_m - r this is -e_m^T K_D e_m plus
    e_m^T (Omega tau_H - r). The partner-aware law picks r as the component of the
    partner effect along e_m when that component raises V; partner cancelling
    removes all of it.

    Raises:
        ConfigurationException: If the gains are not multiples of the identity
    """
    if not gains.isotropic:
        raise ConfigurationException(
            "The sampled law needs scalar gains (kd, kp, k_D times identity)",
            details={"mode": ControlMode(mode).value},
        )
    kd, kp, k_D = float(gains.K_d[0, 0]), float(gains.K_p[0, 0]), float(gains.K_D[0, 0])
    half = 0.5 * dt / kd
    damping = k_D + 0.5 * dt * kp
    scale = 1.0 + half * damping
    held = np.asarray(chi_err, dtype=float) - half * kp * np.asarray(integral_err, dtype=float)
    partner = np.asarray(partner, dtype=float)
    cancel = SampledStep(held / scale, partner.copy(), damping)
    if mode is ControlMode.PARTNER_CANCELLING:
        return cancel

    free = held + half * partner
    norm = float(np.linalg.norm(free))
    if norm < gains.eps_chi or float(free @ partner) <= 0.0:
        return SampledStep(free / scale, np.zeros_like(partner), damping)
    direction = free / norm
    along = float(direction @ partner)
    rho = (norm - half * along) / scale
    if rho < 0.0:
        return cancel
    return SampledStep(rho * direction, along * direction, damping)


def sampled_rate(gains: Gains, midpoint: np.ndarray, q: np.ndarray, dt: float) -> float:
    """(V+ - V) / dt = e_m^T q + dt/2 e_m^T K_p e_m."""
    return float(midpoint @ q + 0.5 * dt * midpoint @ gains.K_p @ midpoint)


def step_midpoint(gains: Gains, chi_err: np.ndarray, integral_err: np.ndarray, q: np.ndarray, dt: float) -> np.ndarray:
    """Step-mean error e + dt/2 K_d^-1 (q - K_p I) for a held q."""
    return chi_err + 0.5 * dt * np.linalg.solve(gains.K_d, q - gains.K_p @ integral_err)


def postural_torques(
    task_maps: TaskMaps,
    projector: np.ndarray,
    tau_r: np.ndarray,
    tau_h: np.ndarray,
    posture_accel: np.ndarray,
    damping_ratio: Optional[float] = None,
) -> np.ndarray:
    """
    Null-space torque whose robot joint accelerations best match ``posture_accel``.

    Solves S T N tau_0 = s_ddot* - S (T tau_R + H tau_H + d) with a damped inverse,
    T, H and d being the accel maps of ``task_maps`` and S the joint rows.
    """
    ratio = get_settings().posture_damping_ratio if damping_ratio is None else damping_ratio
    joints = slice(6, None)
    free = task_maps.accel_torque[joints] @ projector
    realized = (
        task_maps.accel_torque[joints] @ tau_r
        + task_maps.accel_human[joints] @ tau_h
        + task_maps.accel_drift[joints]
    )
    inverse = damped_pinv(free, ratio)
    return projector @ (inverse.pinv @ (np.asarray(posture_accel, dtype=float) - realized))


def partner_aware_torques(
    system: CoupledSystem,
    states: SystemState,
    task: TaskSpec,
    gains: Gains,
    tau_h: np.ndarray,
    tau_0: Optional[np.ndarray] = None,
    t: float = 0.0,
    terms: Optional[CoupledTerms] = None,
    maps: Optional[WrenchMaps] = None,
    mode: ControlMode = ControlMode.PARTNER_AWARE,
    dt: Optional[float] = None,
    posture_accel: Optional[np.ndarray] = None,
) -> ControlDiagnostics:
    """
    Robot torques tau_R = -Delta^+ [Lambda + K_D e + max(0, alpha) e/|e|] + N tau_0.

    In partner-cancelling mode the whole partner effect Omega tau_H replaces the
    max(0, alpha) term. With ``dt`` the sampled form is used (see ``sampled_step``).

    Args:
        system: Composite system
        states: Both agents' states
        task: Robot task
        gains: Controller gains
        tau_h: Partner joint torques
        tau_0: Free torque projected into the null space of Delta
        t: Time for the task reference
        terms: Precomputed coupled terms
        maps: Precomputed wrench decomposition
        mode: PARTNER_AWARE or PARTNER_CANCELLING
        dt: Control period of the sampled law; None applies the continuous law
        posture_accel: Desired robot joint accelerations realized in the null space

    Returns:
        ControlDiagnostics

    Raises:
        TaskRankException: If Delta loses row rank beyond the configured condition limit
    """
    tau_h = np.asarray(tau_h, dtype=float)
    tau_0 = np.zeros(system.n_r) if tau_0 is None else np.asarray(tau_0, dtype=float)
    task_maps = compute_delta_lambda(system, states, task, gains, t, terms, maps, dt)
    delta = task_maps.delta
    inverse = damped_pinv(delta)
    limit = get_settings().delta_condition_limit
    if not inverse.condition <= limit:
        raise TaskRankException(
            f"Task-torque map is rank deficient (condition {inverse.condition:.3e})",
            details={"condition": inverse.condition, "limit": limit, "t": t},
        )

    chi_err = task_maps.chi_err
    partner = task_maps.omega @ tau_h
    alpha, beta_norm = alpha_decomposition(partner, chi_err, gains.eps_chi)

    if dt is not None:
        step = sampled_step(gains, chi_err, task_maps.integral_err, partner, dt, mode)
        target = task_maps.lam + step.damping * step.midpoint + step.removed
        held = partner - step.damping * step.midpoint - step.removed
        vdot_predicted = sampled_rate(gains, step.midpoint, held, dt)
    else:
        err_norm = float(np.linalg.norm(chi_err))
        direction = chi_err / err_norm if err_norm >= gains.eps_chi else np.zeros_like(chi_err)
        target = task_maps.lam + gains.K_D @ chi_err
        if mode is ControlMode.PARTNER_CANCELLING:
            target = target + partner
            vdot_predicted = float(-chi_err @ gains.K_D @ chi_err)
        else:
            target = target + max(0.0, alpha) * direction
            vdot_predicted = closed_loop_rate(gains, chi_err, alpha)

    tau_r = -inverse.pinv @ target + inverse.null_projector @ tau_0
    if posture_accel is not None:
        tau_r = tau_r + postural_torques(task_maps, inverse.null_projector, tau_r, tau_h, posture_accel)

    q = partner + delta @ tau_r + task_maps.lam
    if dt is not None:
        vdot_identity = sampled_rate(gains, step_midpoint(gains, chi_err, task_maps.integral_err, q, dt), q, dt)
    else:
        vdot_identity = float(chi_err @ q)
    return ControlDiagnostics(
        tau_r=tau_r,
        alpha=alpha,
        beta_norm=beta_norm,
        chi=task_maps.task.chi,
        chi_d=task_maps.chi_d,
        chi_err=chi_err,
        V=lyapunov_value(gains, chi_err, task_maps.integral_err),
        Vdot_predicted=vdot_predicted,
        Vdot_identity=vdot_identity,
        Delta_cond=inverse.condition,
        mode=mode,
        task_maps=task_maps,
    )


def feedback_linearization_torques(
    system: CoupledSystem,
    states: SystemState,
    task: TaskSpec,
    gains: Gains,
    tau_h: Optional[np.ndarray] = None,
    t: float = 0.0,
    terms: Optional[CoupledTerms] = None,
    maps: Optional[WrenchMaps] = None,
    task_maps: Optional[TaskMaps] = None,
) -> np.ndarray:
    """
    Minimum-norm torques realizing chi_dot = chi_d_dot - fl_kd e - fl_kp I.

    The realized rate is J_chi nu_dot + J_dot_chi nu with nu_dot from the coupled
    dynamics, so the target is reached through the wrench superposition.

    Raises:
        InfeasibleTaskException: If the torque map is rank deficient or the target
            cannot be met
    """
    tau_h = np.zeros(system.n_h) if tau_h is None else np.asarray(tau_h, dtype=float)
    task_maps = task_maps or compute_delta_lambda(system, states, task, gains, t, terms, maps)
    torque_map = task_maps.torque_map
    target = (
        task_maps.chi_d_dot
        - gains.fl_kd @ task_maps.chi_err
        - gains.fl_kp @ task_maps.integral_err
    )
    rhs = target - task_maps.drift - task_maps.human_map @ tau_h

    sigma = np.linalg.svd(torque_map, compute_uv=False)
    limit = get_settings().delta_condition_limit
    if sigma.size < torque_map.shape[0] or sigma[-1] <= 0 or sigma[0] / sigma[-1] > limit:
        raise InfeasibleTaskException(
            "Task acceleration is not reachable: torque map is rank deficient",
            details={"singular_values": sigma, "t": t},
        )
    tau_r, *_ = np.linalg.lstsq(torque_map, rhs, rcond=None)
    miss = float(np.linalg.norm(torque_map @ tau_r - rhs))
    if miss > 1e-8 * max(1.0, float(np.linalg.norm(rhs))):
        raise InfeasibleTaskException(
            f"Task acceleration target missed by {miss:.3e}", details={"miss": miss, "t": t}
        )
    return tau_r


def control_torques(
    system: CoupledSystem,
    states: SystemState,
    task: TaskSpec,
    gains: Gains,
    tau_h: np.ndarray,
    mode: ControlMode = ControlMode.PARTNER_AWARE,
    tau_0: Optional[np.ndarray] = None,
    t: float = 0.0,
    terms: Optional[CoupledTerms] = None,
    maps: Optional[WrenchMaps] = None,
    dt: Optional[float] = None,
    posture_accel: Optional[np.ndarray] = None,
) -> ControlDiagnostics:
    """
    Robot torques and diagnostics for any control mode.

    Feedback linearization reports the Lyapunov quantities of the same task error so
    that runs in different modes log comparable columns.
    """
    mode = ControlMode(mode)
    if mode is not ControlMode.FEEDBACK_LINEARIZATION:
        return partner_aware_torques(
            system, states, task, gains, tau_h, tau_0, t, terms, maps, mode, dt, posture_accel
        )

    tau_h = np.asarray(tau_h, dtype=float)
    task_maps = compute_delta_lambda(system, states, task, gains, t, terms, maps, dt)
    tau_r = feedback_linearization_torques(
        system, states, task, gains, tau_h, t, terms, maps, task_maps=task_maps
    )
    inverse = damped_pinv(task_maps.delta)
    if tau_0 is not None:
        tau_r = tau_r + inverse.null_projector @ np.asarray(tau_0, dtype=float)
    if posture_accel is not None:
        tau_r = tau_r + postural_torques(task_maps, inverse.null_projector, tau_r, tau_h, posture_accel)
    chi_err = task_maps.chi_err
    partner = task_maps.omega @ tau_h
    alpha, beta_norm = alpha_decomposition(partner, chi_err, gains.eps_chi)
    q = partner + task_maps.delta @ tau_r + task_maps.lam
    if dt is not None:
        vdot_identity = sampled_rate(gains, step_midpoint(gains, chi_err, task_maps.integral_err, q, dt), q, dt)
    else:
        vdot_identity = float(chi_err @ q)
    sigma = np.linalg.svd(task_maps.delta, compute_uv=False)
    return ControlDiagnostics(
        tau_r=tau_r,
        alpha=alpha,
        beta_norm=beta_norm,
        chi=task_maps.task.chi,
        chi_d=task_maps.chi_d,
        chi_err=chi_err,
        V=lyapunov_value(gains, chi_err, task_maps.integral_err),
        Vdot_predicted=vdot_identity,
        Vdot_identity=vdot_identity,
        Delta_cond=float(sigma[0] / sigma[-1]) if sigma[-1] > 0 else float("inf"),
        mode=mode,
        task_maps=task_maps,
    )
