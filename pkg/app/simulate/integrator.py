"""
Constrained forward dynamics and time stepping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from app.coupled.system import (
    Anchors,
    ContactSpec,
    CoupledSystem,
    SystemState,
    assemble,
    record_anchors,
)
from app.coupled.wrenches import (
    CoupledTerms,
    Stabilization,
    WrenchMaps,
    WrenchSolution,
    composite_accelerations,
    constraint_residual,
    coupled_terms,
    project_velocity,
    solution_from_maps,
    wrench_maps,
)
from app.dynamics.multibody import AgentState, integrate_configuration
from app.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ForwardDynamics:
    V_dot: np.ndarray
    f_star: np.ndarray
    residual: float
    solution: WrenchSolution


def constrained_forward_dynamics(
    system: CoupledSystem,
    states: SystemState,
    tau_h: np.ndarray,
    tau_r: np.ndarray,
    terms: Optional[CoupledTerms] = None,
    maps: Optional[WrenchMaps] = None,
    anchors: Optional[Anchors] = None,
    stabilization: Optional[Stabilization] = None,
) -> ForwardDynamics:
    """
    Accelerations and contact wrenches of the coupled system.

    V_dot = M^-1 (B tau + J^T f_star - h) with f_star enforcing the constraints,
    stabilized when ``stabilization`` is given (or carried by ``terms``). A single
    refinement pass on the constraint residual follows the closed-form solve.

    Raises:
        SingularContactException: If the active contact set is singular
    """
    terms = terms or coupled_terms(system, states, anchors, stabilization)
    maps = maps or wrench_maps(terms)
    solution = solution_from_maps(system, maps, tau_h, tau_r)
    V_dot = composite_accelerations(terms, np.asarray(tau_h, dtype=float), np.asarray(tau_r, dtype=float), solution.f_star)
    V_dot, f_star = maps.correct(terms, V_dot, solution.f_star)
    solution = replace(solution, f_star=f_star)
    return ForwardDynamics(V_dot, solution.f_star, constraint_residual(terms, V_dot), solution)


def integrate_agent(state: AgentState, nu_dot: np.ndarray, dt: float) -> AgentState:
    """Semi-implicit Euler: velocity first, then configuration with the new velocity."""
    nu = state.nu + dt * np.asarray(nu_dot, dtype=float)
    return integrate_configuration(state.with_velocity(nu), dt)


def integrate_step(state: SystemState | AgentState, V_dot: np.ndarray, dt: float) -> SystemState | AgentState:
    """
    Advance a single agent or the composite state by one step.

    The base rotation is updated by the exponential of the world angular velocity and
    re-orthonormalized; joint positions are updated linearly.
    """
    if isinstance(state, AgentState):
        return integrate_agent(state, V_dot, dt)
    nh = state.human.nu.shape[0]
    return SystemState(
        integrate_agent(state.human, V_dot[:nh], dt),
        integrate_agent(state.robot, V_dot[nh:], dt),
    )


@dataclass(frozen=True)
class ContactSwitch:
    system: CoupledSystem
    states: SystemState
    anchors: Anchors
    velocity_jump: float


def switch_contacts(
    system: CoupledSystem, contacts: ContactSpec, states: SystemState, anchors: Anchors
) -> ContactSwitch:
    """
    Activate a new contact set.

    Newly active environment contacts are welded at their current pose and the
    velocity is projected so the new constraints hold at velocity level.
    """
    new_system = assemble(system.human, system.robot, contacts)
    new_anchors = record_anchors(new_system, states, anchors)
    terms = coupled_terms(new_system, states, new_anchors)
    V_plus = project_velocity(terms)
    jump = float(np.linalg.norm(V_plus - states.V))
    logger.info(
        "contact_switch",
        previous=system.contacts.labels,
        active=contacts.labels,
        velocity_jump=jump,
    )
    return ContactSwitch(new_system, states.with_velocity(V_plus), new_anchors, jump)
