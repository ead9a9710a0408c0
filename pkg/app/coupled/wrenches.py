"""
Closed-form interaction and contact wrenches.

With J the wrench-order contact Jacobian and Gamma = J M^-1 J^T, enforcing the
acceleration-level constraint J V_dot + J_dot V = b gives

    f_star = Gamma^-1 [b - J M^-1 (B tau - h) - J_dot V]
           = G1 tau_H + G2 tau_R + G3

where b is zero for the bare constraint and the stabilization right-hand side when
constraint drift feedback is active.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from app.coupled.system import (
    Agent,
    Anchors,
    CoupledSystem,
    SystemKinematics,
    SystemState,
    wrench_jacobian_rate,
)
from app.dynamics.multibody import bias_forces, mass_matrix
from app.utils.exceptions import SingularContactException
from app.utils.logging import get_logger
from app.utils.settings import get_settings

logger = get_logger(__name__)


@dataclass(frozen=True)
class Stabilization:
    """Constraint drift feedback: b = -2 zeta omega (J V) - omega^2 e."""

    zeta: float = 1.0
    omega: float = 20.0

    @classmethod
    def from_settings(cls, zeta: Optional[float] = None, omega: Optional[float] = None) -> Stabilization:
        """Gains from HRI_BAUMGARTE_ZETA / HRI_BAUMGARTE_OMEGA unless given."""
        settings = get_settings()
        return cls(
            settings.baumgarte_zeta if zeta is None else zeta,
            settings.baumgarte_omega if omega is None else omega,
        )

    def rhs(self, velocity_error: np.ndarray, position_error: np.ndarray) -> np.ndarray:
        return -2.0 * self.zeta * self.omega * velocity_error - self.omega**2 * position_error


class _AgentSolver:
    """Cholesky solve against one agent's mass matrix."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = matrix
        self.factor = cho_factor(matrix)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self.factor, rhs)


@dataclass
class CoupledTerms:
    """
    Everything the wrench resolution needs at one composite state.

    Built once per state and shared by the controller and the forward dynamics so
    that both see the same constraint right-hand side.
    """

    system: CoupledSystem
    states: SystemState
    kin: SystemKinematics
    M_h: np.ndarray
    M_r: np.ndarray
    h_h: np.ndarray
    h_r: np.ndarray
    J: np.ndarray
    J_dot: np.ndarray
    rhs: np.ndarray
    position_error: np.ndarray

    def __post_init__(self) -> None:
        self._solvers = (_AgentSolver(self.M_h), _AgentSolver(self.M_r))

    @property
    def V(self) -> np.ndarray:
        return self.states.V

    @property
    def h(self) -> np.ndarray:
        return np.concatenate([self.h_h, self.h_r])

    @property
    def M(self) -> np.ndarray:
        out = np.zeros((self.system.N, self.system.N))
        out[self.system.human_slice, self.system.human_slice] = self.M_h
        out[self.system.robot_slice, self.system.robot_slice] = self.M_r
        return out

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        """M^-1 rhs using the block-diagonal structure (rhs may be a matrix)."""
        hs, rs = self.system.human_slice, self.system.robot_slice
        out = np.empty_like(rhs, dtype=float)
        out[hs] = self._solvers[0].solve(rhs[hs])
        out[rs] = self._solvers[1].solve(rhs[rs])
        return out

    def agent_solve(self, agent: Agent, rhs: np.ndarray) -> np.ndarray:
        return self._solvers[0 if agent is Agent.HUMAN else 1].solve(rhs)


def coupled_terms(
    system: CoupledSystem,
    states: SystemState,
    anchors: Optional[Anchors] = None,
    stabilization: Optional[Stabilization] = None,
) -> CoupledTerms:
    """
    Evaluate M, h, J, J_dot and the constraint right-hand side at a state.

    Args:
        system: Composite system
        states: Both agents' states
        anchors: Environment contact anchors (for position errors)
        stabilization: Drift feedback; None enforces the bare constraint

    Returns:
        CoupledTerms
    """
    kin = SystemKinematics.of(system, states)
    M_h = mass_matrix(system.human, states.human, kin.human)
    M_r = mass_matrix(system.robot, states.robot, kin.robot)
    h_h = bias_forces(system.human, states.human, kin.human)
    h_r = bias_forces(system.robot, states.robot, kin.robot)
    J = system.wrench_jacobian(states, kin)
    J_dot = wrench_jacobian_rate(system, states)
    error = system.constraint_position_errors(states, anchors, kin)
    if stabilization is None:
        rhs = np.zeros(J.shape[0])
    else:
        rhs = stabilization.rhs(J @ states.V, error)
    return CoupledTerms(system, states, kin, M_h, M_r, h_h, h_r, J, J_dot, rhs, error)


@dataclass(frozen=True)
class WrenchSolution:
    """
    Resolved wrenches in wrench order [mutual; human-env; robot-env].

    f_star = G1 tau_H + G2 tau_R + G3. Gbar1..3 are the robot-side selections.
    """

    f_star: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    G3: np.ndarray
    Gbar1: np.ndarray
    Gbar2: np.ndarray
    Gbar3: np.ndarray
    labels: tuple[str, ...]
    gamma_condition: float

    def slot(self, index: int) -> np.ndarray:
        return self.f_star[6 * index : 6 * index + 6]

    def by_label(self) -> dict[str, np.ndarray]:
        return {label: self.slot(i) for i, label in enumerate(self.labels)}


@dataclass(frozen=True)
class WrenchMaps:
    """Torque-independent decomposition G1, G2, G3 at one state."""

    G1: np.ndarray
    G2: np.ndarray
    G3: np.ndarray
    gamma_condition: float
    minv_jt: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    gamma_solve: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False, compare=False)

    def wrenches(self, tau_h: np.ndarray, tau_r: np.ndarray) -> np.ndarray:
        return self.G1 @ tau_h + self.G2 @ tau_r + self.G3

    def correct(self, terms: CoupledTerms, V_dot: np.ndarray, f_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        One refinement pass on the constraint residual r = J V_dot + J_dot V - b.

        delta = -Gamma^-1 r is added to the wrenches and M^-1 J^T delta to V_dot.
        """
        if self.gamma_solve is None or not f_star.size:
            return V_dot, f_star
        residual = terms.J @ V_dot + terms.J_dot @ terms.V - terms.rhs
        delta = -self.gamma_solve(residual)
        return V_dot + self.minv_jt @ delta, f_star + delta


def _gamma_solve(gamma: np.ndarray, system: CoupledSystem):
    """Return (solve, condition) for Gamma, guarding against singular contact sets."""
    settings = get_settings()
    condition = float(np.linalg.cond(gamma))
    if not np.isfinite(condition) or condition > settings.gamma_condition_limit:
        raise SingularContactException(
            f"Contact operator is singular (condition {condition:.3e})",
            details={"condition": condition, "contacts": system.contacts.labels},
        )
    try:
        factor = cho_factor(gamma)
        return (lambda rhs: cho_solve(factor, rhs)), condition
    except LinAlgError:
        dim = gamma.shape[0]
        damping = settings.gamma_damping_ratio * float(np.trace(gamma)) / dim
        damped = gamma.T @ gamma + damping**2 * np.eye(dim)
        logger.warning(
            "wrench_resolution_fallback",
            condition=condition,
            damping=damping,
            contacts=system.contacts.labels,
        )
        return (lambda rhs: np.linalg.solve(damped, gamma.T @ rhs)), condition


def wrench_maps(terms: CoupledTerms) -> WrenchMaps:
    """
    Compute G1, G2, G3 at the state held by ``terms``.

    Raises:
        SingularContactException: If Gamma exceeds the configured condition limit
    """
    system = terms.system
    n_h, n_r = system.n_h, system.n_r
    if system.n_w == 0:
        return WrenchMaps(np.zeros((0, n_h)), np.zeros((0, n_r)), np.zeros(0), 1.0)

    minv_jt = terms.solve_mass(terms.J.T)
    gamma = terms.J @ minv_jt
    gamma = 0.5 * (gamma + gamma.T)
    solve, condition = _gamma_solve(gamma, system)

    # J M^-1 B is the transpose of the joint rows of M^-1 J^T.
    human_joints = slice(6, system.human.nv)
    robot_joints = slice(system.human.nv + 6, system.N)
    jminv_bh = minv_jt[human_joints].T
    jminv_br = minv_jt[robot_joints].T
    jminv_h = minv_jt.T @ terms.h

    G1 = -solve(jminv_bh)
    G2 = -solve(jminv_br)
    G3 = solve(terms.rhs + jminv_h - terms.J_dot @ terms.V)
    return WrenchMaps(G1, G2, G3, condition, minv_jt, solve)


def agent_wrench_terms(
    system: CoupledSystem, solution: WrenchSolution | WrenchMaps, agent: Agent
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rows of (G1, G2, G3) for the wrenches acting on one agent.

    The selection is [mutual; own env contacts], with the mutual block negated for
    the robot. The result pairs with ``system.agent_contact_jacobian(agent, ...)``.
    """
    rows, signs = system.agent_rows(agent)
    return (
        signs[:, None] * solution.G1[rows],
        signs[:, None] * solution.G2[rows],
        signs * solution.G3[rows],
    )


def robot_wrench_terms(
    system: CoupledSystem, solution: WrenchSolution | WrenchMaps
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Robot-side (Gbar1, Gbar2, Gbar3): robot wrenches = Gbar1 tau_H + Gbar2 tau_R + Gbar3."""
    return agent_wrench_terms(system, solution, Agent.ROBOT)


def solution_from_maps(
    system: CoupledSystem, maps: WrenchMaps, tau_h: np.ndarray, tau_r: np.ndarray
) -> WrenchSolution:
    gbar1, gbar2, gbar3 = robot_wrench_terms(system, maps)
    return WrenchSolution(
        f_star=maps.wrenches(np.asarray(tau_h, dtype=float), np.asarray(tau_r, dtype=float)),
        G1=maps.G1,
        G2=maps.G2,
        G3=maps.G3,
        Gbar1=gbar1,
        Gbar2=gbar2,
        Gbar3=gbar3,
        labels=tuple(system.contacts.labels),
        gamma_condition=maps.gamma_condition,
    )


def resolve_wrenches(
    system: CoupledSystem,
    states: SystemState,
    tau_h: np.ndarray,
    tau_r: np.ndarray,
    terms: Optional[CoupledTerms] = None,
) -> WrenchSolution:
    """
    Resolve every contact wrench for given joint torques.

    Args:
        system: Composite system
        states: Both agents' states
        tau_h: Human joint torques
        tau_r: Robot joint torques
        terms: Precomputed terms (carrying a stabilization right-hand side); built
            without stabilization when omitted

    Returns:
        WrenchSolution

    Raises:
        SingularContactException: If the contact operator is ill-conditioned
    """
    terms = terms or coupled_terms(system, states)
    return solution_from_maps(system, wrench_maps(terms), tau_h, tau_r)


def composite_accelerations(
    terms: CoupledTerms, tau_h: np.ndarray, tau_r: np.ndarray, f_star: np.ndarray
) -> np.ndarray:
    """V_dot = M^-1 (B tau + J^T f_star - h)."""
    system = terms.system
    generalized = -terms.h
    generalized[6 : system.human.nv] += tau_h
    generalized[system.human.nv + 6 :] += tau_r
    if f_star.size:
        generalized += terms.J.T @ f_star
    return terms.solve_mass(generalized)


def constraint_residual(terms: CoupledTerms, V_dot: np.ndarray) -> float:
    """Infinity norm of J V_dot + J_dot V - b."""
    if terms.J.shape[0] == 0:
        return 0.0
    residual = terms.J @ V_dot + terms.J_dot @ terms.V - terms.rhs
    return float(np.max(np.abs(residual)))


def project_velocity(terms: CoupledTerms) -> np.ndarray:
    """
    Impulsive projection V+ = V - M^-1 J^T Gamma^-1 J V.

    Returns the velocity closest to V in the kinetic-energy metric that satisfies
    every active constraint.
    """
    if terms.J.shape[0] == 0:
        return terms.V.copy()
    minv_jt = terms.solve_mass(terms.J.T)
    gamma = terms.J @ minv_jt
    solve, _ = _gamma_solve(0.5 * (gamma + gamma.T), terms.system)
    impulse = solve(terms.J @ terms.V)
    return terms.V - minv_jt @ impulse
