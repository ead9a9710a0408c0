"""
Composite two-agent system.

The composite velocity is V = [nu_H; nu_R] with N = n_H + n_R + 12. Every declared
contact is a rigid 6-DoF weld, giving one wrench slot per contact. Slots are kept
in wrench order: [mutual; human-env...; robot-env...]. The mutual slot carries the
wrench the robot applies on the human; the robot receives its negative.

Constraint rows (Q, P) use the block order [human-env...; robot-env...; mutual].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from app.dynamics.multibody import (
    AgentState,
    Kinematics,
    MultibodyModel,
    integrate_configuration,
)
from app.dynamics.spatial import Transform, compose, rotation_log
from app.utils.exceptions import ContactSpecException, UnknownFrameException
from app.utils.logging import get_logger
from app.utils.settings import get_settings

logger = get_logger(__name__)


class Agent(str, Enum):
    HUMAN = "human"
    ROBOT = "robot"


class SlotKind(str, Enum):
    MUTUAL = "mutual"
    HUMAN_ENV = "human_env"
    ROBOT_ENV = "robot_env"


@dataclass(frozen=True)
class WrenchSlot:
    """One rigid contact and the frames it binds."""

    kind: SlotKind
    human_frame: Optional[str] = None
    robot_frame: Optional[str] = None

    @property
    def label(self) -> str:
        if self.kind is SlotKind.MUTUAL:
            return f"mutual[{self.human_frame}|{self.robot_frame}]"
        if self.kind is SlotKind.HUMAN_ENV:
            return f"human[{self.human_frame}]"
        return f"robot[{self.robot_frame}]"

    @property
    def anchor_key(self) -> tuple[str, str]:
        if self.kind is SlotKind.HUMAN_ENV:
            return (Agent.HUMAN.value, self.human_frame or "")
        if self.kind is SlotKind.ROBOT_ENV:
            return (Agent.ROBOT.value, self.robot_frame or "")
        return ("mutual", f"{self.human_frame}|{self.robot_frame}")


@dataclass(frozen=True)
class ContactSpec:
    """Environment contacts of each agent plus the optional human-robot grasp."""

    env_contacts_human: tuple[str, ...] = ()
    env_contacts_robot: tuple[str, ...] = ()
    mutual: Optional[tuple[str, str]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "env_contacts_human", tuple(self.env_contacts_human))
        object.__setattr__(self, "env_contacts_robot", tuple(self.env_contacts_robot))
        if self.mutual is not None:
            object.__setattr__(self, "mutual", tuple(self.mutual))

    @property
    def slots(self) -> tuple[WrenchSlot, ...]:
        """Wrench slots in wrench order."""
        slots = []
        if self.mutual is not None:
            slots.append(WrenchSlot(SlotKind.MUTUAL, self.mutual[0], self.mutual[1]))
        slots.extend(WrenchSlot(SlotKind.HUMAN_ENV, human_frame=f) for f in self.env_contacts_human)
        slots.extend(WrenchSlot(SlotKind.ROBOT_ENV, robot_frame=f) for f in self.env_contacts_robot)
        return tuple(slots)

    @property
    def labels(self) -> list[str]:
        return [slot.label for slot in self.slots]


Anchors = dict[tuple[str, str], Transform]


@dataclass(frozen=True)
class SystemState:
    """States of both agents."""

    human: AgentState
    robot: AgentState

    @property
    def V(self) -> np.ndarray:
        return np.concatenate([self.human.nu, self.robot.nu])

    def agent(self, agent: Agent) -> AgentState:
        return self.human if agent is Agent.HUMAN else self.robot

    def with_velocity(self, V: np.ndarray) -> SystemState:
        nh = self.human.nu.shape[0]
        return SystemState(self.human.with_velocity(V[:nh]), self.robot.with_velocity(V[nh:]))

    def advanced(self, dt: float) -> SystemState:
        """Configuration advanced by dt at constant velocity."""
        return SystemState(integrate_configuration(self.human, dt), integrate_configuration(self.robot, dt))


@dataclass(frozen=True)
class SystemKinematics:
    human: Kinematics
    robot: Kinematics

    @classmethod
    def of(cls, system: CoupledSystem, states: SystemState) -> SystemKinematics:
        return cls(Kinematics(system.human, states.human), Kinematics(system.robot, states.robot))


@dataclass(frozen=True)
class ConstraintMatrices:
    """P V + Q V_dot = 0 in the row order [human-env; robot-env; mutual]."""

    P: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True)
class CoupledSystem:
    """Two agents plus the active contact specification."""

    human: MultibodyModel
    robot: MultibodyModel
    contacts: ContactSpec
    slots: tuple[WrenchSlot, ...] = field(init=False, compare=False)
    q_rows: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        slots = self.contacts.slots
        object.__setattr__(self, "slots", slots)
        order = (
            [i for i, s in enumerate(slots) if s.kind is SlotKind.HUMAN_ENV]
            + [i for i, s in enumerate(slots) if s.kind is SlotKind.ROBOT_ENV]
            + [i for i, s in enumerate(slots) if s.kind is SlotKind.MUTUAL]
        )
        rows = np.array([6 * i + r for i in order for r in range(6)], dtype=int)
        object.__setattr__(self, "q_rows", rows)

    @property
    def n_h(self) -> int:
        return self.human.n

    @property
    def n_r(self) -> int:
        return self.robot.n

    @property
    def N(self) -> int:
        return self.human.nv + self.robot.nv

    @property
    def n_w(self) -> int:
        return len(self.slots)

    @property
    def human_slice(self) -> slice:
        return slice(0, self.human.nv)

    @property
    def robot_slice(self) -> slice:
        return slice(self.human.nv, self.N)

    def with_contacts(self, contacts: ContactSpec) -> CoupledSystem:
        return assemble(self.human, self.robot, contacts)

    def selection_matrix(self) -> np.ndarray:
        """B mapping [tau_H; tau_R] into the composite joint rows."""
        out = np.zeros((self.N, self.n_h + self.n_r))
        out[6 : self.human.nv, : self.n_h] = np.eye(self.n_h)
        out[self.human.nv + 6 :, self.n_h :] = np.eye(self.n_r)
        return out

    def wrench_jacobian(self, states: SystemState, kin: Optional[SystemKinematics] = None) -> np.ndarray:
        """
        Stacked contact Jacobian in wrench order.

        Mutual rows are [J_H, -J_R]; environment rows carry one agent's frame Jacobian.
        Its transpose maps f_star into composite generalized forces.
        """
        kin = kin or SystemKinematics.of(self, states)
        out = np.zeros((6 * self.n_w, self.N))
        for i, slot in enumerate(self.slots):
            rows = slice(6 * i, 6 * i + 6)
            if slot.human_frame is not None:
                out[rows, self.human_slice] = _frame_jacobian(self.human, kin.human, slot.human_frame)
            if slot.robot_frame is not None:
                jac = _frame_jacobian(self.robot, kin.robot, slot.robot_frame)
                out[rows, self.robot_slice] = -jac if slot.kind is SlotKind.MUTUAL else jac
        return out

    def agent_contact_jacobian(
        self, agent: Agent, states: SystemState, kin: Optional[SystemKinematics] = None
    ) -> np.ndarray:
        """
        Jacobian of one agent's own contact frames, ordered [mutual; own env contacts].

        Its transpose maps the agent-side wrenches from agent_wrench_terms into that
        agent's generalized forces.
        """
        kin = kin or SystemKinematics.of(self, states)
        model = self.human if agent is Agent.HUMAN else self.robot
        agent_kin = kin.human if agent is Agent.HUMAN else kin.robot
        blocks = []
        for slot in self.agent_slots(agent):
            frame = slot.human_frame if agent is Agent.HUMAN else slot.robot_frame
            blocks.append(_frame_jacobian(model, agent_kin, frame))
        if not blocks:
            return np.zeros((0, model.nv))
        return np.vstack(blocks)

    def agent_slots(self, agent: Agent) -> list[WrenchSlot]:
        own = SlotKind.HUMAN_ENV if agent is Agent.HUMAN else SlotKind.ROBOT_ENV
        return [s for s in self.slots if s.kind is SlotKind.MUTUAL] + [
            s for s in self.slots if s.kind is own
        ]

    def agent_rows(self, agent: Agent) -> tuple[np.ndarray, np.ndarray]:
        """Rows of f_star entering an agent's dynamics and their signs."""
        own = SlotKind.HUMAN_ENV if agent is Agent.HUMAN else SlotKind.ROBOT_ENV
        rows: list[int] = []
        signs: list[float] = []
        for kind, sign in ((SlotKind.MUTUAL, 1.0 if agent is Agent.HUMAN else -1.0), (own, 1.0)):
            for i, slot in enumerate(self.slots):
                if slot.kind is kind:
                    rows.extend(range(6 * i, 6 * i + 6))
                    signs.extend([sign] * 6)
        return np.array(rows, dtype=int), np.array(signs)

    def constraint_position_errors(
        self, states: SystemState, anchors: Optional[Anchors] = None, kin: Optional[SystemKinematics] = None
    ) -> np.ndarray:
        """
        Pose errors of every constraint in wrench order.

        Environment rows compare a frame with its anchor; the mutual row compares the
        two grasp frames. Contacts without an anchor report zero error.
        """
        kin = kin or SystemKinematics.of(self, states)
        anchors = anchors or {}
        out = np.zeros(6 * self.n_w)
        for i, slot in enumerate(self.slots):
            if slot.kind is SlotKind.MUTUAL:
                a = kin.human.frame_pose(slot.human_frame)
                b = kin.robot.frame_pose(slot.robot_frame)
            else:
                key = slot.anchor_key
                if key not in anchors:
                    continue
                agent_kin = kin.human if slot.kind is SlotKind.HUMAN_ENV else kin.robot
                frame = slot.human_frame if slot.kind is SlotKind.HUMAN_ENV else slot.robot_frame
                a = agent_kin.frame_pose(frame)
                b = anchors[key]
            out[6 * i : 6 * i + 3] = a.translation - b.translation
            out[6 * i + 3 : 6 * i + 6] = rotation_log(a.rotation @ b.rotation.T)
        return out

    def frame_pose(self, agent: Agent, frame: str, states: SystemState) -> Transform:
        model = self.human if agent is Agent.HUMAN else self.robot
        return Kinematics(model, states.agent(agent)).frame_pose(frame)


def _frame_jacobian(model: MultibodyModel, kin: Kinematics, frame: str) -> np.ndarray:
    link_index, _ = model.frame(frame)
    return kin.point_jacobian(link_index, kin.frame_pose(frame).translation)


def assemble(human: MultibodyModel, robot: MultibodyModel, contacts: ContactSpec) -> CoupledSystem:
    """
    Build the composite system for a contact specification.

    Raises:
        UnknownFrameException: If a contact names a frame missing on its agent
        ContactSpecException: If a frame is used by more than one contact of an agent
    """
    human_frames = list(contacts.env_contacts_human)
    robot_frames = list(contacts.env_contacts_robot)
    if contacts.mutual is not None:
        if len(contacts.mutual) != 2:
            raise ContactSpecException(
                "Mutual contact must name a (human frame, robot frame) pair",
                details={"mutual": list(contacts.mutual)},
            )
        human_frames.append(contacts.mutual[0])
        robot_frames.append(contacts.mutual[1])

    for model, frames in ((human, human_frames), (robot, robot_frames)):
        for frame in frames:
            if not model.has_frame(frame):
                raise UnknownFrameException(
                    f"Contact frame '{frame}' not found on model '{model.name}'",
                    details={"model": model.name, "frame": frame},
                )
        duplicates = sorted({f for f in frames if frames.count(f) > 1})
        if duplicates:
            raise ContactSpecException(
                f"Duplicate contact on model '{model.name}': {duplicates}",
                details={"model": model.name, "frames": duplicates},
            )

    system = CoupledSystem(human, robot, contacts)
    logger.debug("coupled_system_assembled", N=system.N, n_w=system.n_w, contacts=contacts.labels)
    return system


def fd_step(V: np.ndarray) -> float:
    """Central-difference step scaled by the velocity norm."""
    return get_settings().fd_step / max(1.0, float(np.linalg.norm(V)))


def wrench_jacobian_rate(
    system: CoupledSystem, states: SystemState, step: Optional[float] = None
) -> np.ndarray:
    """d/dt of the wrench-order Jacobian along the current velocity (central difference)."""
    if system.n_w == 0:
        return np.zeros((0, system.N))
    eps = step if step is not None else fd_step(states.V)
    forward = system.wrench_jacobian(states.advanced(eps))
    backward = system.wrench_jacobian(states.advanced(-eps))
    return (forward - backward) / (2.0 * eps)


def constraint_matrices(
    system: CoupledSystem, state_h: AgentState, state_r: AgentState, step: Optional[float] = None
) -> ConstraintMatrices:
    """
    Constraint Jacobian Q and its time derivative P.

    Args:
        system: Composite system
        state_h: Human state
        state_r: Robot state
        step: Optional finite-difference step (defaults to fd_step / max(1, |V|))

    Returns:
        ConstraintMatrices with rows [human-env; robot-env; mutual]
    """
    states = SystemState(state_h, state_r)
    jac = system.wrench_jacobian(states)
    rate = wrench_jacobian_rate(system, states, step)
    return ConstraintMatrices(P=rate[system.q_rows], Q=jac[system.q_rows])


def record_anchors(system: CoupledSystem, states: SystemState, anchors: Optional[Anchors] = None) -> Anchors:
    """
    Anchors for the active environment contacts.

    Existing anchors are kept; newly active contacts are welded where their frame is now.
    Anchors of inactive contacts are dropped.
    """
    anchors = anchors or {}
    kin = SystemKinematics.of(system, states)
    result: Anchors = {}
    for slot in system.slots:
        if slot.kind is SlotKind.MUTUAL:
            continue
        key = slot.anchor_key
        if key in anchors:
            result[key] = anchors[key]
        elif slot.kind is SlotKind.HUMAN_ENV:
            result[key] = kin.human.frame_pose(slot.human_frame)
        else:
            result[key] = kin.robot.frame_pose(slot.robot_frame)
    return result


def align_partner(
    human: MultibodyModel,
    robot: MultibodyModel,
    state_h: AgentState,
    state_r: AgentState,
    mutual: tuple[str, str],
) -> AgentState:
    """
    Move the human floating base so that the two grasp frames coincide.

    Joint positions and velocities of the human are kept.
    """
    human_frame, robot_frame = mutual
    target = Kinematics(robot, state_r).frame_pose(robot_frame)
    current = Kinematics(human, state_h).frame_pose(human_frame)
    base_to_frame = compose(state_h.base_pose.inverse(), current)
    base = compose(target, base_to_frame.inverse())
    return state_h.with_configuration(base, state_h.s)
