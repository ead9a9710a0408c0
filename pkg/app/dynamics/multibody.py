"""
Floating-base kinematic trees.

Generalized velocities use the mixed representation: nu = [base_vel; s_dot] where
base_vel = [p_dot_B; omega_B] is the base-origin velocity and angular velocity,
both in world axes. A frame Jacobian therefore has the base block
[[I, -hat(p_f - p_B)], [0, I]].

Dynamics follow M(q) nu_dot + h(q, nu) = B tau + sum_k J_k^T f_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from app.dynamics.spatial import (
    Transform,
    SpatialInertia,
    compose,
    hat,
    orthonormalize,
    rotation_about,
)
from app.utils.exceptions import ModelValidationException, UnknownFrameException

DEFAULT_GRAVITY = (0.0, 0.0, -9.81)


class JointKind(str, Enum):
    """Supported joint types."""

    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"
    FIXED = "fixed"


@dataclass(frozen=True)
class JointModel:
    """
    Joint connecting a link to its parent; axis is given in the joint frame.

    armature is the reflected rotor inertia added to the joint diagonal of M.
    """

    kind: JointKind
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    origin: Transform = field(default_factory=Transform.identity)
    armature: float = 0.0

    def __post_init__(self) -> None:
        if self.armature < 0:
            raise ModelValidationException("Joint armature must be non-negative", details={"armature": self.armature})
        axis = np.array(self.axis, dtype=float).reshape(3)
        axis.setflags(write=False)
        object.__setattr__(self, "kind", JointKind(self.kind))
        object.__setattr__(self, "axis", axis)

    @property
    def is_actuated(self) -> bool:
        return self.kind is not JointKind.FIXED

    def motion(self, q: float) -> Transform:
        """Joint-frame to child-link transform at joint coordinate q."""
        if self.kind is JointKind.REVOLUTE:
            return Transform(rotation_about(self.axis, q), np.zeros(3))
        if self.kind is JointKind.PRISMATIC:
            return Transform(np.eye(3), self.axis * q)
        return Transform.identity()


@dataclass(frozen=True)
class Link:
    """A rigid body of the tree with its inbound joint and attachment frames."""

    name: str
    parent: Optional[int]
    joint: JointModel
    inertia: SpatialInertia
    frames: dict[str, Transform] = field(default_factory=dict)


class MultibodyModel:
    """
    Topologically sorted floating-base tree.

    Frames are looked up by name: every link name is a frame at the link origin,
    and every attachment frame declared on a link is one too.
    """

    def __init__(
        self,
        name: str,
        links: list[Link],
        gravity: tuple[float, float, float] | np.ndarray = DEFAULT_GRAVITY,
    ):
        self.name = name
        self.links: tuple[Link, ...] = tuple(links)
        self.gravity = np.array(gravity, dtype=float).reshape(3)
        self.gravity.setflags(write=False)
        self._validate()

        dof_index: list[Optional[int]] = []
        count = 0
        for i, link in enumerate(self.links):
            if link.parent is not None and link.joint.is_actuated:
                dof_index.append(count)
                count += 1
            else:
                dof_index.append(None)
        self.dof_index: tuple[Optional[int], ...] = tuple(dof_index)
        self.n = count
        self.joint_names: tuple[str, ...] = tuple(
            link.name for link, k in zip(self.links, dof_index) if k is not None
        )
        self.dof_kinds: tuple[JointKind, ...] = tuple(
            link.joint.kind for link, k in zip(self.links, dof_index) if k is not None
        )

        support: list[tuple[int, ...]] = []
        for i, link in enumerate(self.links):
            inherited = support[link.parent] if link.parent is not None else ()
            own = (dof_index[i],) if dof_index[i] is not None else ()
            support.append(inherited + own)
        self.support: tuple[tuple[int, ...], ...] = tuple(support)

        frames: dict[str, tuple[int, Transform]] = {}
        for i, link in enumerate(self.links):
            frames[link.name] = (i, Transform.identity())
        for i, link in enumerate(self.links):
            for frame_name, offset in link.frames.items():
                if frame_name in frames:
                    raise ModelValidationException(
                        f"Frame name '{frame_name}' on link '{link.name}' is not unique",
                        details={"link": link.name, "frame": frame_name},
                    )
                frames[frame_name] = (i, offset)
        self._frames = frames

    def _validate(self) -> None:
        if not self.links:
            raise ModelValidationException(f"Model '{self.name}' has no links")
        names = [link.name for link in self.links]
        if len(set(names)) != len(names):
            duplicate = next(n for n in names if names.count(n) > 1)
            raise ModelValidationException(
                f"Duplicate link name '{duplicate}'", details={"link": duplicate}
            )
        if self.links[0].parent is not None:
            raise ModelValidationException(
                f"First link '{self.links[0].name}' must be the base", details={"link": self.links[0].name}
            )
        for i, link in enumerate(self.links):
            if i > 0 and (link.parent is None or not 0 <= link.parent < i):
                raise ModelValidationException(
                    f"Link '{link.name}' must have a parent listed before it",
                    details={"link": link.name},
                )
            joint = link.joint
            if i > 0 and joint.is_actuated and abs(np.linalg.norm(joint.axis) - 1.0) > 1e-9:
                raise ModelValidationException(
                    f"Joint of link '{link.name}' has a non-unit axis",
                    details={"link": link.name, "axis": joint.axis.tolist()},
                )
            problems = link.inertia.violations()
            if problems:
                raise ModelValidationException(
                    f"Link '{link.name}' has invalid inertia: {problems[0]}",
                    details={"link": link.name, "problems": problems},
                )
        if not np.all(np.isfinite(self.gravity)):
            raise ModelValidationException("Gravity must be finite", details={"model": self.name})

    @property
    def nv(self) -> int:
        """Generalized velocity dimension (n + 6)."""
        return self.n + 6

    @cached_property
    def total_mass(self) -> float:
        return float(sum(link.inertia.mass for link in self.links))

    @cached_property
    def armature(self) -> np.ndarray:
        """Rotor inertia of every joint, in s order."""
        return np.array([link.joint.armature for link, k in zip(self.links, self.dof_index) if k is not None])

    def frame(self, name: str) -> tuple[int, Transform]:
        """Return (link index, offset) of a named frame."""
        try:
            return self._frames[name]
        except KeyError:
            raise UnknownFrameException(
                f"Unknown frame '{name}' on model '{self.name}'",
                details={"model": self.name, "frame": name},
            ) from None

    def has_frame(self, name: str) -> bool:
        return name in self._frames

    @property
    def frame_names(self) -> list[str]:
        return list(self._frames)

    def link_index(self, name: str) -> int:
        for i, link in enumerate(self.links):
            if link.name == name:
                return i
        raise UnknownFrameException(
            f"Unknown link '{name}' on model '{self.name}'",
            details={"model": self.name, "link": name},
        )

    def joint_position_index(self, name: str) -> int:
        """Index into s of the joint driving link ``name``."""
        k = self.dof_index[self.link_index(name)]
        if k is None:
            raise ModelValidationException(
                f"Link '{name}' is not driven by a movable joint", details={"link": name}
            )
        return k

    def with_joints(self, joints: dict[int, JointModel]) -> MultibodyModel:
        """Copy of the model with the inbound joints of some links replaced."""
        links = [
            Link(link.name, link.parent, joints.get(i, link.joint), link.inertia, dict(link.frames))
            for i, link in enumerate(self.links)
        ]
        return MultibodyModel(self.name, links, self.gravity)

    def zero_state(self) -> AgentState:
        return AgentState(np.zeros(3), np.eye(3), np.zeros(self.n), np.zeros(6), np.zeros(self.n))

    def selection_matrix(self) -> np.ndarray:
        """B = [0; I]: joint torques enter only the joint rows."""
        out = np.zeros((self.nv, self.n))
        out[6:, :] = np.eye(self.n)
        return out


@dataclass(frozen=True)
class AgentState:
    """Floating-base configuration and mixed-representation velocity."""

    base_pos: np.ndarray
    base_rot: np.ndarray
    s: np.ndarray
    base_vel: np.ndarray
    s_dot: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_pos", np.array(self.base_pos, dtype=float).reshape(3))
        object.__setattr__(self, "base_rot", np.array(self.base_rot, dtype=float).reshape(3, 3))
        object.__setattr__(self, "s", np.array(self.s, dtype=float).reshape(-1))
        object.__setattr__(self, "base_vel", np.array(self.base_vel, dtype=float).reshape(6))
        object.__setattr__(self, "s_dot", np.array(self.s_dot, dtype=float).reshape(-1))
        if self.s.shape != self.s_dot.shape:
            raise ModelValidationException(
                "Joint position and velocity dimensions differ",
                details={"s": self.s.shape[0], "s_dot": self.s_dot.shape[0]},
            )

    @property
    def nu(self) -> np.ndarray:
        return np.concatenate([self.base_vel, self.s_dot])

    @property
    def base_pose(self) -> Transform:
        return Transform(self.base_rot, self.base_pos)

    def with_velocity(self, nu: np.ndarray) -> AgentState:
        nu = np.asarray(nu, dtype=float)
        return AgentState(self.base_pos, self.base_rot, self.s, nu[:6], nu[6:])

    def with_configuration(self, base_pose: Transform, s: np.ndarray) -> AgentState:
        return AgentState(base_pose.translation, base_pose.rotation, s, self.base_vel, self.s_dot)


def check_state(model: MultibodyModel, state: AgentState) -> None:
    """
    Raise if a state does not fit a model.

    Raises:
        ModelValidationException: On dimension mismatch, a non-rotation base or non-finite values
    """
    if state.s.shape[0] != model.n:
        raise ModelValidationException(
            f"State of '{model.name}' has {state.s.shape[0]} joints, model has {model.n}",
            details={"model": model.name},
        )
    if abs(np.linalg.det(state.base_rot) - 1.0) > 1e-9 or not np.allclose(
        state.base_rot.T @ state.base_rot, np.eye(3), atol=1e-9
    ):
        raise ModelValidationException(
            f"Base rotation of '{model.name}' is not in SO(3)", details={"model": model.name}
        )
    if not all(np.all(np.isfinite(v)) for v in (state.base_pos, state.s, state.base_vel, state.s_dot)):
        raise ModelValidationException(f"State of '{model.name}' is not finite", details={"model": model.name})


def integrate_configuration(state: AgentState, dt: float) -> AgentState:
    """Advance the configuration by dt at constant velocity (base rotation by exponential map)."""
    omega = state.base_vel[3:]
    step = Rotation.from_rotvec(omega * dt).as_matrix()
    rotation = orthonormalize(step @ state.base_rot)
    return AgentState(
        state.base_pos + dt * state.base_vel[:3],
        rotation,
        state.s + dt * state.s_dot,
        state.base_vel,
        state.s_dot,
    )


class Kinematics:
    """World poses, joint axes and com Jacobians of one (model, state) pair."""

    def __init__(self, model: MultibodyModel, state: AgentState):
        self.model = model
        self.state = state
        n = model.n
        poses: list[Transform] = []
        joint_frames: list[Optional[Transform]] = []
        axes = np.zeros((n, 3))
        origins = np.zeros((n, 3))
        base = Transform(state.base_rot, state.base_pos)
        for i, link in enumerate(model.links):
            if link.parent is None:
                poses.append(base)
                joint_frames.append(None)
                continue
            joint_frame = compose(poses[link.parent], link.joint.origin)
            joint_frames.append(joint_frame)
            k = model.dof_index[i]
            if k is None:
                poses.append(joint_frame)
                continue
            axes[k] = joint_frame.rotation @ link.joint.axis
            origins[k] = joint_frame.translation
            poses.append(compose(joint_frame, link.joint.motion(state.s[k])))
        self.poses: tuple[Transform, ...] = tuple(poses)
        self.joint_frames = tuple(joint_frames)
        self.axes = axes
        self.origins = origins

    @cached_property
    def com_positions(self) -> np.ndarray:
        return np.array(
            [pose.apply(link.inertia.com) for pose, link in zip(self.poses, self.model.links)]
        )

    @cached_property
    def world_inertias(self) -> tuple[np.ndarray, ...]:
        return tuple(
            link.inertia.rotated_inertia(pose.rotation)
            for pose, link in zip(self.poses, self.model.links)
        )

    @cached_property
    def com_jacobians(self) -> tuple[np.ndarray, ...]:
        return tuple(
            self.point_jacobian(i, self.com_positions[i]) for i in range(len(self.model.links))
        )

    @cached_property
    def center_of_mass(self) -> np.ndarray:
        masses = np.array([link.inertia.mass for link in self.model.links])
        return masses @ self.com_positions / masses.sum()

    def frame_pose(self, name: str) -> Transform:
        link_index, offset = self.model.frame(name)
        return compose(self.poses[link_index], offset)

    def point_jacobian(self, link_index: int, point: np.ndarray) -> np.ndarray:
        """Jacobian of [velocity of ``point`` fixed on the link; link angular velocity]."""
        model = self.model
        jac = np.zeros((6, model.nv))
        jac[:3, :3] = np.eye(3)
        jac[:3, 3:6] = -hat(point - self.state.base_pos)
        jac[3:, 3:6] = np.eye(3)
        for k in model.support[link_index]:
            kind = model.dof_kinds[k]
            axis = self.axes[k]
            if kind is JointKind.REVOLUTE:
                jac[:3, 6 + k] = np.cross(axis, point - self.origins[k])
                jac[3:, 6 + k] = axis
            else:
                jac[:3, 6 + k] = axis
        return jac


def kinematics(model: MultibodyModel, state: AgentState) -> Kinematics:
    return Kinematics(model, state)


def forward_kinematics(model: MultibodyModel, state: AgentState) -> list[Transform]:
    """World pose of every link, in model order."""
    return list(Kinematics(model, state).poses)


def frame_jacobian(
    model: MultibodyModel, state: AgentState, frame: str, kin: Optional[Kinematics] = None
) -> np.ndarray:
    """
    6x(n+6) Jacobian mapping nu to the world twist of a named frame.

    Args:
        model: Multibody model
        state: Agent state
        frame: Frame name (attachment frame or link name)
        kin: Optional precomputed kinematics for this state

    Returns:
        Jacobian whose product with nu is [frame origin velocity; angular velocity]

    Raises:
        UnknownFrameException: If the frame does not exist
    """
    kin = kin or Kinematics(model, state)
    link_index, _ = model.frame(frame)
    pose = kin.frame_pose(frame)
    return kin.point_jacobian(link_index, pose.translation)


def mass_matrix(model: MultibodyModel, state: AgentState, kin: Optional[Kinematics] = None) -> np.ndarray:
    """Sum of J_c^T diag(m I, I_world) J_c over links, plus joint armature on the diagonal."""
    kin = kin or Kinematics(model, state)
    out = np.zeros((model.nv, model.nv))
    for i, link in enumerate(model.links):
        jac = kin.com_jacobians[i]
        lin, ang = jac[:3], jac[3:]
        out += link.inertia.mass * lin.T @ lin + ang.T @ kin.world_inertias[i] @ ang
    out[6:, 6:] += np.diag(model.armature)
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class LinkMotion:
    """World-axis velocities and accelerations of every link origin."""

    omega: np.ndarray
    velocity: np.ndarray
    alpha: np.ndarray
    acceleration: np.ndarray


def link_motion(
    model: MultibodyModel,
    state: AgentState,
    nu_dot: Optional[np.ndarray] = None,
    kin: Optional[Kinematics] = None,
) -> LinkMotion:
    """
    Recursive velocity/acceleration sweep from the base outwards.

    With nu_dot omitted the accelerations are the velocity-product terms J_dot nu.
    """
    kin = kin or Kinematics(model, state)
    count = len(model.links)
    omega = np.zeros((count, 3))
    velocity = np.zeros((count, 3))
    alpha = np.zeros((count, 3))
    acceleration = np.zeros((count, 3))
    nu_dot = np.zeros(model.nv) if nu_dot is None else np.asarray(nu_dot, dtype=float)
    s_dot = state.s_dot
    s_ddot = nu_dot[6:]
    positions = [pose.translation for pose in kin.poses]

    for i, link in enumerate(model.links):
        if link.parent is None:
            omega[i] = state.base_vel[3:]
            velocity[i] = state.base_vel[:3]
            alpha[i] = nu_dot[3:6]
            acceleration[i] = nu_dot[:3]
            continue
        p = link.parent
        w, a_ang = omega[p], alpha[p]
        r = positions[i] - positions[p]
        w_cross_r = np.cross(w, r)
        omega[i] = w
        velocity[i] = velocity[p] + w_cross_r
        alpha[i] = a_ang
        acceleration[i] = acceleration[p] + np.cross(a_ang, r) + np.cross(w, w_cross_r)
        k = model.dof_index[i]
        if k is None:
            continue
        axis = kin.axes[k]
        if link.joint.kind is JointKind.REVOLUTE:
            omega[i] = w + axis * s_dot[k]
            alpha[i] = a_ang + np.cross(w, axis) * s_dot[k] + axis * s_ddot[k]
        else:
            velocity[i] = velocity[i] + axis * s_dot[k]
            acceleration[i] = acceleration[i] + 2.0 * np.cross(w, axis) * s_dot[k] + axis * s_ddot[k]
    return LinkMotion(omega, velocity, alpha, acceleration)


def com_accelerations(model: MultibodyModel, kin: Kinematics, motion_: LinkMotion) -> np.ndarray:
    """Acceleration of every link com given a link sweep."""
    out = np.zeros((len(model.links), 3))
    for i in range(len(model.links)):
        d = kin.com_positions[i] - kin.poses[i].translation
        w = motion_.omega[i]
        out[i] = motion_.acceleration[i] + np.cross(motion_.alpha[i], d) + np.cross(w, np.cross(w, d))
    return out


def bias_forces(model: MultibodyModel, state: AgentState, kin: Optional[Kinematics] = None) -> np.ndarray:
    """
    Generalized bias h = C(q, nu) nu + G(q).

    Computed as sum_i J_ci^T [m_i (a_ci - g); I_i alpha_i + w_i x I_i w_i] with the
    link accelerations of a zero-acceleration sweep.
    """
    kin = kin or Kinematics(model, state)
    sweep = link_motion(model, state, kin=kin)
    acc = com_accelerations(model, kin, sweep)
    out = np.zeros(model.nv)
    for i, link in enumerate(model.links):
        jac = kin.com_jacobians[i]
        inertia = kin.world_inertias[i]
        w = sweep.omega[i]
        linear = link.inertia.mass * (acc[i] - model.gravity)
        angular = inertia @ sweep.alpha[i] + np.cross(w, inertia @ w)
        out += jac[:3].T @ linear + jac[3:].T @ angular
    return out


def gravity_forces(model: MultibodyModel, state: AgentState) -> np.ndarray:
    """G(q): the bias forces at zero velocity."""
    still = state.with_velocity(np.zeros(model.nv))
    return bias_forces(model, still)


def centroidal_momentum_matrix(
    model: MultibodyModel, state: AgentState, kin: Optional[Kinematics] = None
) -> np.ndarray:
    """6x(n+6) map from nu to [linear; angular] momentum about the com, world axes."""
    kin = kin or Kinematics(model, state)
    com = kin.center_of_mass
    out = np.zeros((6, model.nv))
    for i, link in enumerate(model.links):
        jac = kin.com_jacobians[i]
        m = link.inertia.mass
        lin = m * jac[:3]
        out[:3] += lin
        out[3:] += hat(kin.com_positions[i] - com) @ lin + kin.world_inertias[i] @ jac[3:]
    return out


def kinetic_energy(model: MultibodyModel, state: AgentState) -> float:
    """Sum of link energies 1/2 m |v_c|^2 + 1/2 w^T I w from a velocity sweep, plus rotor energy."""
    kin = Kinematics(model, state)
    sweep = link_motion(model, state, kin=kin)
    total = 0.0
    for i, link in enumerate(model.links):
        w = sweep.omega[i]
        v_c = sweep.velocity[i] + np.cross(w, kin.com_positions[i] - kin.poses[i].translation)
        total += 0.5 * link.inertia.mass * v_c @ v_c + 0.5 * w @ kin.world_inertias[i] @ w
    s_dot = state.s_dot
    return float(total + 0.5 * s_dot @ (model.armature * s_dot))


@dataclass(frozen=True)
class SupportedDynamics:
    """Joint torques that realize s_ddot on a supported body, with the support wrenches."""

    tau: np.ndarray
    base_acceleration: np.ndarray
    wrenches: np.ndarray


def supported_inverse_dynamics(
    model: MultibodyModel,
    state: AgentState,
    s_ddot: np.ndarray,
    jacobian: np.ndarray,
    bias: np.ndarray,
    M: Optional[np.ndarray] = None,
    h: Optional[np.ndarray] = None,
) -> SupportedDynamics:
    """
    Inverse dynamics of a floating base held by contact constraints.

    The base acceleration and the contact wrenches f solve

        J_b a_b = -(bias + J_s s_ddot)
        M_bb a_b - J_b^T f = -(M_bs s_ddot + h_b)

    in the least-squares sense, then tau = M_sb a_b + M_ss s_ddot + h_s - J_s^T f.
    With no rows the body floats and a_b follows from the base equations alone.

    Args:
        model: Multibody model
        state: Agent state
        s_ddot: Desired joint accelerations
        jacobian: kx(n+6) contact rows acting on this agent
        bias: Velocity-product and stabilization terms so that J nu_dot + bias = 0
        M: Optional precomputed mass matrix
        h: Optional precomputed bias forces

    Returns:
        SupportedDynamics with the joint torques
    """
    M = mass_matrix(model, state) if M is None else M
    h = bias_forces(model, state) if h is None else h
    s_ddot = np.asarray(s_ddot, dtype=float)
    jacobian = np.asarray(jacobian, dtype=float).reshape(-1, model.nv)
    k = jacobian.shape[0]
    J_b, J_s = jacobian[:, :6], jacobian[:, 6:]

    system = np.zeros((k + 6, 6 + k))
    system[:k, :6] = J_b
    system[k:, :6] = M[:6, :6]
    system[k:, 6:] = -J_b.T
    rhs = np.concatenate([-(np.asarray(bias, dtype=float) + J_s @ s_ddot), -(M[:6, 6:] @ s_ddot + h[:6])])
    solution = np.linalg.lstsq(system, rhs, rcond=None)[0]
    a_b, wrenches = solution[:6], solution[6:]
    tau = M[6:, :6] @ a_b + M[6:, 6:] @ s_ddot + h[6:] - J_s.T @ wrenches
    return SupportedDynamics(tau, a_b, wrenches)


def potential_energy(model: MultibodyModel, state: AgentState) -> float:
    kin = Kinematics(model, state)
    masses = np.array([link.inertia.mass for link in model.links])
    return float(-masses @ kin.com_positions @ model.gravity)


def center_of_mass(model: MultibodyModel, state: AgentState) -> np.ndarray:
    return Kinematics(model, state).center_of_mass
