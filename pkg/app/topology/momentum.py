"""
Momentum and net wrench of an observed articulated object.

Both are expressed in the inertial frame, about its origin, so that for the true
articulation the momentum rate equals the net wrench.
"""

from typing import Optional

import numpy as np

from app.dynamics.multibody import AgentState, Kinematics, MultibodyModel
from app.dynamics.spatial import Force6, Motion6, SpatialInertia, compose, transform_force
from app.topology.catalog import TopologyHypothesis
from app.topology.observations import ObjectObservation
from app.utils.exceptions import ObservationException, UnknownFrameException


def link_momentum(inertia: SpatialInertia, twist: Motion6) -> Force6:
    """Momentum [m v_com; angular about the link origin] of a body twist, link coordinates."""
    return inertia.matrix() @ np.asarray(twist, dtype=float)


def hypothesis_state(
    model: MultibodyModel, hypothesis: TopologyHypothesis, observation: ObjectObservation
) -> AgentState:
    """
    Object state under a hypothesis, taking each joint's coordinate from its chosen candidate.

    Args:
        model: Object model with the hypothesis joints applied
        hypothesis: Candidate choice per catalog joint
        observation: Sample to read coordinates from
    """
    if observation.coordinates.shape != (len(hypothesis.assignment), 2):
        raise ObservationException(
            "Observation coordinates do not match the hypothesis",
            details={
                "coordinates": list(observation.coordinates.shape),
                "joints": len(hypothesis.assignment),
            },
        )
    s = np.zeros(model.n)
    s_dot = np.zeros(model.n)
    for j, (name, choice) in enumerate(zip(hypothesis.joints, hypothesis.assignment)):
        k = model.dof_index[model.link_index(name)]
        if k is None:
            continue
        s[k] = observation.coordinates[j, choice]
        s_dot[k] = observation.velocities[j, choice]
    base = observation.base_pose(model)
    return AgentState(base.translation, base.rotation, s, observation.base_twist, s_dot)


def total_momentum(
    model: MultibodyModel,
    hypothesis: TopologyHypothesis,
    observation: ObjectObservation,
    hypothesis_model: Optional[MultibodyModel] = None,
) -> Force6:
    """
    Total momentum of the object under a hypothesis, about the inertial origin.

    Link twists are propagated through the hypothesis joints from the observed base
    twist; each link momentum is mapped to the inertial frame and summed.
    """
    hyp_model = hypothesis_model or hypothesis.build(model)
    state = hypothesis_state(hyp_model, hypothesis, observation)
    kin = Kinematics(hyp_model, state)
    nu = state.nu
    total = np.zeros(6)
    for i, link in enumerate(hyp_model.links):
        pose = kin.poses[i]
        world_twist = kin.point_jacobian(i, pose.translation) @ nu
        rt = pose.rotation.T
        body_twist = np.concatenate([rt @ world_twist[:3], rt @ world_twist[3:]])
        total += transform_force(pose, link_momentum(link.inertia, body_twist))
    return total


def gravity_wrench(model: MultibodyModel, link_poses: dict) -> Force6:
    """Sum of m_i g acting at every observed link com, about the inertial origin."""
    total = np.zeros(6)
    for link in model.links:
        com = link_poses[link.name].apply(link.inertia.com)
        weight = link.inertia.mass * model.gravity
        total += np.concatenate([weight, np.cross(com, weight)])
    return total


def net_wrench(model: MultibodyModel, observation: ObjectObservation) -> Force6:
    """
    Grasp wrenches plus gravity, about the inertial origin.

    Raises:
        UnknownFrameException: If a grasp frame is not declared on the object
    """
    total = gravity_wrench(model, observation.link_poses)
    for frame, wrench in observation.wrenches.items():
        if not model.has_frame(frame):
            raise UnknownFrameException(
                f"Grasp frame '{frame}' not found on object '{model.name}'",
                details={"model": model.name, "frame": frame},
            )
        link_index, offset = model.frame(frame)
        pose = compose(observation.link_poses[model.links[link_index].name], offset)
        total += transform_force(pose, wrench)
    return total
