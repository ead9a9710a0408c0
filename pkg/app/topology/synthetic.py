"""
Synthetic observations of an articulated object.

The object follows a prescribed smooth motion (sinusoidal base translation, base
rotation about a fixed axis, sinusoidal joint motion) under its true articulation.
The grasp wrenches are chosen so that, together with gravity, they produce exactly
the momentum rate of that motion; they are split evenly between the grasp frames.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from app.dynamics.multibody import AgentState, Kinematics, MultibodyModel, com_accelerations, link_motion
from app.dynamics.spatial import compose, rotation_about, transform_force
from app.topology.catalog import ArticulationCatalog, make_hypothesis
from app.topology.momentum import gravity_wrench
from app.topology.observations import ObjectObservation, candidate_coordinates
from app.utils.exceptions import ConfigurationException
from app.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class MotionProfile:
    """Amplitudes and frequencies of the prescribed motion."""

    base_amplitude: tuple[float, float, float] = (0.05, 0.03, 0.04)
    base_rotation_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    base_rotation_amplitude: float = 0.3
    base_frequency: float = 1.5
    joint_amplitude: float = 0.4
    joint_frequencies: Sequence[float] = field(default=(2.0, 2.7, 3.4))


def _sinusoid(amplitude, omega: float, phase: float, t: float):
    """Value, rate and second rate of amplitude * sin(omega t + phase)."""
    angle = omega * t + phase
    a = np.asarray(amplitude, dtype=float)
    return a * np.sin(angle), a * omega * np.cos(angle), -a * omega * omega * np.sin(angle)


def generate_object_observations(
    model: MultibodyModel,
    catalog: ArticulationCatalog,
    assignment: tuple[int, ...],
    dt: float,
    duration: float,
    frames: Sequence[str] = (),
    profile: Optional[MotionProfile] = None,
    seed: int = 0,
) -> list[ObjectObservation]:
    """
    Sample an object moving under one hypothesis of a catalog.

    Args:
        model: Object model (its own joints are replaced by the chosen candidates)
        catalog: Candidate joints
        assignment: Candidate index per catalog joint (the generating topology)
        dt: Sampling step
        duration: Length of the trajectory
        frames: Grasp frames carrying the external wrench
        profile: Motion amplitudes and frequencies
        seed: Seeds the joint phases

    Returns:
        Observations at t = 0, dt, ..., duration
    """
    if not dt > 0 or duration < 2 * dt:
        raise ConfigurationException(
            "Synthetic trajectory needs dt > 0 and at least three samples",
            details={"dt": dt, "duration": duration},
        )
    if not frames:
        raise ConfigurationException(
            "Synthetic trajectory needs at least one grasp frame to carry the external wrench",
            details={"frames": []},
        )
    for frame in frames:
        model.frame(frame)
    profile = profile or MotionProfile()
    hypothesis = make_hypothesis(catalog, tuple(assignment))
    true_model = hypothesis.build(model)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, true_model.n)
    frequencies = np.resize(np.asarray(profile.joint_frequencies, dtype=float), true_model.n)
    axis = np.asarray(profile.base_rotation_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    base0 = np.array([0.0, 0.0, 1.0])
    w_b = 2.0 * np.pi * profile.base_frequency

    observations = []
    steps = int(round(duration / dt))
    for k in range(steps + 1):
        t = k * dt
        p, v, a = _sinusoid(profile.base_amplitude, w_b, 0.0, t)
        theta, theta_dot, theta_ddot = _sinusoid(profile.base_rotation_amplitude, w_b, 0.5, t)
        s, s_dot, s_ddot = (np.zeros(true_model.n) for _ in range(3))
        for j in range(true_model.n):
            s[j], s_dot[j], s_ddot[j] = _sinusoid(
                profile.joint_amplitude, 2.0 * np.pi * frequencies[j], phases[j], t
            )
        base_vel = np.concatenate([v, axis * theta_dot])
        nu_dot = np.concatenate([a, axis * theta_ddot, s_ddot])
        state = AgentState(base0 + p, rotation_about(axis, float(theta)), s, base_vel, s_dot)

        kin = Kinematics(true_model, state)
        sweep = link_motion(true_model, state, nu_dot, kin)
        acc = com_accelerations(true_model, kin, sweep)
        rate = np.zeros(6)
        for i, link in enumerate(true_model.links):
            inertia = kin.world_inertias[i]
            w = sweep.omega[i]
            linear = link.inertia.mass * acc[i]
            rate += np.concatenate(
                [linear, inertia @ sweep.alpha[i] + np.cross(w, inertia @ w) + np.cross(kin.com_positions[i], linear)]
            )

        names = [link.name for link in true_model.links]
        poses = dict(zip(names, kin.poses))
        grasp = rate - gravity_wrench(true_model, poses)
        wrenches = {}
        for frame in frames:
            link_index, offset = true_model.frame(frame)
            pose = compose(kin.poses[link_index], offset)
            wrenches[frame] = transform_force(pose.inverse(), grasp / len(frames))

        q, qd = candidate_coordinates(
            model,
            catalog,
            poses,
            dict(zip(names, sweep.omega)),
            dict(zip(names, sweep.velocity)),
        )
        observations.append(ObjectObservation(t, base_vel, poses, q, qd, wrenches))

    logger.info(
        "synthetic_observations_generated",
        topology=hypothesis.label,
        samples=len(observations),
        dt=dt,
    )
    return observations
