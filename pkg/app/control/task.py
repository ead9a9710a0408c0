"""
Robot tasks of the form chi = J_chi(q) nu.

The momentum task uses the centroidal momentum matrix; its reference is built from a
desired com trajectory as chi_d = [m v_com_d; 0].
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from app.dynamics.multibody import (
    AgentState,
    Kinematics,
    MultibodyModel,
    centroidal_momentum_matrix,
    integrate_configuration,
)
from app.utils.settings import get_settings

ComTrajectory = Callable[[float], tuple[np.ndarray, np.ndarray, np.ndarray]]
TaskReference = Callable[[float], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class TaskEvaluation:
    chi: np.ndarray
    jacobian: np.ndarray
    jdot_nu: np.ndarray


class TaskSpec(ABC):
    """
    A p-dimensional robot task with a time-varying reference.

    The integral of the task error is kept here and advanced by the trapezoidal rule
    once per control step.
    """

    def __init__(self, model: MultibodyModel, dimension: int, reference: Optional[TaskReference] = None):
        self.model = model
        self.dimension = dimension
        self._reference = reference
        self.integral_state = np.zeros(dimension)
        self._last_error: Optional[np.ndarray] = None

    @abstractmethod
    def jacobian(self, state: AgentState, kin: Optional[Kinematics] = None) -> np.ndarray:
        """p x (n + 6) task Jacobian."""

    def evaluate(self, state: AgentState, kin: Optional[Kinematics] = None) -> TaskEvaluation:
        jac = self.jacobian(state, kin)
        return TaskEvaluation(jac @ state.nu, jac, self.jdot_nu(state))

    def jdot_nu(self, state: AgentState, step: Optional[float] = None) -> np.ndarray:
        """J_dot nu by central difference of J along the current velocity."""
        nu = state.nu
        eps = step if step is not None else get_settings().fd_step / max(1.0, float(np.linalg.norm(nu)))
        forward = self.jacobian(integrate_configuration(state, eps))
        backward = self.jacobian(integrate_configuration(state, -eps))
        return (forward - backward) @ nu / (2.0 * eps)

    def reference(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(chi_d, chi_d_dot) at time t; zero when no reference is set."""
        if self._reference is None:
            return np.zeros(self.dimension), np.zeros(self.dimension)
        chi_d, chi_d_dot = self._reference(t)
        return np.asarray(chi_d, dtype=float), np.asarray(chi_d_dot, dtype=float)

    def set_reference(self, reference: Optional[TaskReference]) -> None:
        self._reference = reference

    def update_integral(self, chi_err: np.ndarray, dt: float) -> np.ndarray:
        """Accumulate the error integral with the trapezoidal rule."""
        chi_err = np.asarray(chi_err, dtype=float)
        if self._last_error is not None and dt > 0:
            self.integral_state = self.integral_state + 0.5 * dt * (self._last_error + chi_err)
        self._last_error = chi_err.copy()
        return self.integral_state

    def reset_integral(self) -> None:
        self.integral_state = np.zeros(self.dimension)
        self._last_error = None


class MomentumTask(TaskSpec):
    """Centroidal momentum of the robot, [linear; angular] about its com."""

    def __init__(self, model: MultibodyModel, reference: Optional[TaskReference] = None):
        super().__init__(model, 6, reference)

    def jacobian(self, state: AgentState, kin: Optional[Kinematics] = None) -> np.ndarray:
        return centroidal_momentum_matrix(self.model, state, kin)


def com_momentum_reference(total_mass: float, trajectory: ComTrajectory) -> TaskReference:
    """Momentum reference [m v_d; 0] and its rate [m a_d; 0] from a com trajectory."""

    def reference(t: float) -> tuple[np.ndarray, np.ndarray]:
        _, velocity, acceleration = trajectory(t)
        chi_d = np.concatenate([total_mass * np.asarray(velocity, dtype=float), np.zeros(3)])
        chi_d_dot = np.concatenate([total_mass * np.asarray(acceleration, dtype=float), np.zeros(3)])
        return chi_d, chi_d_dot

    return reference


def momentum_task(robot: MultibodyModel, com_trajectory: Optional[ComTrajectory] = None) -> MomentumTask:
    """
    Build the centroidal momentum task of a robot.

    Args:
        robot: Robot model
        com_trajectory: Optional desired com trajectory t -> (x, v, a); the task
            holds zero momentum without one

    Returns:
        MomentumTask with p = 6
    """
    reference = com_momentum_reference(robot.total_mass, com_trajectory) if com_trajectory else None
    return MomentumTask(robot, reference)
