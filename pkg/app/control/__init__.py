"""
Robot task control: momentum task, partner-aware law, baseline feedback linearization
and the Lyapunov monitor.
"""

from app.control.gains import Gains, GainsConfig
from app.control.lyapunov import LyapunovMonitor, alpha_decomposition, lyapunov_eval
from app.control.partner_aware import (
    ControlDiagnostics,
    ControlMode,
    compute_delta_lambda,
    control_torques,
    damped_pinv,
    feedback_linearization_torques,
    partner_aware_torques,
)
from app.control.task import MomentumTask, TaskSpec, momentum_task

__all__ = [
    "Gains",
    "GainsConfig",
    "LyapunovMonitor",
    "alpha_decomposition",
    "lyapunov_eval",
    "ControlDiagnostics",
    "ControlMode",
    "compute_delta_lambda",
    "control_torques",
    "damped_pinv",
    "feedback_linearization_torques",
    "partner_aware_torques",
    "MomentumTask",
    "TaskSpec",
    "momentum_task",
]
