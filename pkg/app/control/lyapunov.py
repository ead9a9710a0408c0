"""
Lyapunov function of the momentum task and its closed-loop rate.

    V = 1/2 e^T K_d e + 1/2 I^T K_p I,     e = chi - chi_d,  I = integral of e
    V_dot = -e^T K_D e + min(0, alpha) |e|   under the partner-aware law
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.control.gains import Gains
from app.utils.logging import get_logger
from app.utils.settings import get_settings

logger = get_logger(__name__)


def alpha_decomposition(
    omega_tau_h: np.ndarray, chi_err: np.ndarray, eps_chi: float
) -> tuple[float, float]:
    """
    Split the partner effect into components along and across the task error.

    omega_tau_h = alpha * e/|e| + beta with beta orthogonal to e.

    Returns:
        (alpha, |beta|); alpha is zero when |e| < eps_chi
    """
    omega_tau_h = np.asarray(omega_tau_h, dtype=float)
    chi_err = np.asarray(chi_err, dtype=float)
    norm = float(np.linalg.norm(chi_err))
    if norm < eps_chi:
        return 0.0, float(np.linalg.norm(omega_tau_h))
    direction = chi_err / norm
    alpha = float(direction @ omega_tau_h)
    beta = omega_tau_h - alpha * direction
    return alpha, float(np.linalg.norm(beta))


def lyapunov_value(gains: Gains, chi_err: np.ndarray, integral_err: np.ndarray) -> float:
    return float(0.5 * chi_err @ gains.K_d @ chi_err + 0.5 * integral_err @ gains.K_p @ integral_err)


def closed_loop_rate(gains: Gains, chi_err: np.ndarray, alpha: float) -> float:
    """-e^T K_D e + min(0, alpha) |e|."""
    chi_err = np.asarray(chi_err, dtype=float)
    return float(-chi_err @ gains.K_D @ chi_err + min(0.0, alpha) * np.linalg.norm(chi_err))


def lyapunov_eval(
    gains: Gains, chi_err: np.ndarray, integral_err: np.ndarray, alpha: float = 0.0
) -> tuple[float, float]:
    """
    Evaluate V and its closed-loop rate for a given alpha.

    Args:
        gains: Controller gains
        chi_err: Task error e
        integral_err: Integral of the task error
        alpha: Partner component along e

    Returns:
        (V, V_dot)
    """
    chi_err = np.asarray(chi_err, dtype=float)
    integral_err = np.asarray(integral_err, dtype=float)
    return lyapunov_value(gains, chi_err, integral_err), closed_loop_rate(gains, chi_err, alpha)


@dataclass
class LyapunovMonitor:
    """
    Finite-difference check of V along a simulated trajectory.

    Steps flagged as contact switches are excluded from the violation count since
    the impulsive velocity reset moves V discontinuously.
    """

    tolerance: float = field(default_factory=lambda: get_settings().lyapunov_tolerance)
    violations: int = 0
    max_rate: float = -np.inf
    _last: Optional[tuple[float, float, bool]] = None

    def observe(self, t: float, value: float, switched: bool = False) -> Optional[float]:
        """
        Record V at time t.

        Returns:
            Forward-difference rate of the previous sample, or None for the first one
        """
        previous = self._last
        self._last = (t, value, switched)
        if previous is None:
            return None
        t0, v0, switched0 = previous
        if t <= t0:
            return None
        rate = (value - v0) / (t - t0)
        if not (switched or switched0):
            self.max_rate = max(self.max_rate, rate)
            if rate > self.tolerance:
                self.violations += 1
                logger.warning("lyapunov_increase", t=t0, rate=rate, tolerance=self.tolerance)
        return rate

    def reset(self) -> None:
        self._last = None
