"""
Controller gains.

Gain entries in configuration may be a scalar (times identity), a list (diagonal)
or a nested list (full matrix).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.utils.exceptions import ConfigurationException
from app.utils.settings import get_settings

GainValue = Union[float, list[float], list[list[float]]]


class GainsConfig(BaseModel):
    """Gains section of a scenario file."""

    model_config = ConfigDict(extra="forbid")

    kd: GainValue = 1.0
    kp: GainValue = 100.0
    k_D: GainValue = 20.0
    eps_chi: Optional[float] = None
    fl_kd: Optional[GainValue] = None
    fl_kp: Optional[GainValue] = None


def gain_matrix(value: GainValue, p: int, name: str) -> np.ndarray:
    """
    Expand a configured gain into a symmetric positive-definite p x p matrix.

    Raises:
        ConfigurationException: On wrong shape, asymmetry or non-positive eigenvalues
    """
    array = np.asarray(value, dtype=float)
    if array.ndim == 0:
        matrix = float(array) * np.eye(p)
    elif array.ndim == 1 and array.shape[0] == p:
        matrix = np.diag(array)
    elif array.shape == (p, p):
        matrix = array
    else:
        raise ConfigurationException(
            f"Gain '{name}' must be a scalar, {p} diagonal entries or a {p}x{p} matrix",
            details={"gain": name, "shape": list(array.shape)},
        )
    if not np.allclose(matrix, matrix.T, atol=1e-12):
        raise ConfigurationException(f"Gain '{name}' is not symmetric", details={"gain": name})
    if np.linalg.eigvalsh(matrix)[0] <= 0:
        raise ConfigurationException(f"Gain '{name}' is not positive-definite", details={"gain": name})
    return matrix


@dataclass(frozen=True)
class Gains:
    """
    K_d, K_p weight the Lyapunov function; K_D is the damping of the partner-aware law.

    fl_kd and fl_kp are the feedback-linearization gains of the baseline law. When not
    configured they are chosen so that both laws give the same closed loop for a
    passive partner: fl_kd = K_d^-1 K_D and fl_kp = K_d^-1 K_p.
    """

    K_d: np.ndarray
    K_p: np.ndarray
    K_D: np.ndarray
    eps_chi: float
    fl_kd: np.ndarray
    fl_kp: np.ndarray

    @classmethod
    def from_config(cls, config: GainsConfig | dict | None = None, p: int = 6) -> Gains:
        if config is None:
            config = GainsConfig()
        elif isinstance(config, dict):
            config = GainsConfig.model_validate(config)
        K_d = gain_matrix(config.kd, p, "kd")
        K_p = gain_matrix(config.kp, p, "kp")
        K_D = gain_matrix(config.k_D, p, "k_D")
        K_d_inv = np.linalg.inv(K_d)
        fl_kd = gain_matrix(config.fl_kd, p, "fl_kd") if config.fl_kd is not None else K_d_inv @ K_D
        fl_kp = gain_matrix(config.fl_kp, p, "fl_kp") if config.fl_kp is not None else K_d_inv @ K_p
        eps_chi = config.eps_chi if config.eps_chi is not None else get_settings().eps_chi
        if eps_chi <= 0:
            raise ConfigurationException("eps_chi must be positive", details={"eps_chi": eps_chi})
        return cls(K_d, K_p, K_D, float(eps_chi), fl_kd, fl_kp)

    @property
    def dimension(self) -> int:
        return self.K_d.shape[0]

    @property
    def isotropic(self) -> bool:
        """Whether K_d, K_p and K_D are all multiples of the identity."""
        return all(
            np.allclose(m, m[0, 0] * np.eye(self.dimension), rtol=0.0, atol=1e-12 * abs(m[0, 0]))
            for m in (self.K_d, self.K_p, self.K_D)
        )
