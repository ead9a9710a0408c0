"""
Minimum-jerk references.

x(t) = x0 + (xf - x0) (10 s^3 - 15 s^4 + 6 s^5), s = min(t / T, 1)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.utils.exceptions import ConfigurationException


@dataclass(frozen=True)
class MinJerkSpec:
    """Quintic rest-to-rest move from x0 to xf in T seconds."""

    x0: np.ndarray
    xf: np.ndarray
    duration: float

    def __post_init__(self) -> None:
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        xf = np.atleast_1d(np.asarray(self.xf, dtype=float))
        if x0.shape != xf.shape:
            raise ConfigurationException(
                "Minimum-jerk endpoints differ in dimension",
                details={"x0": x0.shape, "xf": xf.shape},
            )
        if not self.duration > 0:
            raise ConfigurationException(
                "Minimum-jerk duration must be positive", details={"duration": self.duration}
            )
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "xf", xf)
        object.__setattr__(self, "duration", float(self.duration))


def min_jerk_eval(spec: MinJerkSpec, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Position, velocity and acceleration of a minimum-jerk move at time t.

    Times before 0 hold x0 and times after T hold xf, both at rest.
    """
    T = spec.duration
    s = min(max(t / T, 0.0), 1.0)
    delta = spec.xf - spec.x0
    s2, s3 = s * s, s * s * s
    shape = 10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s2
    rate = (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2) / T
    curvature = (60.0 * s - 180.0 * s2 + 120.0 * s3) / (T * T)
    if s >= 1.0:
        return spec.xf.copy(), np.zeros_like(delta), np.zeros_like(delta)
    return spec.x0 + delta * shape, delta * rate, delta * curvature


@dataclass(frozen=True)
class ScheduledMove:
    """A minimum-jerk move that starts at an absolute time."""

    spec: MinJerkSpec
    start: float

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return min_jerk_eval(self.spec, t - self.start)

    @classmethod
    def hold(cls, x: np.ndarray, start: float = 0.0) -> ScheduledMove:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(MinJerkSpec(x, x, 1.0), start)


class MoveSchedule:
    """
    Sum of scheduled minimum-jerk increments.

    Each increment starts and ends at rest, so appending one while earlier moves are
    still running keeps the reference and its velocity continuous.
    """

    def __init__(self, x0: np.ndarray):
        self.x0 = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
        self.moves: list[ScheduledMove] = []

    @property
    def final(self) -> np.ndarray:
        """Value once every scheduled move has completed."""
        out = self.x0.copy()
        for move in self.moves:
            out = out + move.spec.xf
        return out

    def add_offset(self, offset: np.ndarray, duration: float, start: float) -> None:
        offset = np.atleast_1d(np.asarray(offset, dtype=float))
        if not np.any(offset):
            return
        self.moves.append(ScheduledMove(MinJerkSpec(np.zeros_like(offset), offset, duration), start))

    def add_target(self, target: np.ndarray, duration: float, start: float) -> None:
        self.add_offset(np.asarray(target, dtype=float) - self.final, duration, start)

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.x0.copy()
        v = np.zeros_like(x)
        a = np.zeros_like(x)
        for move in self.moves:
            dx, dv, da = move(t)
            x += dx
            v += dv
            a += da
        return x, v, a
