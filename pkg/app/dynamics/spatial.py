"""
Spatial vector algebra.

Motion vectors (twists) and force vectors (wrenches) are plain length-6 numpy
arrays ordered linear-then-angular: a twist is [v; w] and a wrench is [f; n],
so ``wrench @ twist`` is power. A Transform (R, p) maps child coordinates into
its parent frame: x_parent = R x_child + p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

Vec3 = np.ndarray
Mat3 = np.ndarray
Motion6 = np.ndarray
Force6 = np.ndarray

SO3_TOLERANCE = 1e-9


def hat(p: Vec3) -> Mat3:
    """Skew-symmetric matrix with hat(p) @ w == cross(p, w)."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    return np.array(
        [
            [0.0, -z, y],
            [z, 0.0, -x],
            [-y, x, 0.0],
        ]
    )


def motion(linear: Vec3, angular: Vec3) -> Motion6:
    return np.concatenate([np.asarray(linear, dtype=float), np.asarray(angular, dtype=float)])


def force(linear: Vec3, moment: Vec3) -> Force6:
    return np.concatenate([np.asarray(linear, dtype=float), np.asarray(moment, dtype=float)])


def rotation_from_rpy(rpy: Vec3) -> Mat3:
    """Fixed-axis roll/pitch/yaw: R = Rz(yaw) Ry(pitch) Rx(roll)."""
    return Rotation.from_euler("xyz", np.asarray(rpy, dtype=float)).as_matrix()


def rotation_about(axis: Vec3, angle: float) -> Mat3:
    return Rotation.from_rotvec(np.asarray(axis, dtype=float) * angle).as_matrix()


def rotation_log(rotation: Mat3) -> Vec3:
    """Rotation vector of a rotation matrix (inverse of the exponential map)."""
    return Rotation.from_matrix(rotation).as_rotvec()


def orthonormalize(rotation: Mat3) -> Mat3:
    """Closest rotation matrix in the Frobenius sense."""
    u, _, vt = np.linalg.svd(rotation)
    result = u @ vt
    if np.linalg.det(result) < 0:
        u[:, -1] *= -1
        result = u @ vt
    return result


def is_rotation(rotation: Mat3, tol: float = SO3_TOLERANCE) -> bool:
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (3, 3) or not np.all(np.isfinite(rotation)):
        return False
    return bool(
        np.allclose(rotation.T @ rotation, np.eye(3), atol=tol)
        and abs(np.linalg.det(rotation) - 1.0) <= tol
    )


@dataclass(frozen=True)
class Transform:
    """Rigid transform stored as rotation plus translation."""

    rotation: Mat3
    translation: Vec3

    def __post_init__(self) -> None:
        rotation = np.array(self.rotation, dtype=float).reshape(3, 3)
        translation = np.array(self.translation, dtype=float).reshape(3)
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> Transform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_rpy_xyz(cls, rpy: Vec3 = (0.0, 0.0, 0.0), xyz: Vec3 = (0.0, 0.0, 0.0)) -> Transform:
        return cls(rotation_from_rpy(rpy), np.asarray(xyz, dtype=float))

    @classmethod
    def from_translation(cls, xyz: Vec3) -> Transform:
        return cls(np.eye(3), np.asarray(xyz, dtype=float))

    def inverse(self) -> Transform:
        rt = self.rotation.T
        return Transform(rt, -rt @ self.translation)

    def apply(self, point: Vec3) -> Vec3:
        """Map a point from child to parent coordinates."""
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def motion_matrix(self) -> np.ndarray:
        """6x6 operator re-expressing a child-frame twist in the parent frame."""
        r = self.rotation
        out = np.zeros((6, 6))
        out[:3, :3] = r
        out[:3, 3:] = hat(self.translation) @ r
        out[3:, 3:] = r
        return out

    def force_matrix(self) -> np.ndarray:
        """6x6 operator re-expressing a child-frame wrench in the parent frame."""
        r = self.rotation
        out = np.zeros((6, 6))
        out[:3, :3] = r
        out[3:, :3] = hat(self.translation) @ r
        out[3:, 3:] = r
        return out

    def __matmul__(self, other: Transform) -> Transform:
        return compose(self, other)


def compose(a: Transform, b: Transform) -> Transform:
    """Transform mapping b-frame coordinates into a's parent frame."""
    return Transform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def transform_motion(x: Transform, v: Motion6) -> Motion6:
    v = np.asarray(v, dtype=float)
    angular = x.rotation @ v[3:]
    linear = x.rotation @ v[:3] + np.cross(x.translation, angular)
    return np.concatenate([linear, angular])


def transform_force(x: Transform, f: Force6) -> Force6:
    f = np.asarray(f, dtype=float)
    linear = x.rotation @ f[:3]
    moment = x.rotation @ f[3:] + np.cross(x.translation, linear)
    return np.concatenate([linear, moment])


def shift_force(f: Force6, point: Vec3) -> Force6:
    """Re-express a world-oriented wrench about ``point`` instead of the origin."""
    f = np.asarray(f, dtype=float)
    return np.concatenate([f[:3], f[3:] - np.cross(point, f[:3])])


@dataclass(frozen=True)
class SpatialInertia:
    """Rigid-body inertia: mass, center of mass and rotational inertia at the com."""

    mass: float
    com: Vec3
    inertia_at_com: Mat3

    def __post_init__(self) -> None:
        com = np.array(self.com, dtype=float).reshape(3)
        inertia = np.array(self.inertia_at_com, dtype=float).reshape(3, 3)
        com.setflags(write=False)
        inertia.setflags(write=False)
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "inertia_at_com", inertia)

    def violations(self) -> list[str]:
        """Return the list of physical-consistency problems (empty when valid)."""
        problems = []
        if not np.isfinite(self.mass) or self.mass <= 0:
            problems.append(f"mass must be positive, got {self.mass}")
        inertia = self.inertia_at_com
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            problems.append("inertia is not symmetric")
            return problems
        moments = np.linalg.eigvalsh(inertia)
        if moments[0] <= 0:
            problems.append("inertia is not positive-definite")
        else:
            a, b, c = moments
            slack = 1e-12 * (a + b + c)
            if a + b < c - slack:
                problems.append("principal moments violate the triangle inequality")
        return problems

    def matrix(self) -> np.ndarray:
        """Dense 6x6 inertia about the link origin in link coordinates."""
        m = self.mass
        c = hat(self.com)
        out = np.zeros((6, 6))
        out[:3, :3] = m * np.eye(3)
        out[:3, 3:] = -m * c
        out[3:, :3] = m * c
        out[3:, 3:] = self.inertia_at_com - m * c @ c
        return out

    def rotated_inertia(self, rotation: Mat3) -> Mat3:
        """Rotational inertia at the com expressed in world axes."""
        return rotation @ self.inertia_at_com @ rotation.T
