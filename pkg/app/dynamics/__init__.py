"""
Rigid-body dynamics layer.

- spatial: twists, wrenches, transforms, spatial inertia
- multibody: floating-base trees, kinematics, Jacobians, M, h, centroidal momentum
- model_io: JSON model files
"""

from app.dynamics.model_io import load_model, load_model_file, model_summary
from app.dynamics.multibody import (
    AgentState,
    JointKind,
    JointModel,
    Kinematics,
    Link,
    MultibodyModel,
    bias_forces,
    centroidal_momentum_matrix,
    forward_kinematics,
    frame_jacobian,
    mass_matrix,
)
from app.dynamics.spatial import (
    SpatialInertia,
    Transform,
    compose,
    hat,
    transform_force,
    transform_motion,
)

__all__ = [
    "load_model",
    "load_model_file",
    "model_summary",
    "AgentState",
    "JointKind",
    "JointModel",
    "Kinematics",
    "Link",
    "MultibodyModel",
    "bias_forces",
    "centroidal_momentum_matrix",
    "forward_kinematics",
    "frame_jacobian",
    "mass_matrix",
    "SpatialInertia",
    "Transform",
    "compose",
    "hat",
    "transform_force",
    "transform_motion",
]
