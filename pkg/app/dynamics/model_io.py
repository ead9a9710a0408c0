"""
Model file loading.

A model file is a UTF-8 JSON document describing a floating-base tree:

    {"name": ..., "gravity": [x, y, z],
     "links": [{"name", "parent": str | null,
                "joint": {"kind", "axis", "origin": {"rpy", "xyz"}, "armature"},
                "inertia": {"mass", "com", "ixx", "iyy", "izz", "ixy", "ixz", "iyz"},
                "frames": [{"name", "rpy", "xyz"}]}]}

Links may appear in any order; they are sorted so that parents precede children.
"""

import json
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.dynamics.multibody import DEFAULT_GRAVITY, JointKind, JointModel, Link, MultibodyModel
from app.dynamics.spatial import SpatialInertia, Transform
from app.utils.exceptions import ModelParseException, ModelValidationException
from app.utils.logging import get_logger

logger = get_logger(__name__)


class OriginSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)
    xyz: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_transform(self) -> Transform:
        return Transform.from_rpy_xyz(self.rpy, self.xyz)


class JointSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["revolute", "prismatic", "fixed"] = "fixed"
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    origin: OriginSpec = Field(default_factory=OriginSpec)
    armature: float = Field(default=0.0, ge=0)

    def to_joint(self) -> JointModel:
        return JointModel(JointKind(self.kind), np.array(self.axis), self.origin.to_transform(), self.armature)


class InertiaSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mass: float
    com: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ixx: float
    iyy: float
    izz: float
    ixy: float = 0.0
    ixz: float = 0.0
    iyz: float = 0.0

    def to_inertia(self) -> SpatialInertia:
        tensor = np.array(
            [
                [self.ixx, self.ixy, self.ixz],
                [self.ixy, self.iyy, self.iyz],
                [self.ixz, self.iyz, self.izz],
            ]
        )
        return SpatialInertia(self.mass, np.array(self.com), tensor)


class FrameSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)
    xyz: tuple[float, float, float] = (0.0, 0.0, 0.0)


class LinkSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    parent: Optional[str] = None
    joint: JointSpec = Field(default_factory=JointSpec)
    inertia: InertiaSpec
    frames: list[FrameSpec] = Field(default_factory=list)


class ModelFile(BaseModel):
    """Schema of a model file."""

    model_config = ConfigDict(extra="forbid")

    name: str
    gravity: tuple[float, float, float] = DEFAULT_GRAVITY
    links: list[LinkSpec]


def _field_path(error: dict[str, Any]) -> str:
    return ".".join(str(part) for part in error.get("loc", ()))


def parse_model_document(document: dict[str, Any]) -> ModelFile:
    try:
        return ModelFile.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        path = _field_path(first)
        raise ModelParseException(
            f"Invalid model field '{path}': {first.get('msg')}",
            details={"field": path, "errors": len(e.errors())},
        ) from None


def _sorted_links(spec: ModelFile) -> list[LinkSpec]:
    roots = [link for link in spec.links if link.parent is None]
    if len(roots) != 1:
        raise ModelValidationException(
            f"Model '{spec.name}' must have exactly one base link, found {len(roots)}",
            details={"roots": [link.name for link in roots]},
        )
    by_name: dict[str, LinkSpec] = {}
    for link in spec.links:
        if link.name in by_name:
            raise ModelValidationException(
                f"Duplicate link name '{link.name}'", details={"link": link.name}
            )
        by_name[link.name] = link
    for link in spec.links:
        if link.parent is not None and link.parent not in by_name:
            raise ModelValidationException(
                f"Link '{link.name}' names unknown parent '{link.parent}'",
                details={"link": link.name, "parent": link.parent},
            )

    ordered: list[LinkSpec] = [roots[0]]
    placed = {roots[0].name}
    frontier = [roots[0].name]
    while frontier:
        parent = frontier.pop(0)
        for link in spec.links:
            if link.parent == parent and link.name not in placed:
                ordered.append(link)
                placed.add(link.name)
                frontier.append(link.name)
    if len(ordered) != len(spec.links):
        stray = next(link.name for link in spec.links if link.name not in placed)
        raise ModelValidationException(
            f"Link '{stray}' is not connected to the base (loop in the tree)",
            details={"link": stray},
        )
    return ordered


def build_model(spec: ModelFile) -> MultibodyModel:
    """Convert a validated model document into a MultibodyModel."""
    ordered = _sorted_links(spec)
    index = {link.name: i for i, link in enumerate(ordered)}
    links = []
    for link in ordered:
        links.append(
            Link(
                name=link.name,
                parent=index[link.parent] if link.parent is not None else None,
                joint=link.joint.to_joint() if link.parent is not None else JointModel(JointKind.FIXED),
                inertia=link.inertia.to_inertia(),
                frames={f.name: Transform.from_rpy_xyz(f.rpy, f.xyz) for f in link.frames},
            )
        )
    return MultibodyModel(spec.name, links, spec.gravity)


def load_model(text: str) -> MultibodyModel:
    """
    Parse and validate model-file contents.

    Args:
        text: JSON document

    Returns:
        Validated MultibodyModel

    Raises:
        ModelParseException: On malformed JSON (with line) or schema errors (with field path)
        ModelValidationException: On structural violations, naming the link
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseException(
            f"Model file is not valid JSON (line {e.lineno}, column {e.colno}): {e.msg}",
            details={"line": e.lineno, "column": e.colno},
        ) from None
    if not isinstance(document, dict):
        raise ModelParseException("Model file must contain a JSON object", details={"line": 1})
    model = build_model(parse_model_document(document))
    logger.debug("model_loaded", model=model.name, links=len(model.links), dof=model.n)
    return model


def load_model_file(path: str | Path) -> MultibodyModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ModelParseException(
            f"Cannot read model file {path}", details={"path": str(path), "error": str(e)}
        ) from None
    return load_model(text)


def model_summary(model: MultibodyModel) -> dict[str, Any]:
    """Plain summary used by the command line."""
    return {
        "name": model.name,
        "links": len(model.links),
        "n": model.n,
        "total_mass": round(model.total_mass, 9),
        "joints": list(model.joint_names),
        "frames": [
            name for name in model.frame_names if name not in {link.name for link in model.links}
        ],
        "gravity": model.gravity.tolist(),
    }
