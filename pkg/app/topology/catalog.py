"""
Articulation catalogs and topology hypotheses.

A catalog names, for every movable joint of an object, two candidate joint models.
Picking one candidate per joint gives one of 2^n hypotheses.

Catalog file:

    {"object": "drawer_and_lid",
     "joints": [{"link": "lid",
                 "candidates": [{"kind": "revolute", "axis": [0, 1, 0], "origin": {...}},
                                {"kind": "prismatic", "axis": [1, 0, 0], "origin": {...}}]}]}
"""

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.dynamics.model_io import JointSpec
from app.dynamics.multibody import JointKind, JointModel, MultibodyModel
from app.utils.config_loader import ConfigLoader
from app.utils.exceptions import ConfigurationException
from app.utils.logging import get_logger
from app.utils.settings import get_settings

logger = get_logger(__name__)


class CatalogJoint(BaseModel):
    model_config = ConfigDict(extra="forbid")

    link: str
    candidates: list[JointSpec] = Field(min_length=2, max_length=2)

    @field_validator("candidates")
    @classmethod
    def validate_distinct(cls, v: list[JointSpec]) -> list[JointSpec]:
        if v[0] == v[1]:
            raise ValueError("the two candidates of a joint must differ")
        return v

    def candidate_name(self, index: int) -> str:
        kind = self.candidates[index].kind
        if self.candidates[0].kind == self.candidates[1].kind:
            return f"{kind}{index}"
        return kind


class ArticulationCatalog(BaseModel):
    """Two candidate joint models per movable joint."""

    model_config = ConfigDict(extra="forbid")

    object: Optional[str] = None
    joints: list[CatalogJoint]

    @field_validator("joints")
    @classmethod
    def validate_links(cls, v: list[CatalogJoint]) -> list[CatalogJoint]:
        names = [joint.link for joint in v]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"links listed more than once: {duplicates}")
        return v

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def links(self) -> list[str]:
        return [joint.link for joint in self.joints]

    def check_against(self, model: MultibodyModel) -> None:
        """
        Raise unless the catalog covers exactly the non-fixed joints of ``model``.

        Raises:
            ConfigurationException: On unknown links, the base link, or uncovered joints
        """
        root = model.links[0].name
        known = {link.name for link in model.links}
        for name in self.links:
            if name not in known or name == root:
                raise ConfigurationException(
                    f"Catalog joint '{name}' is not a joint of '{model.name}'",
                    details={"link": name, "model": model.name},
                )
        uncovered = [
            link.name
            for link in model.links[1:]
            if link.joint.kind is not JointKind.FIXED and link.name not in self.links
        ]
        if uncovered:
            raise ConfigurationException(
                f"Catalog leaves movable joints uncovered: {uncovered}",
                details={"links": uncovered, "model": model.name},
            )


@dataclass(frozen=True)
class TopologyHypothesis:
    """One candidate index per catalog joint, with its residual once scored."""

    assignment: tuple[int, ...]
    joints: dict[str, JointModel] = field(compare=False, repr=False)
    label: str = ""
    residual: Optional[float] = None

    def build(self, model: MultibodyModel) -> MultibodyModel:
        """The object model with this hypothesis's joints."""
        return model.with_joints({model.link_index(name): joint for name, joint in self.joints.items()})

    def scored(self, residual: float) -> "TopologyHypothesis":
        return TopologyHypothesis(self.assignment, self.joints, self.label, residual)

    def to_dict(self) -> dict[str, Any]:
        return {
            "assignment": list(self.assignment),
            "label": self.label,
            "joints": {name: joint.kind.value for name, joint in self.joints.items()},
            "residual": self.residual,
        }


def make_hypothesis(catalog: ArticulationCatalog, assignment: tuple[int, ...]) -> TopologyHypothesis:
    if len(assignment) != catalog.n or any(c not in (0, 1) for c in assignment):
        raise ConfigurationException(
            f"Assignment {assignment} does not fit a catalog of {catalog.n} joints",
            details={"assignment": list(assignment), "n": catalog.n},
        )
    joints = {
        joint.link: joint.candidates[c].to_joint() for joint, c in zip(catalog.joints, assignment)
    }
    label = ",".join(
        f"{joint.link}={joint.candidate_name(c)}" for joint, c in zip(catalog.joints, assignment)
    )
    return TopologyHypothesis(tuple(assignment), joints, label)


def enumerate_hypotheses(catalog: ArticulationCatalog) -> list[TopologyHypothesis]:
    """
    All 2^n hypotheses in lexicographic assignment order.

    Raises:
        ConfigurationException: If n exceeds the configured enumeration limit
    """
    limit = get_settings().max_topology_joints
    if catalog.n > limit:
        raise ConfigurationException(
            f"Catalog has {catalog.n} joints, enumeration is limited to {limit}",
            details={"n": catalog.n, "limit": limit},
        )
    return [make_hypothesis(catalog, a) for a in itertools.product((0, 1), repeat=catalog.n)]


def parse_catalog(document: dict[str, Any]) -> ArticulationCatalog:
    try:
        return ArticulationCatalog.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        path = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigurationException(
            f"Invalid catalog field '{path}': {first.get('msg')}",
            details={"field": path, "errors": len(e.errors())},
        ) from None


def load_catalog(path: str | Path) -> ArticulationCatalog:
    path = Path(path)
    catalog = parse_catalog(ConfigLoader(path.parent).load_json(path))
    logger.info("catalog_loaded", path=str(path), joints=catalog.n)
    return catalog
