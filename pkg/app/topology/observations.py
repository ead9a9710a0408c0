"""
Object observations and their CSV storage.

An observation file is a CSV plus a JSON sidecar (``<stem>.columns.json``) that maps
the quantities onto columns:

    {"time": "t",
     "base_twist": [6 columns],
     "links": {link: {"position": [3 columns], "rotation": [9 columns, row major]}},
     "coordinates": {joint: [{"q": col, "qd": col}, {"q": col, "qd": col}]},
     "wrenches": {frame: [6 columns]}}

Wrenches are expressed in their grasp frame and act at its origin. Base twists use
the base-origin velocity and the world angular velocity.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.dynamics.multibody import JointKind, MultibodyModel
from app.dynamics.spatial import Transform, compose, rotation_log
from app.topology.catalog import ArticulationCatalog
from app.utils.exceptions import ObservationException
from app.utils.formatting import format_json, write_atomic
from app.utils.logging import get_logger

logger = get_logger(__name__)

TWIST_AXES = ("vx", "vy", "vz", "wx", "wy", "wz")
WRENCH_AXES = ("fx", "fy", "fz", "mx", "my", "mz")


@dataclass(frozen=True)
class ObjectObservation:
    """
    One sample of an observed articulated object.

    coordinates and velocities have shape (n_joints, 2): one column per catalog
    candidate.
    """

    t: float
    base_twist: np.ndarray
    link_poses: dict[str, Transform]
    coordinates: np.ndarray
    velocities: np.ndarray
    wrenches: dict[str, np.ndarray]

    def base_pose(self, model: MultibodyModel) -> Transform:
        return self.link_poses[model.links[0].name]


def candidate_coordinates(
    model: MultibodyModel,
    catalog: ArticulationCatalog,
    link_poses: dict[str, Transform],
    link_omegas: dict[str, np.ndarray],
    link_velocities: dict[str, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """
    Project observed relative link motion onto every candidate joint.

    A revolute candidate reads the relative rotation about its axis; a prismatic one
    reads the relative translation along its axis. Fixed candidates read zero.

    Args:
        model: Object model (gives the parent of each link)
        catalog: Candidate joints
        link_poses: World pose of every link
        link_omegas: World angular velocity of every link
        link_velocities: World velocity of every link origin

    Returns:
        (coordinates, velocities), each of shape (n_joints, 2)
    """
    q = np.zeros((catalog.n, 2))
    qd = np.zeros((catalog.n, 2))
    for j, joint in enumerate(catalog.joints):
        link = model.links[model.link_index(joint.link)]
        parent = model.links[link.parent].name
        parent_pose = link_poses[parent]
        child_pose = link_poses[joint.link]
        for c, candidate in enumerate(joint.candidates):
            spec = candidate.to_joint()
            if spec.kind is JointKind.FIXED:
                continue
            joint_frame = compose(parent_pose, spec.origin)
            relative = compose(joint_frame.inverse(), child_pose)
            rt = joint_frame.rotation.T
            if spec.kind is JointKind.REVOLUTE:
                q[j, c] = float(spec.axis @ rotation_log(relative.rotation))
                qd[j, c] = float(spec.axis @ (rt @ (link_omegas[joint.link] - link_omegas[parent])))
            else:
                q[j, c] = float(spec.axis @ relative.translation)
                carried = link_velocities[parent] + np.cross(
                    link_omegas[parent], child_pose.translation - parent_pose.translation
                )
                qd[j, c] = float(spec.axis @ (rt @ (link_velocities[joint.link] - carried)))
    return q, qd


class ColumnMap(BaseModel):
    """Sidecar schema naming the CSV columns of each quantity."""

    model_config = ConfigDict(extra="forbid")

    time: str = "t"
    base_twist: list[str] = Field(min_length=6, max_length=6)
    links: dict[str, dict[str, list[str]]]
    coordinates: dict[str, list[dict[str, str]]]
    wrenches: dict[str, list[str]] = Field(default_factory=dict)


def sidecar_path(csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(f"{csv_path.stem}.columns.json")


def default_column_map(
    link_names: Sequence[str], joint_links: Sequence[str], frames: Sequence[str]
) -> ColumnMap:
    return ColumnMap(
        time="t",
        base_twist=[f"base.{a}" for a in TWIST_AXES],
        links={
            name: {
                "position": [f"{name}.{a}" for a in ("x", "y", "z")],
                "rotation": [f"{name}.r{i}{j}" for i in range(3) for j in range(3)],
            }
            for name in link_names
        },
        coordinates={
            joint: [{"q": f"{joint}.c{c}.q", "qd": f"{joint}.c{c}.qd"} for c in (0, 1)]
            for joint in joint_links
        },
        wrenches={frame: [f"{frame}.{a}" for a in WRENCH_AXES] for frame in frames},
    )


def observations_to_frame(
    observations: Sequence[ObjectObservation], columns: ColumnMap, joint_links: Sequence[str]
) -> pd.DataFrame:
    rows: list[dict[str, float]] = []
    for obs in observations:
        row: dict[str, float] = {columns.time: obs.t}
        row.update(zip(columns.base_twist, obs.base_twist.tolist()))
        for name, cols in columns.links.items():
            pose = obs.link_poses[name]
            row.update(zip(cols["position"], pose.translation.tolist()))
            row.update(zip(cols["rotation"], pose.rotation.reshape(-1).tolist()))
        for j, joint in enumerate(joint_links):
            for c, cols in enumerate(columns.coordinates[joint]):
                row[cols["q"]] = float(obs.coordinates[j, c])
                row[cols["qd"]] = float(obs.velocities[j, c])
        for frame, cols in columns.wrenches.items():
            row.update(zip(cols, obs.wrenches[frame].tolist()))
        rows.append(row)
    return pd.DataFrame(rows)


def write_observations(
    path: str | Path,
    observations: Sequence[ObjectObservation],
    catalog: ArticulationCatalog,
) -> Path:
    """Write observations as CSV plus column-map sidecar, both atomically."""
    path = Path(path)
    if not observations:
        raise ObservationException("No observations to write", details={"path": str(path)})
    first = observations[0]
    columns = default_column_map(list(first.link_poses), catalog.links, list(first.wrenches))
    frame = observations_to_frame(observations, columns, catalog.links)
    write_atomic(path, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    write_atomic(sidecar_path(path), format_json(columns.model_dump()) + "\n")
    logger.info("observations_written", path=str(path), samples=len(observations))
    return path


def _columns(frame: pd.DataFrame, names: Sequence[str]) -> np.ndarray:
    missing = [name for name in names if name not in frame.columns]
    if missing:
        raise ObservationException(
            f"Observation file lacks columns {missing}", details={"missing": missing}
        )
    return frame.loc[:, list(names)].to_numpy(dtype=float)


def read_observations(
    path: str | Path, catalog: ArticulationCatalog, columns: ColumnMap | dict[str, Any] | None = None
) -> list[ObjectObservation]:
    """
    Read an observation CSV using its sidecar (or an explicit column map).

    Raises:
        ObservationException: On missing files or columns, or catalog joints absent
            from the column map
    """
    path = Path(path)
    if columns is None:
        side = sidecar_path(path)
        if not side.exists():
            raise ObservationException(
                f"Column map not found next to {path}", details={"expected": str(side)}
            )
        columns = side.read_text(encoding="utf-8")
        try:
            columns = ColumnMap.model_validate_json(columns)
        except ValidationError as e:
            raise ObservationException(
                f"Invalid column map {side}: {e.errors()[0].get('msg')}", details={"path": str(side)}
            ) from None
    elif isinstance(columns, dict):
        columns = ColumnMap.model_validate(columns)

    missing = [link for link in catalog.links if link not in columns.coordinates]
    if missing:
        raise ObservationException(
            f"Column map has no coordinates for joints {missing}", details={"missing": missing}
        )
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ObservationException(f"Cannot read observation file {path}", details={"error": str(e)}) from None

    times = _columns(frame, [columns.time])[:, 0]
    twists = _columns(frame, columns.base_twist)
    poses = {
        name: (_columns(frame, cols["position"]), _columns(frame, cols["rotation"]).reshape(-1, 3, 3))
        for name, cols in columns.links.items()
    }
    q = np.stack(
        [_columns(frame, [c["q"] for c in columns.coordinates[link]]) for link in catalog.links], axis=1
    )
    qd = np.stack(
        [_columns(frame, [c["qd"] for c in columns.coordinates[link]]) for link in catalog.links], axis=1
    )
    wrenches = {frame_name: _columns(frame, cols) for frame_name, cols in columns.wrenches.items()}

    observations = [
        ObjectObservation(
            t=float(times[k]),
            base_twist=twists[k],
            link_poses={name: Transform(rot[k], pos[k]) for name, (pos, rot) in poses.items()},
            coordinates=q[k],
            velocities=qd[k],
            wrenches={name: values[k] for name, values in wrenches.items()},
        )
        for k in range(len(times))
    ]
    logger.info("observations_read", path=str(path), samples=len(observations))
    return observations
