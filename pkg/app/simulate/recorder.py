"""
Scenario log records and their CSV / JSON serialization.

The CSV column order is fixed by the models and the union of all contact slots of
the scenario; inactive slots are zero-filled. Floats are written with 17
significant digits so that identical runs give identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import pandas as pd

from app.dynamics.multibody import AgentState
from app.simulate.state_machine import MachineState
from app.utils.formatting import format_json, write_atomic

FLOAT_FORMAT = "%.17g"
AXES = ("x", "y", "z")
TWIST_AXES = ("vx", "vy", "vz", "wx", "wy", "wz")
WRENCH_AXES = ("fx", "fy", "fz", "mx", "my", "mz")


@dataclass
class LogRecord:
    """One simulation step."""

    t: float
    state: MachineState
    switched: bool
    human: AgentState
    robot: AgentState
    tau_h: np.ndarray
    tau_r: np.ndarray
    wrenches: dict[str, np.ndarray]
    chi: np.ndarray
    chi_d: np.ndarray
    chi_err: np.ndarray
    alpha: float
    beta_norm: float
    V: float
    Vdot_pred: float
    Vdot_fd: float
    residual: float
    drift: float


def _agent_columns(prefix: str, joints: Sequence[str]) -> list[str]:
    columns = [f"{prefix}.base_pos.{a}" for a in AXES]
    columns += [f"{prefix}.base_rot.r{i}{j}" for i in range(3) for j in range(3)]
    columns += [f"{prefix}.s.{name}" for name in joints]
    columns += [f"{prefix}.base_vel.{a}" for a in TWIST_AXES]
    columns += [f"{prefix}.s_dot.{name}" for name in joints]
    return columns


def _agent_values(state: AgentState) -> list[float]:
    return [
        *state.base_pos.tolist(),
        *state.base_rot.reshape(-1).tolist(),
        *state.s.tolist(),
        *state.base_vel.tolist(),
        *state.s_dot.tolist(),
    ]


@dataclass(frozen=True)
class LogLayout:
    """Column layout of a scenario log."""

    human_joints: tuple[str, ...]
    robot_joints: tuple[str, ...]
    contact_labels: tuple[str, ...]

    @property
    def columns(self) -> list[str]:
        columns = ["t", "state", "switched"]
        columns += _agent_columns("human", self.human_joints)
        columns += _agent_columns("robot", self.robot_joints)
        columns += [f"tau_h.{name}" for name in self.human_joints]
        columns += [f"tau_r.{name}" for name in self.robot_joints]
        for label in self.contact_labels:
            columns += [f"f_star.{label}.{a}" for a in WRENCH_AXES]
        for name in ("chi", "chi_d", "chi_err"):
            columns += [f"{name}.{a}" for a in ("lx", "ly", "lz", "ax", "ay", "az")]
        columns += ["alpha", "beta_norm", "V", "Vdot_pred", "Vdot_fd", "residual", "drift"]
        return columns

    def row(self, record: LogRecord) -> list[Any]:
        values: list[Any] = [record.t, record.state.value, int(record.switched)]
        values += _agent_values(record.human)
        values += _agent_values(record.robot)
        values += record.tau_h.tolist() + record.tau_r.tolist()
        for label in self.contact_labels:
            values += np.asarray(record.wrenches.get(label, np.zeros(6)), dtype=float).tolist()
        values += record.chi.tolist() + record.chi_d.tolist() + record.chi_err.tolist()
        values += [
            record.alpha,
            record.beta_norm,
            record.V,
            record.Vdot_pred,
            record.Vdot_fd,
            record.residual,
            record.drift,
        ]
        return values


def records_to_frame(records: Iterable[LogRecord], layout: LogLayout) -> pd.DataFrame:
    return pd.DataFrame([layout.row(r) for r in records], columns=layout.columns)


def write_log(frame: pd.DataFrame, path: Path) -> Path:
    """Write the CSV log atomically."""
    text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return write_atomic(Path(path), text)


def write_summary(summary: dict[str, Any], path: Path) -> Path:
    return write_atomic(Path(path), format_json(summary) + "\n")


def read_log(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)
