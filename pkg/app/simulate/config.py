"""
Scenario file schema.

A scenario names both agent models, their initial postures, one plan per machine
state (contacts, com offset, partner joint targets, robot posture, dwell limits), the
transition thresholds, the controller gains and the integration settings.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.control.gains import GainsConfig
from app.control.partner_aware import ControlMode
from app.coupled.system import ContactSpec
from app.simulate.state_machine import MachineState
from app.utils.config_loader import ConfigLoader, apply_overrides
from app.utils.exceptions import ConfigurationException
from app.utils.logging import get_logger

logger = get_logger(__name__)

STAGES = (MachineState.S1, MachineState.S2, MachineState.S3, MachineState.S4)

Vec3 = tuple[float, float, float]


class AgentSetup(BaseModel):
    """Model file and initial configuration of one agent."""

    model_config = ConfigDict(extra="forbid")

    model: str
    base_xyz: Vec3 = (0.0, 0.0, 0.0)
    base_rpy: Vec3 = (0.0, 0.0, 0.0)
    joints: dict[str, float] = Field(default_factory=dict)
    base_velocity: tuple[float, float, float, float, float, float] = (0.0,) * 6
    joint_velocities: dict[str, float] = Field(default_factory=dict)


class ContactSetup(BaseModel):
    model_config = ConfigDict(extra="forbid")

    human: list[str] = Field(default_factory=list)
    robot: list[str] = Field(default_factory=list)
    mutual: bool = False


class StagePlan(BaseModel):
    """What happens while the machine is in one state."""

    model_config = ConfigDict(extra="forbid")

    contacts: ContactSetup
    com_offset: Vec3 = (0.0, 0.0, 0.0)
    duration: float = Field(default=1.0, gt=0)
    human_targets: dict[str, float] = Field(default_factory=dict)
    robot_posture: dict[str, float] = Field(default_factory=dict)
    min_dwell: float = Field(default=0.0, ge=0)
    max_dwell: Optional[float] = Field(default=None, gt=0)


class ServoMode(str, Enum):
    """How the partner turns its joint references into torques."""

    PD = "pd"
    GRAVITY_COMPENSATED = "gravity_compensated"
    COMPUTED_TORQUE = "computed_torque"


class ServoConfig(BaseModel):
    """
    Joint servo driving the partner in position mode.

    ``pd`` and ``gravity_compensated`` read kp/kd as torque gains (N m/rad, N m s/rad);
    ``computed_torque`` reads them as acceleration gains (1/s^2, 1/s) and inverts the
    partner's contact-supported dynamics.
    """

    model_config = ConfigDict(extra="forbid")

    mode: ServoMode = ServoMode.COMPUTED_TORQUE
    kp: float = Field(default=400.0, ge=0)
    kd: float = Field(default=40.0, ge=0)


class PostureConfig(BaseModel):
    """Robot joint-acceleration posture (1/s^2, 1/s) realized in the task null space."""

    model_config = ConfigDict(extra="forbid")

    kp: float = Field(default=25.0, ge=0)
    kd: float = Field(default=10.0, ge=0)


class MachineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hand_wrench_threshold: float = Field(gt=0)
    feet_threshold_1: float = Field(gt=0)
    feet_threshold_2: float = Field(gt=0)
    hysteresis: Optional[float] = Field(default=None, ge=0)


class StabilizationConfig(BaseModel):
    """Drift feedback; unset gains fall back to the HRI_BAUMGARTE_* settings."""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = True
    zeta: Optional[float] = Field(default=None, gt=0)
    omega: Optional[float] = Field(default=None, gt=0)


class ScenarioConfig(BaseModel):
    """Schema of a scenario file."""

    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    human: AgentSetup
    robot: AgentSetup
    mutual: tuple[str, str]
    human_servo: ServoConfig = Field(default_factory=ServoConfig)
    robot_posture: PostureConfig = Field(default_factory=PostureConfig)
    stages: dict[str, StagePlan]
    machine: MachineConfig
    gains: GainsConfig = Field(default_factory=GainsConfig)
    control_mode: ControlMode = ControlMode.PARTNER_AWARE
    sampled_control: bool = True
    dt: float = Field(default=1e-3, gt=0)
    duration: Optional[float] = Field(default=None, ge=0)
    seed: int = 0
    initial_perturbation: float = Field(default=0.0, ge=0)
    align_partner: bool = True
    reset_integral_on_transition: bool = False
    stabilization: StabilizationConfig = Field(default_factory=StabilizationConfig)

    @field_validator("stages")
    @classmethod
    def validate_stages(cls, v: dict[str, StagePlan]) -> dict[str, StagePlan]:
        expected = {s.value for s in STAGES}
        if set(v) != expected:
            raise ValueError(f"stages must be exactly {sorted(expected)}, got {sorted(v)}")
        return v

    @model_validator(mode="after")
    def validate_dwell(self) -> "ScenarioConfig":
        for key, stage in self.stages.items():
            if stage.max_dwell is not None and stage.max_dwell < stage.min_dwell:
                raise ValueError(f"stages.{key}: max_dwell is below min_dwell")
        if self.duration is None and self.dwell_budget is None:
            raise ValueError("duration is required when a stage has no max_dwell")
        return self

    @property
    def dwell_budget(self) -> Optional[float]:
        """Longest time the machine can take to finish, or None when a stage is unbounded."""
        limits = [stage.max_dwell for stage in self.stages.values()]
        if any(limit is None for limit in limits):
            return None
        return float(sum(limits))

    @property
    def time_limit(self) -> float:
        """
        Simulated-time cap.

        An explicit ``duration`` governs. Without one the run ends when the machine
        completes S4, which the dwell budget bounds; one step of slack per stage covers
        transitions that land a step late.
        """
        if self.duration is not None:
            return self.duration
        return self.dwell_budget + (len(STAGES) + 1) * self.dt

    def stage(self, state: MachineState) -> StagePlan:
        return self.stages[state.value]

    def contact_spec(self, state: MachineState) -> ContactSpec:
        contacts = self.stage(state).contacts
        return ContactSpec(
            env_contacts_human=tuple(contacts.human),
            env_contacts_robot=tuple(contacts.robot),
            mutual=self.mutual if contacts.mutual else None,
        )

    @property
    def feet_frames(self) -> tuple[str, ...]:
        """Robot environment contacts of the standing phase."""
        return tuple(self.stage(MachineState.S3).contacts.robot)

    @property
    def seat_frames(self) -> tuple[str, ...]:
        """Robot environment contacts of the seated phase that are not feet."""
        feet = set(self.feet_frames)
        return tuple(f for f in self.stage(MachineState.S1).contacts.robot if f not in feet)


def parse_scenario(document: dict[str, Any]) -> ScenarioConfig:
    """
    Validate a scenario document.

    Raises:
        ConfigurationException: Naming the first offending field
    """
    try:
        return ScenarioConfig.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        path = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigurationException(
            f"Invalid scenario field '{path}': {first.get('msg')}",
            details={"field": path, "errors": len(e.errors())},
        ) from None


def load_scenario(
    path: str | Path, overrides: Iterable[str] = ()
) -> tuple[ScenarioConfig, Path, dict[str, Any]]:
    """
    Load a scenario file and apply ``key=value`` overrides.

    Args:
        path: Scenario JSON file
        overrides: Dotted-key overrides, applied after the file

    Returns:
        (validated config, directory model paths resolve against, applied overrides)
    """
    path = Path(path)
    loader = ConfigLoader(path.parent)
    raw = loader.load_json(path)
    merged, applied = apply_overrides(raw, overrides)
    config = parse_scenario(merged)
    logger.info("scenario_loaded", name=config.name, path=str(path), overrides=sorted(applied))
    return config, path.parent, applied
