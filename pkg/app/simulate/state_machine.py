"""
Four-state stand-up machine.

S1 (seated, grasped) -> S2 (pull-up) -> S3 (on the feet) -> S4 (standing) -> Done.
Each transition fires when its wrench measure exceeds a threshold widened by a
hysteresis band, after a minimum dwell. A maximum dwell forces the transition so
that a run cannot stall in one state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

from app.coupled.system import ContactSpec
from app.utils.exceptions import ConfigurationException
from app.utils.logging import get_logger
from app.utils.settings import get_settings

logger = get_logger(__name__)


class MachineState(str, Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    DONE = "Done"

    @property
    def index(self) -> int:
        return list(MachineState).index(self)

    def next(self) -> MachineState:
        members = list(MachineState)
        return members[min(self.index + 1, len(members) - 1)]


class TransitionReason(str, Enum):
    THRESHOLD = "threshold"
    DWELL_TIMEOUT = "dwell_timeout"
    COMPLETED = "completed"


@dataclass(frozen=True)
class Transition:
    t: float
    source: MachineState
    target: MachineState
    reason: TransitionReason
    measure: float

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "from": self.source.value,
            "to": self.target.value,
            "reason": self.reason.value,
            "measure": self.measure,
        }


class MachineStep(NamedTuple):
    state: MachineState
    contacts: ContactSpec
    transitioned: bool


@dataclass
class StandupStateMachine:
    """
    Threshold-driven stand-up sequencing.

    The hand measure drives S1 -> S2, the first feet measure S2 -> S3 and the
    second feet measure S3 -> S4. S4 completes after its maximum dwell, if set.
    """

    hand_wrench_threshold: float
    feet_threshold_1: float
    feet_threshold_2: float
    contact_sets: dict[MachineState, ContactSpec]
    min_dwell: dict[MachineState, float] = field(default_factory=dict)
    max_dwell: dict[MachineState, Optional[float]] = field(default_factory=dict)
    hysteresis: float = field(default_factory=lambda: get_settings().hysteresis_band)
    state: MachineState = MachineState.S1
    entered_at: float = 0.0
    transitions: list[Transition] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name in ("hand_wrench_threshold", "feet_threshold_1", "feet_threshold_2"):
            if not getattr(self, name) > 0:
                raise ConfigurationException(
                    f"Threshold '{name}' must be positive", details={name: getattr(self, name)}
                )
        missing = [s.value for s in (MachineState.S1, MachineState.S2, MachineState.S3, MachineState.S4)
                   if s not in self.contact_sets]
        if missing:
            raise ConfigurationException(
                f"Contact sets missing for states {missing}", details={"missing": missing}
            )

    def threshold(self, state: MachineState) -> Optional[float]:
        return {
            MachineState.S1: self.hand_wrench_threshold,
            MachineState.S2: self.feet_threshold_1,
            MachineState.S3: self.feet_threshold_2,
        }.get(state)

    def contacts_for(self, state: MachineState) -> ContactSpec:
        if state is MachineState.DONE:
            return self.contact_sets[MachineState.S4]
        return self.contact_sets[state]

    @property
    def active_contacts(self) -> ContactSpec:
        return self.contacts_for(self.state)

    def measure_for(self, state: MachineState, hand: float, feet: float) -> float:
        return hand if state is MachineState.S1 else feet

    def step(self, hand: float, feet: float, t: float = 0.0) -> MachineStep:
        """
        Advance the machine with the current wrench measures.

        Args:
            hand: Norm of the mutual (hand) wrench
            feet: Feet measure for the current state
            t: Current time

        Returns:
            MachineStep(state, active contacts, transitioned)
        """
        state = self.state
        if state is MachineState.DONE:
            return MachineStep(state, self.active_contacts, False)

        elapsed = t - self.entered_at
        measure = self.measure_for(state, hand, feet)
        reason: Optional[TransitionReason] = None
        threshold = self.threshold(state)
        if (
            threshold is not None
            and elapsed >= self.min_dwell.get(state, 0.0)
            and measure > threshold * (1.0 + self.hysteresis)
        ):
            reason = TransitionReason.THRESHOLD
        else:
            limit = self.max_dwell.get(state)
            if limit is not None and elapsed >= limit:
                reason = TransitionReason.COMPLETED if state is MachineState.S4 else TransitionReason.DWELL_TIMEOUT

        if reason is None:
            return MachineStep(state, self.active_contacts, False)

        target = state.next()
        self.transitions.append(Transition(t, state, target, reason, measure))
        self.state = target
        self.entered_at = t
        logger.info(
            "state_transition",
            t=t,
            source=state.value,
            target=target.value,
            reason=reason.value,
            measure=measure,
        )
        return MachineStep(target, self.active_contacts, True)


def machine_step(
    sm: StandupStateMachine, hand: float, feet: float, t: float = 0.0
) -> MachineStep:
    """Functional form of StandupStateMachine.step."""
    return sm.step(hand, feet, t)
