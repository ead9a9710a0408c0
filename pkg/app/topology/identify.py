"""
Momentum-based topology identification.

For each hypothesis the momentum history is differentiated by central differences
and compared with the measured net wrench:

    residual = sum_t | W(t) - h_dot(t) |     over interior samples

Each per-sample mismatch is taken about the observed base origin, which makes the
score independent of where the inertial frame is placed. The hypothesis with the
smallest residual is ranked first.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from app.dynamics.multibody import MultibodyModel
from app.dynamics.spatial import shift_force
from app.topology.catalog import ArticulationCatalog, TopologyHypothesis, enumerate_hypotheses
from app.topology.momentum import net_wrench, total_momentum
from app.topology.observations import ObjectObservation
from app.utils.exceptions import ObservationException
from app.utils.logging import get_logger
from app.utils.settings import get_settings

logger = get_logger(__name__)


@dataclass(frozen=True)
class TopologyRanking:
    """Hypotheses sorted best-first."""

    hypotheses: list[TopologyHypothesis]
    ambiguous: bool
    samples: int

    @property
    def best(self) -> TopologyHypothesis:
        return self.hypotheses[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "ambiguous": self.ambiguous,
            "samples": self.samples,
            "ranking": [h.to_dict() for h in self.hypotheses],
        }


def check_observations(observations: Sequence[ObjectObservation]) -> np.ndarray:
    """
    Validate sample count and time stamps.

    Raises:
        ObservationException: With fewer than 3 samples or non-increasing times
    """
    if len(observations) < 3:
        raise ObservationException(
            f"At least 3 observation samples are needed, got {len(observations)}",
            details={"samples": len(observations)},
        )
    times = np.array([obs.t for obs in observations])
    steps = np.diff(times)
    if np.any(steps <= 0):
        k = int(np.argmax(steps <= 0)) + 1
        raise ObservationException(
            f"Observation times are not increasing at sample {k}",
            details={"sample": k, "t": float(times[k])},
        )
    return times


def momentum_rate(momenta: np.ndarray, times: np.ndarray, smoothing: Optional[int] = None) -> np.ndarray:
    """
    Central-difference rate at the interior samples.

    Args:
        momenta: (T, 6) momentum history
        times: (T,) sample times
        smoothing: Optional centered moving-average width applied to the rate

    Returns:
        (T - 2, 6) rates for samples 1..T-2
    """
    rate = (momenta[2:] - momenta[:-2]) / (times[2:] - times[:-2])[:, None]
    if smoothing and smoothing > 1:
        rate = pd.DataFrame(rate).rolling(smoothing, center=True, min_periods=1).mean().to_numpy()
    return rate


def hypothesis_residual(
    model: MultibodyModel,
    hypothesis: TopologyHypothesis,
    observations: Sequence[ObjectObservation],
    wrenches: Optional[np.ndarray] = None,
    smoothing: Optional[int] = None,
) -> float:
    """Residual of one hypothesis over an observation history."""
    times = check_observations(observations)
    if wrenches is None:
        wrenches = np.array([net_wrench(model, obs) for obs in observations])
    hyp_model = hypothesis.build(model)
    momenta = np.array([total_momentum(model, hypothesis, obs, hyp_model) for obs in observations])
    rate = momentum_rate(momenta, times, smoothing)
    residual = 0.0
    for k in range(1, len(observations) - 1):
        base = observations[k].base_pose(model).translation
        residual += float(np.linalg.norm(shift_force(wrenches[k] - rate[k - 1], base)))
    return residual


def is_ambiguous(ranking: Sequence[TopologyHypothesis], rtol: Optional[float] = None) -> bool:
    """True when the best two residuals agree within ``rtol``."""
    if len(ranking) < 2:
        return False
    rtol = get_settings().topology_tie_rtol if rtol is None else rtol
    a, b = ranking[0].residual or 0.0, ranking[1].residual or 0.0
    return abs(b - a) <= rtol * max(abs(a), abs(b)) + 1e-12


def identify_topology(
    model: MultibodyModel,
    catalog: ArticulationCatalog,
    observations: Sequence[ObjectObservation],
    smoothing: Optional[int] = None,
    workers: Optional[int] = None,
) -> TopologyRanking:
    """
    Score every hypothesis of a catalog and rank them.

    Args:
        model: Object model (links, inertias, grasp frames)
        catalog: Two candidate joints per movable joint
        observations: Time-ordered samples
        smoothing: Optional moving-average width for the momentum rate
        workers: Threads used for scoring (default from settings)

    Returns:
        TopologyRanking sorted by residual, ties broken by assignment order

    Raises:
        ObservationException: On fewer than 3 samples or non-increasing times
        ConfigurationException: If the catalog does not fit the model or is too large
    """
    check_observations(observations)
    catalog.check_against(model)
    hypotheses = enumerate_hypotheses(catalog)
    wrenches = np.array([net_wrench(model, obs) for obs in observations])
    workers = workers or get_settings().topology_workers

    def score(hypothesis: TopologyHypothesis) -> TopologyHypothesis:
        residual = hypothesis_residual(model, hypothesis, observations, wrenches, smoothing)
        logger.debug("hypothesis_scored", label=hypothesis.label, residual=residual)
        return hypothesis.scored(residual)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(score, hypotheses))
    else:
        scored = [score(h) for h in hypotheses]

    ranked = sorted(scored, key=lambda h: (h.residual, h.assignment))
    ranking = TopologyRanking(ranked, is_ambiguous(ranked), len(observations))
    logger.info(
        "topology_identified",
        best=ranking.best.label,
        residual=ranking.best.residual,
        ambiguous=ranking.ambiguous,
        hypotheses=len(ranked),
    )
    return ranking
