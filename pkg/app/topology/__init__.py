"""
Articulated-object topology identification from momentum and grasp wrenches.
"""

from app.topology.catalog import (
    ArticulationCatalog,
    TopologyHypothesis,
    enumerate_hypotheses,
    load_catalog,
    make_hypothesis,
)
from app.topology.identify import TopologyRanking, hypothesis_residual, identify_topology, is_ambiguous
from app.topology.momentum import link_momentum, net_wrench, total_momentum
from app.topology.observations import (
    ObjectObservation,
    candidate_coordinates,
    read_observations,
    write_observations,
)
from app.topology.synthetic import MotionProfile, generate_object_observations

__all__ = [
    "ArticulationCatalog",
    "TopologyHypothesis",
    "enumerate_hypotheses",
    "load_catalog",
    "make_hypothesis",
    "TopologyRanking",
    "hypothesis_residual",
    "identify_topology",
    "is_ambiguous",
    "link_momentum",
    "net_wrench",
    "total_momentum",
    "ObjectObservation",
    "candidate_coordinates",
    "read_observations",
    "write_observations",
    "MotionProfile",
    "generate_object_observations",
]
