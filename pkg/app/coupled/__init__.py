"""
Coupled human-robot dynamics: composite system assembly and wrench resolution.
"""

from app.coupled.system import (
    Agent,
    ConstraintMatrices,
    ContactSpec,
    CoupledSystem,
    SystemState,
    align_partner,
    assemble,
    constraint_matrices,
    record_anchors,
)
from app.coupled.wrenches import (
    CoupledTerms,
    Stabilization,
    WrenchSolution,
    agent_wrench_terms,
    coupled_terms,
    resolve_wrenches,
    robot_wrench_terms,
)

__all__ = [
    "Agent",
    "ConstraintMatrices",
    "ContactSpec",
    "CoupledSystem",
    "SystemState",
    "align_partner",
    "assemble",
    "constraint_matrices",
    "record_anchors",
    "CoupledTerms",
    "Stabilization",
    "WrenchSolution",
    "agent_wrench_terms",
    "coupled_terms",
    "resolve_wrenches",
    "robot_wrench_terms",
]
