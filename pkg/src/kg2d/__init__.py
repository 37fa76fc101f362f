"""Radial two-dimensional Klein-Gordon problem for cutoff potentials.

Bound states below threshold, their particle/antiparticle classification,
threshold phase shifts and the counting theorem relating the two.
"""

from .errors import KG2DError
from .exterior import ThresholdSide
from .levinson import LevinsonReport, detect_critical, lambda_ledger, verify_theorem
from .phase import count_threshold_crossings, tan_phase, threshold_phase, unwrap_phase
from .potential import Coupling, PotentialSpec, evaluate, validate
from .spectrum import BoundState, Kind, SpectrumResult, find_bound_states

__version__ = "0.1.0"

__all__ = [
    "BoundState", "Coupling", "KG2DError", "Kind", "LevinsonReport", "PotentialSpec",
    "SpectrumResult", "ThresholdSide", "count_threshold_crossings", "detect_critical",
    "evaluate", "find_bound_states", "lambda_ledger", "tan_phase", "threshold_phase",
    "unwrap_phase", "validate", "verify_theorem",
]
