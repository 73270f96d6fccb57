"""Entanglement of the two-qubit states obtained by tracing out half of an
antisymmetric four-qubit (fermionic) pure state.

Closed forms for concurrence, negativity, purity, spectra, reduced matrices,
residual tangles and the Bures metric, each paired with an independent
numerical oracle.
"""

from .state import FamilyParams, InvariantSet, invariants, make_params, named_state, random_state, random_states
from .measures import (
    concurrence_closed, measure_report, negativity_closed, purity, residual_tangles,
    negativity_oracle, wootters_oracle,
)
from .density import canonicalize, partial_trace, reduced_closed, rho_from_params
from .bures import bures_closed, bures_trace_oracle, bures_uhlmann_diagnostic

__version__ = "0.1.0"

__all__ = [
    "FamilyParams", "InvariantSet", "invariants", "make_params", "named_state", "random_state",
    "random_states", "concurrence_closed", "negativity_closed", "purity", "measure_report",
    "residual_tangles", "wootters_oracle", "negativity_oracle", "canonicalize", "partial_trace",
    "reduced_closed", "rho_from_params", "bures_closed", "bures_trace_oracle", "bures_uhlmann_diagnostic",
]
