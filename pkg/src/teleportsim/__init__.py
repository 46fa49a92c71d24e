"""Probabilistic quantum teleportation over partially entangled channels.

The package simulates and cross-checks three single-hop teleportation
schemes over a pure but non-maximally entangled pair, plus two
assistant-mediated relay scenarios built from them:

* ``typical``: Bell measurement at the sender, conditional amplitude
  filtering at a receiver who knows the channel.
* ``sender-povm``: a five-outcome generalized measurement at a sender who
  knows the channel; the receiver applies only Pauli-type corrections.
* ``sender-circuit``: the same scheme realized as a unitary dilation on an
  ancilla followed by projective measurements.

Exact branch enumeration lives in :mod:`teleportsim.analysis`, vectorised
Monte Carlo trials in :mod:`teleportsim.backend` (numba-accelerated with a
pure-numpy fallback), and the self-verification suite in
:mod:`teleportsim.verify`.
"""

from .analysis import (
    Branch,
    RandomInput,
    Report,
    ScenarioConfig,
    analytic_success,
    branch_labels,
    enumerate_branches,
    monte_carlo,
)
from .backend import available_backends, resolve_backend, run_trials, warmup
from .errors import (
    BackendError,
    DegenerateOutcome,
    InvalidArgument,
    InvalidChannel,
    InvalidConfig,
    InvariantViolation,
    KnowledgeError,
    TeleportSimError,
)
from .operators import ChannelParams, CorrectionCode, InputQubit
from .protocols import (
    RELAY_ASSISTANT,
    RELAY_ENDPOINTS,
    SCHEME_CIRCUIT,
    SCHEME_POVM,
    SCHEME_TYPICAL,
    PartyKnowledge,
    RelayRecord,
    TeleportationRecord,
    run_relay,
    run_sender_circuit,
    run_sender_povm,
    run_typical,
)
from .statevec import DensityMatrix, StateVector, UnitaryMatrix
from .verify import run_checks

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "Branch",
    "ChannelParams",
    "CorrectionCode",
    "DegenerateOutcome",
    "DensityMatrix",
    "InputQubit",
    "InvalidArgument",
    "InvalidChannel",
    "InvalidConfig",
    "InvariantViolation",
    "KnowledgeError",
    "PartyKnowledge",
    "RandomInput",
    "RelayRecord",
    "Report",
    "RELAY_ASSISTANT",
    "RELAY_ENDPOINTS",
    "SCHEME_CIRCUIT",
    "SCHEME_POVM",
    "SCHEME_TYPICAL",
    "ScenarioConfig",
    "StateVector",
    "TeleportSimError",
    "TeleportationRecord",
    "UnitaryMatrix",
    "analytic_success",
    "available_backends",
    "branch_labels",
    "enumerate_branches",
    "monte_carlo",
    "resolve_backend",
    "run_checks",
    "run_relay",
    "run_sender_circuit",
    "run_sender_povm",
    "run_trials",
    "run_typical",
    "warmup",
    "__version__",
]
