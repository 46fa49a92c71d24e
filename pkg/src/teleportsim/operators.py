"""Channel parameters and the operator algebra of both teleportation schemes.

A partially entangled channel is ``a|00> + b|11>`` with ``a`` real,
``|a| >= |b| > 0``.  Everything that depends on the channel is built
here, by the party that is allowed to know it:

* the receiver-side conditional corrections (one 4x4 unitary per Bell
  outcome) used by the scheme where the receiver holds the channel
  knowledge, and
* the sender-side five-operator generalized measurement, plus its 8x8
  circuit dilation, used by the scheme where the sender holds it.

The final single-qubit corrections of the sender-side scheme are
channel-independent by design; ``correction_for`` maps outcome labels to
them without ever seeing a channel.
"""

from __future__ import annotations

import cmath
import enum
import math
import numbers
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidChannel
from .statevec import ATOL_ALGEBRA, KrausSet, StateVector, UnitaryMatrix

#: Smallest admissible |b|; below this the channel carries no usable
#: entanglement and every derived quantity degenerates.
MIN_WEAK_AMPLITUDE = 1e-7

IDENTITY_2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")

POVM_LABELS = ("M0", "M1", "M2", "M3", "M4")


@dataclass(frozen=True)
class ChannelParams:
    """Amplitudes (a, b) of the shared pair ``a|00> + b|11>``.

    ``a`` is real and positive by convention (a global phase plus a
    phase absorbed into ``b`` always allows this); ``b`` may be complex.
    The ordering ``|a| >= |b|`` makes ``b`` the weak branch, which is
    what limits the success probability to ``2|b|^2``.
    """

    a: float
    b: complex

    def __post_init__(self):
        if isinstance(self.a, numbers.Complex) and not isinstance(self.a, numbers.Real):
            raise InvalidChannel("amplitude a must be real (phase belongs to b)")
        a = float(self.a)
        b = complex(self.b)
        if a <= 0.0:
            raise InvalidChannel(f"amplitude a must be positive, got {a!r}")
        if abs(a * a + abs(b) ** 2 - 1.0) > ATOL_ALGEBRA:
            raise InvalidChannel(
                f"channel amplitudes ({a!r}, {b!r}) are not normalized"
            )
        if abs(b) <= MIN_WEAK_AMPLITUDE:
            raise InvalidChannel(f"|b| = {abs(b):.2e} leaves no usable entanglement")
        if abs(b) > a + ATOL_ALGEBRA:
            raise InvalidChannel(
                f"|b| = {abs(b)!r} exceeds a = {a!r}; swap the amplitudes"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_b_squared(cls, b_squared: float, phase: float = 0.0) -> "ChannelParams":
        """Channel with weak-branch weight ``b_squared`` in (0, 0.5]."""
        if not 0.0 < b_squared <= 0.5:
            raise InvalidChannel(f"b2 must lie in (0, 0.5], got {b_squared!r}")
        b = math.sqrt(b_squared) * cmath.exp(1j * phase)
        if phase == 0.0:
            b = complex(math.sqrt(b_squared))
        return cls(math.sqrt(1.0 - b_squared), b)

    @property
    def a_squared(self) -> float:
        return self.a * self.a

    @property
    def b_squared(self) -> float:
        return abs(self.b) ** 2

    @property
    def b_phase(self) -> float:
        return float(cmath.phase(self.b))

    @property
    def success_probability(self) -> float:
        """Best achievable faithful-transfer probability, ``2|b|^2``."""
        return 2.0 * self.b_squared

    def pair_state(self) -> StateVector:
        """The shared two-qubit resource ``a|00> + b|11>``."""
        return StateVector([self.a, 0.0, 0.0, self.b])


@dataclass(frozen=True)
class InputQubit:
    """Unknown single-qubit payload ``alpha|0> + beta|1>``."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        alpha = complex(self.alpha)
        beta = complex(self.beta)
        norm = abs(alpha) ** 2 + abs(beta) ** 2
        if abs(norm - 1.0) > ATOL_ALGEBRA:
            raise InvalidArgument(
                f"input amplitudes ({alpha!r}, {beta!r}) are not normalized"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def haar_random(cls, rng: np.random.Generator) -> "InputQubit":
        raw = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        raw /= np.linalg.norm(raw)
        return cls(complex(raw[0]), complex(raw[1]))

    def as_state(self) -> StateVector:
        return StateVector([self.alpha, self.beta])


class CorrectionCode(enum.Enum):
    """Classically-communicated final correction at the receiver."""

    IDENTITY = "identity"
    Z = "z"
    X = "x"
    IY = "iy"
    FAIL = "fail"

    def matrix(self) -> np.ndarray | None:
        """2x2 correction unitary, or None when the run is a failure."""
        if self is CorrectionCode.IDENTITY:
            return IDENTITY_2.copy()
        if self is CorrectionCode.Z:
            return PAULI_Z.copy()
        if self is CorrectionCode.X:
            return PAULI_X.copy()
        if self is CorrectionCode.IY:
            # i * sigma_y = [[0, 1], [-1, 0]]; the phase convention keeps
            # the matrix real, and a global phase is unobservable anyway.
            return np.array([[0, 1], [-1, 0]], dtype=np.complex128)
        return None


def bell_basis() -> tuple[StateVector, StateVector, StateVector, StateVector]:
    """The four Bell states, ordered phi+, phi-, psi+, psi-."""
    r = 1.0 / math.sqrt(2.0)
    return (
        StateVector([r, 0, 0, r]),
        StateVector([r, 0, 0, -r]),
        StateVector([0, r, r, 0]),
        StateVector([0, r, -r, 0]),
    )


def amplitude_filter_matrix(ch: ChannelParams, conjugated: bool = True) -> np.ndarray:
    """Raw 2x2 block that diverts excess heavy-branch weight to a flag qubit.

    Acting on an ancilla prepared in |0>, the first column keeps a
    fraction ``b/a`` of the amplitude in the success flag |0> and routes
    the remainder ``sqrt(1 - |b|^2/|a|^2)`` into the failure flag |1>.

    The lower-right entry must carry a complex conjugate (``-conj(b)/a``)
    for the matrix to be unitary when ``b`` is complex; ``conjugated=False``
    reproduces the naive ``-b/a`` variant, which is kept only so the
    verification suite can demonstrate that it fails the unitarity check.
    The ancilla starts in |0>, so the protocol never exercises the column
    the two variants disagree on.
    """
    ratio = ch.b / ch.a
    s = math.sqrt(max(0.0, 1.0 - ch.b_squared / ch.a_squared))
    lower_right = -np.conj(ratio) if conjugated else -ratio
    return np.array([[ratio, s], [s, lower_right]], dtype=np.complex128)


def amplitude_filter(ch: ChannelParams) -> UnitaryMatrix:
    """Unitary amplitude filter for the given channel."""
    return UnitaryMatrix(amplitude_filter_matrix(ch))


def receiver_correction(outcome: int, ch: ChannelParams) -> UnitaryMatrix:
    """Receiver-side conditional unitary for Bell outcome ``outcome``.

    Acts on (payload qubit, flag ancilla) with the payload qubit as the
    most significant index.  Block layout per outcome, with A the
    amplitude filter and Z the Pauli-Z on the ancilla:

        0 (phi+): [[A, 0], [0,  Z]]      2 (psi+): [[0,  Z], [A, 0]]
        1 (phi-): [[A, 0], [0, -Z]]      3 (psi-): [[0, -Z], [A, 0]]

    Conditioned on the payload qubit, A filters the heavy branch while
    the ancilla flags success (|0>) or failure (|1>); the Z blocks undo
    the sign picked up by the odd Bell outcomes and, for outcomes 2 and
    3, the block swap undoes the bit flip.
    """
    if outcome not in (0, 1, 2, 3):
        raise InvalidArgument(f"Bell outcome must be 0..3, got {outcome!r}")
    A = amplitude_filter_matrix(ch)
    Z = PAULI_Z
    u = np.zeros((4, 4), dtype=np.complex128)
    if outcome == 0:
        u[:2, :2] = A
        u[2:, 2:] = Z
    elif outcome == 1:
        u[:2, :2] = A
        u[2:, 2:] = -Z
    elif outcome == 2:
        u[:2, 2:] = Z
        u[2:, :2] = A
    else:
        u[:2, 2:] = -Z
        u[2:, :2] = A
    return UnitaryMatrix(u)


def sender_dilation(ch: ChannelParams) -> UnitaryMatrix:
    """8x8 circuit realization of the sender-side measurement.

    Acts on (sender payload, sender half of the pair, flag ancilla) and
    is block-diagonal with two copies of the phi+ receiver correction:
    measuring the ancilla and then the Bell basis on the first two
    qubits reproduces the five-operator generalized measurement exactly.
    """
    block = receiver_correction(0, ch).matrix
    u = np.zeros((8, 8), dtype=np.complex128)
    u[:4, :4] = block
    u[4:, 4:] = block
    return UnitaryMatrix(u)


def measurement_operators(ch: ChannelParams) -> KrausSet:
    """Sender-side five-outcome generalized measurement on (payload, pair half).

    Outcomes M0..M3 occur with probability ``|b|^2 / 2`` each regardless
    of the payload and leave the receiver one Pauli frame away from the
    payload state; M4 is the failure outcome with probability
    ``1 - 2|b|^2``.
    """
    a, b = ch.a, ch.b
    scale = 1.0 / (math.sqrt(2.0) * a)
    s = math.sqrt(max(0.0, 1.0 - ch.b_squared / ch.a_squared))

    def rank_one(col, row):
        return scale * np.outer(
            np.array(col, dtype=np.complex128), np.array(row, dtype=np.complex128)
        )

    ops = [
        rank_one([a, 0, 0, b], [b, 0, 0, a]),
        rank_one([a, 0, 0, -b], [b, 0, 0, -a]),
        rank_one([0, b, a, 0], [0, a, b, 0]),
        rank_one([0, b, -a, 0], [0, a, -b, 0]),
        s * np.diag([1.0, 0.0, 1.0, 0.0]).astype(np.complex128),
    ]
    return KrausSet(ops, POVM_LABELS)


#: Final corrections per sender-measurement outcome.  The table is part
#: of the protocol contract: it contains no channel parameters.
_POVM_CORRECTIONS = {
    "M0": CorrectionCode.IDENTITY,
    "M1": CorrectionCode.Z,
    "M2": CorrectionCode.X,
    "M3": CorrectionCode.IY,
    "M4": CorrectionCode.FAIL,
}

_CIRCUIT_CORRECTIONS = {
    (0, "phi+"): CorrectionCode.IDENTITY,
    (0, "phi-"): CorrectionCode.Z,
    (0, "psi+"): CorrectionCode.X,
    (0, "psi-"): CorrectionCode.IY,
}


def correction_for(scheme: str, outcome) -> CorrectionCode:
    """Receiver correction for a sender-side measurement outcome.

    ``scheme`` is "sender-povm" (outcome: label "M0".."M4") or
    "sender-circuit" (outcome: tuple of flag bit and Bell label, with
    the Bell label absent or None on flag 1).  Deliberately takes no
    channel parameters: the receiver of the sender-side schemes acts on
    classical outcome labels alone.
    """
    if scheme == "sender-povm":
        try:
            return _POVM_CORRECTIONS[outcome]
        except (KeyError, TypeError):
            raise InvalidArgument(f"unknown measurement label {outcome!r}") from None
    if scheme == "sender-circuit":
        if isinstance(outcome, tuple) and len(outcome) >= 1:
            if outcome[0] == 1:
                return CorrectionCode.FAIL
            key = (0, outcome[1] if len(outcome) > 1 else None)
            if key in _CIRCUIT_CORRECTIONS:
                return _CIRCUIT_CORRECTIONS[key]
        raise InvalidArgument(f"unknown circuit outcome {outcome!r}")
    raise InvalidArgument(f"no correction table for scheme {scheme!r}")
