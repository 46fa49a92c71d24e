"""Party-structured execution of the teleportation protocols.

Three single-hop procedures and a two-hop relay are modeled as explicit
message-passing protocols between Alice (sender), Bob (receiver) and,
for relays, the assistant Charlie:

* ``run_typical``     - Bell measurement at the sender; the *receiver*
  holds the channel knowledge, attaches a flag ancilla and applies the
  conditional correction.  Success is the receiver's flag reading 0.
* ``run_sender_povm`` - the five-operator generalized measurement at the
  *sender*; the receiver applies a channel-independent Pauli correction.
* ``run_sender_circuit`` - same physics realized as a unitary dilation:
  the sender attaches the flag ancilla, applies an 8x8 unitary, measures
  the flag and then the Bell basis.
* ``run_relay``       - composes a typical hop and a sender-side hop
  through Charlie, for the two knowledge assignments.

Which party may read which ChannelParams is part of the protocol
contract.  Channel access is visible in the step-function signatures:
steps executed by parties without channel knowledge take no
ChannelParams argument at all, and runners raise KnowledgeError when the
declared knowledge does not cover what their scheme requires.

Classical messages carry measurement outcome labels only.  A party's
local measurement is recorded as a message to itself, so the trace lists
every measurement exactly once; in the assistant-mediated relay no
payload derived from the first hop's flag ever reaches Alice or Bob.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InvalidArgument, KnowledgeError
from .operators import (
    BELL_LABELS,
    POVM_LABELS,
    ChannelParams,
    CorrectionCode,
    InputQubit,
    bell_basis,
    correction_for,
    measurement_operators,
    receiver_correction,
    sender_dilation,
)
from .statevec import (
    DensityMatrix,
    StateVector,
    apply_unitary,
    basis_state,
    computational_basis,
    fidelity_pure,
    generalized_measure,
    permute_qubits,
    projective_measure,
    pure_subsystem_state,
    tensor_product,
)

SCHEME_TYPICAL = "typical"
SCHEME_POVM = "sender-povm"
SCHEME_CIRCUIT = "sender-circuit"
SINGLE_HOP_SCHEMES = (SCHEME_TYPICAL, SCHEME_POVM, SCHEME_CIRCUIT)

RELAY_ASSISTANT = "relay-assistant"
RELAY_ENDPOINTS = "relay-endpoints"
RELAY_SCENARIOS = (RELAY_ASSISTANT, RELAY_ENDPOINTS)

#: Channel identifiers used by the relay topology Alice - Charlie - Bob.
UPLINK = "alice-charlie"
DOWNLINK = "charlie-bob"


@dataclass(frozen=True)
class PartyKnowledge:
    """Which channels a party is allowed to read."""

    party: str
    known_channels: frozenset[str]

    def __init__(self, party: str, known_channels: Iterable[str] = ()):
        object.__setattr__(self, "party", str(party))
        object.__setattr__(self, "known_channels", frozenset(known_channels))

    def knows(self, channel_id: str) -> bool:
        return channel_id in self.known_channels


@dataclass(frozen=True)
class ClassicalMessage:
    """One classical transmission; payload entries are (kind, label) pairs.

    A message with ``sender == recipient`` records a local measurement.
    Payload kinds are "bell" (Bell-basis label), "flag" (ancilla bit) and
    "povm" (generalized-measurement label); nothing else is ever sent.
    """

    sender: str
    recipient: str
    payload: tuple

    def __init__(self, sender: str, recipient: str, payload: Iterable):
        object.__setattr__(self, "sender", str(sender))
        object.__setattr__(self, "recipient", str(recipient))
        object.__setattr__(self, "payload", tuple(tuple(p) for p in payload))


@dataclass(frozen=True, eq=False)
class TeleportationRecord:
    """Complete account of one single-hop run."""

    scheme: str
    outcome_trace: tuple[ClassicalMessage, ...]
    branch_probability: float
    success: bool
    fidelity: float
    final_state: DensityMatrix


@dataclass(frozen=True, eq=False)
class RelayRecord:
    """Two-hop run; ``hop2`` is None when the first hop already failed."""

    scenario: str
    hop1: TeleportationRecord
    hop2: TeleportationRecord | None
    success: bool


class SequenceRng:
    """Replays a fixed sequence of uniforms through the ``random()`` protocol.

    Lets tests and the relay runner drive the samplers with
    predetermined variates, e.g. to replay the per-trial rows of the
    Monte Carlo engine through the reference runners.
    """

    def __init__(self, values: Iterable[float]):
        self._values = [float(v) for v in values]
        self._next = 0

    def random(self) -> float:
        if self._next >= len(self._values):
            raise InvalidArgument("replay sequence exhausted")
        v = self._values[self._next]
        self._next += 1
        return v


def _require_channel(knowledge: PartyKnowledge, channel_id: str, purpose: str):
    if not knowledge.knows(channel_id):
        raise KnowledgeError(
            f"party {knowledge.party!r} does not know channel {channel_id!r} "
            f"but must {purpose}"
        )


def _require_ignorance(knowledge: PartyKnowledge, channel_ids, scenario: str):
    held = knowledge.known_channels.intersection(channel_ids)
    if held:
        raise KnowledgeError(
            f"scenario {scenario!r} requires {knowledge.party!r} to hold no "
            f"knowledge of {sorted(held)}"
        )


def prepare_total_state(inp: InputQubit, ch: ChannelParams) -> StateVector:
    """Payload qubit joined with the shared pair: qubits (1, 2, 3).

    Qubit 0 is the unknown payload, qubit 1 the sender's half of the
    pair, qubit 2 the receiver's half.
    """
    return tensor_product([inp.as_state(), ch.pair_state()])


# ---------------------------------------------------------------------------
# per-party protocol steps


def bell_measurement_step(state: StateVector, targets, rng):
    """Bell-basis measurement on two qubits; needs no channel knowledge."""
    result = projective_measure(state, bell_basis(), targets, rng)
    return BELL_LABELS[result.outcome], result.probability, result.state


def typical_receiver_step(state: StateVector, bell_label: str, ch: ChannelParams, rng):
    """Receiver side of the typical scheme (channel knowledge required).

    Attaches the flag ancilla in |0>, applies the conditional correction
    for the announced Bell outcome on (payload, flag), and measures the
    flag.  Returns (flag bit, step probability, post state) where the
    post state has the register layout (q1, q2, payload, flag).
    """
    if bell_label not in BELL_LABELS:
        raise InvalidArgument(f"unknown Bell label {bell_label!r}")
    with_flag = tensor_product([state, basis_state(1, 0)])
    u = receiver_correction(BELL_LABELS.index(bell_label), ch)
    rotated = apply_unitary(with_flag, u, (2, 3))
    result = projective_measure(rotated, computational_basis(1), (3,), rng)
    return result.outcome, result.probability, result.state


def povm_sender_step(state: StateVector, ch: ChannelParams, rng):
    """Sender's generalized measurement on (payload, pair half)."""
    kraus = measurement_operators(ch)
    result = generalized_measure(state, kraus, (0, 1), rng)
    return POVM_LABELS[result.outcome], result.probability, result.state


def circuit_sender_step(inp: InputQubit, ch: ChannelParams, rng):
    """Sender's dilated measurement: flag ancilla, 8x8 unitary, two readouts.

    Register layout is (payload, sender pair half, flag, receiver pair
    half).  Returns (outcome, probability, post state) where outcome is
    ``(1, None)`` on failure and ``(0, bell_label)`` on success; the
    Bell measurement only happens when the flag read 0.
    """
    reg = tensor_product([inp.as_state(), ch.pair_state(), basis_state(1, 0)])
    reg = permute_qubits(reg, (0, 1, 3, 2))
    reg = apply_unitary(reg, sender_dilation(ch), (0, 1, 2))
    flag = projective_measure(reg, computational_basis(1), (2,), rng)
    if flag.outcome == 1:
        return (1, None), flag.probability, flag.state
    label, p_bell, post = bell_measurement_step(flag.state, (0, 1), rng)
    return (0, label), flag.probability * p_bell, post


def receiver_finish(qubit_state: StateVector, code: CorrectionCode) -> StateVector:
    """Apply a classically-selected correction; needs no channel knowledge.

    On FAIL the qubit is returned as-is: there is nothing useful the
    receiver can do without the channel.
    """
    if qubit_state.num_qubits != 1:
        raise InvalidArgument("correction applies to a single qubit")
    matrix = code.matrix()
    if matrix is None:
        return qubit_state
    return StateVector(matrix @ qubit_state.amplitudes)


# ---------------------------------------------------------------------------
# single-hop runners


def _finish_record(scheme, messages, prob, success, pure, inp):
    dm = pure.density()
    fid = fidelity_pure(dm, inp.as_state())
    record = TeleportationRecord(
        scheme=scheme,
        outcome_trace=tuple(messages),
        branch_probability=float(prob),
        success=bool(success),
        fidelity=fid,
        final_state=dm,
    )
    return record, pure


def _run_typical(
    inp: InputQubit,
    ch: ChannelParams,
    rng,
    *,
    sender: str = "alice",
    receiver: str = "bob",
    channel_id: str = "alice-bob",
    receiver_knowledge: PartyKnowledge | None = None,
):
    knowledge = receiver_knowledge or PartyKnowledge(receiver, {channel_id})
    _require_channel(knowledge, channel_id, "build the conditional correction")
    total = prepare_total_state(inp, ch)
    label, p_bell, post = bell_measurement_step(total, (0, 1), rng)
    messages = [ClassicalMessage(sender, receiver, (("bell", label),))]
    flag, p_flag, final4 = typical_receiver_step(post, label, ch, rng)
    messages.append(ClassicalMessage(receiver, receiver, (("flag", flag),)))
    pure = pure_subsystem_state(final4, 2)
    return _finish_record(
        SCHEME_TYPICAL, messages, p_bell * p_flag, flag == 0, pure, inp
    )


def _run_sender_povm(
    inp: InputQubit,
    ch: ChannelParams,
    rng,
    *,
    sender: str = "alice",
    receiver: str = "bob",
    channel_id: str = "alice-bob",
    sender_knowledge: PartyKnowledge | None = None,
):
    knowledge = sender_knowledge or PartyKnowledge(sender, {channel_id})
    _require_channel(knowledge, channel_id, "construct the measurement operators")
    total = prepare_total_state(inp, ch)
    label, prob, post = povm_sender_step(total, ch, rng)
    messages = [ClassicalMessage(sender, receiver, (("povm", label),))]
    code = correction_for(SCHEME_POVM, label)
    pure = receiver_finish(pure_subsystem_state(post, 2), code)
    return _finish_record(
        SCHEME_POVM, messages, prob, code is not CorrectionCode.FAIL, pure, inp
    )


def _run_sender_circuit(
    inp: InputQubit,
    ch: ChannelParams,
    rng,
    *,
    sender: str = "alice",
    receiver: str = "bob",
    channel_id: str = "alice-bob",
    sender_knowledge: PartyKnowledge | None = None,
):
    knowledge = sender_knowledge or PartyKnowledge(sender, {channel_id})
    _require_channel(knowledge, channel_id, "apply the dilation unitary")
    outcome, prob, post = circuit_sender_step(inp, ch, rng)
    flag_bit, bell_label = outcome
    payload = [("flag", flag_bit)]
    if flag_bit == 0:
        payload.append(("bell", bell_label))
    messages = [ClassicalMessage(sender, receiver, payload)]
    code = correction_for(SCHEME_CIRCUIT, outcome)
    pure = receiver_finish(pure_subsystem_state(post, 3), code)
    return _finish_record(
        SCHEME_CIRCUIT, messages, prob, code is not CorrectionCode.FAIL, pure, inp
    )


def run_typical(inp, ch, rng, **kwargs) -> TeleportationRecord:
    """One run of the receiver-corrected scheme.  See module docstring."""
    return _run_typical(inp, ch, rng, **kwargs)[0]


def run_sender_povm(inp, ch, rng, **kwargs) -> TeleportationRecord:
    """One run of the sender-side scheme in measurement-operator form."""
    return _run_sender_povm(inp, ch, rng, **kwargs)[0]


def run_sender_circuit(inp, ch, rng, **kwargs) -> TeleportationRecord:
    """One run of the sender-side scheme in circuit (dilation) form."""
    return _run_sender_circuit(inp, ch, rng, **kwargs)[0]


_SENDER_RUNNERS = {
    SCHEME_POVM: _run_sender_povm,
    SCHEME_CIRCUIT: _run_sender_circuit,
}


# ---------------------------------------------------------------------------
# relay


def run_relay(
    inp: InputQubit,
    ch1: ChannelParams,
    ch2: ChannelParams,
    scenario: str,
    rng,
    *,
    variant: str = SCHEME_CIRCUIT,
    knowledge: Mapping[str, PartyKnowledge] | None = None,
) -> RelayRecord:
    """Teleport Alice -> Charlie -> Bob over channels ch1 and ch2.

    ``scenario`` selects the knowledge assignment:

    * "relay-assistant": Charlie knows both channels, the endpoints know
      neither.  Hop 1 is the typical scheme with Charlie as receiver,
      hop 2 the sender-side scheme with Charlie as sender, so every
      channel-dependent operation happens at Charlie.  The first hop's
      flag stays local to Charlie and no payload derived from it reaches
      Alice or Bob.
    * "relay-endpoints": Alice knows ch1 and Bob knows ch2; Charlie is a
      passive repeater.  Hop 1 is the sender-side scheme, hop 2 typical.

    The second hop runs only when the first succeeded and takes the
    exactly reconstructed qubit from hop 1 as its payload.  ``variant``
    picks the realization of the sender-side hop ("sender-circuit" or
    "sender-povm"); the two are observationally equivalent.

    The runner consumes exactly four uniform variates from ``rng``, two
    per hop, whether or not the second hop executes, so trial streams
    stay aligned with the Monte Carlo kernels.
    """
    if scenario not in RELAY_SCENARIOS:
        raise InvalidArgument(f"unknown relay scenario {scenario!r}")
    if variant not in _SENDER_RUNNERS:
        raise InvalidArgument(f"unknown sender-side variant {variant!r}")
    draws = [float(rng.random()) for _ in range(4)]
    hop1_rng = SequenceRng(draws[:2])
    hop2_rng = SequenceRng(draws[2:])
    parties = dict(knowledge or {})

    def holder(name: str, default_channels) -> PartyKnowledge:
        got = parties.get(name, PartyKnowledge(name, default_channels))
        if got.party != name:
            raise InvalidArgument(f"knowledge entry {name!r} names party {got.party!r}")
        return got

    links = (UPLINK, DOWNLINK)
    sender_run = _SENDER_RUNNERS[variant]
    if scenario == RELAY_ASSISTANT:
        alice = holder("alice", ())
        bob = holder("bob", ())
        charlie = holder("charlie", links)
        _require_ignorance(alice, links, scenario)
        _require_ignorance(bob, links, scenario)
        _require_channel(charlie, UPLINK, "act as the knowing receiver of hop 1")
        _require_channel(charlie, DOWNLINK, "act as the knowing sender of hop 2")
        hop1, pure1 = _run_typical(
            inp, ch1, hop1_rng,
            sender="alice", receiver="charlie",
            channel_id=UPLINK, receiver_knowledge=charlie,
        )
        if not hop1.success:
            return RelayRecord(scenario, hop1, None, False)
        relay_payload = InputQubit(pure1.amplitudes[0], pure1.amplitudes[1])
        hop2, _ = sender_run(
            relay_payload, ch2, hop2_rng,
            sender="charlie", receiver="bob",
            channel_id=DOWNLINK, sender_knowledge=charlie,
        )
        return RelayRecord(scenario, hop1, hop2, hop2.success)

    alice = holder("alice", (UPLINK,))
    bob = holder("bob", (DOWNLINK,))
    charlie = holder("charlie", ())
    _require_ignorance(charlie, links, scenario)
    _require_ignorance(alice, (DOWNLINK,), scenario)
    _require_ignorance(bob, (UPLINK,), scenario)
    _require_channel(alice, UPLINK, "act as the knowing sender of hop 1")
    _require_channel(bob, DOWNLINK, "act as the knowing receiver of hop 2")
    hop1, pure1 = sender_run(
        inp, ch1, hop1_rng,
        sender="alice", receiver="charlie",
        channel_id=UPLINK, sender_knowledge=alice,
    )
    if not hop1.success:
        return RelayRecord(scenario, hop1, None, False)
    relay_payload = InputQubit(pure1.amplitudes[0], pure1.amplitudes[1])
    hop2, _ = _run_typical(
        relay_payload, ch2, hop2_rng,
        sender="charlie", receiver="bob",
        channel_id=DOWNLINK, receiver_knowledge=bob,
    )
    return RelayRecord(scenario, hop1, hop2, hop2.success)
