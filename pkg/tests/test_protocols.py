"""Single-shot protocol runs driven by replayed uniforms."""

import numpy as np
import pytest

from teleportsim.errors import InvalidArgument, KnowledgeError
from teleportsim.operators import ChannelParams, InputQubit
from teleportsim.protocols import (
    RELAY_ASSISTANT,
    RELAY_ENDPOINTS,
    SCHEME_CIRCUIT,
    SCHEME_POVM,
    SCHEME_TYPICAL,
    ClassicalMessage,
    PartyKnowledge,
    SequenceRng,
    prepare_total_state,
    run_relay,
    run_sender_circuit,
    run_sender_povm,
    run_typical,
)
from teleportsim.statevec import fidelity_pure

_ALLOWED_PAYLOAD_KINDS = {"bell", "flag", "povm"}


def _all_messages(record):
    """Classical messages of a single-hop or relay record, in order."""
    if hasattr(record, "outcome_trace"):
        return list(record.outcome_trace)
    messages = list(record.hop1.outcome_trace)
    if record.hop2 is not None:
        messages += list(record.hop2.outcome_trace)
    return messages


class TestSequenceRng:
    def test_replays_in_order(self):
        rng = SequenceRng([0.1, 0.9])
        assert rng.random() == 0.1
        assert rng.random() == 0.9

    def test_exhaustion_raises(self):
        rng = SequenceRng([0.5])
        rng.random()
        with pytest.raises(InvalidArgument):
            rng.random()


class TestPrepare:
    def test_total_state_is_kron(self, channel, oracle_input):
        total = prepare_total_state(oracle_input, channel)
        expected = np.kron([0.6, 0.8], channel.pair_state().amplitudes)
        assert np.allclose(total.amplitudes, expected, atol=1e-15)


class TestTypicalScheme:
    def test_success_branch(self, channel, oracle_input):
        # u0 ~ 0 selects the first Bell outcome; u1 ~ 0 keeps the flag at 0.
        record = run_typical(oracle_input, channel, SequenceRng([0.001, 0.001]))
        assert record.scheme == SCHEME_TYPICAL
        assert record.success
        assert abs(record.branch_probability - 0.125) < 1e-12
        assert abs(record.fidelity - 1) < 1e-10
        assert fidelity_pure(record.final_state, oracle_input.as_state()) > 1 - 1e-10

    def test_failure_branch_probabilities(self, channel, oracle_input):
        # Flag 1 after each Bell outcome: the frozen failure weights.
        expected = {"phi+": 0.09, "phi-": 0.09, "psi+": 0.16, "psi-": 0.16}
        bell_pick = {"phi+": 0.05, "phi-": 0.3, "psi+": 0.55, "psi-": 0.8}
        for label, u0 in bell_pick.items():
            record = run_typical(oracle_input, channel, SequenceRng([u0, 0.999]))
            assert not record.success
            assert abs(record.branch_probability - expected[label]) < 1e-12
            assert record.fidelity < 1 - 1e-3

    def test_messages(self, channel, oracle_input):
        record = run_typical(oracle_input, channel, SequenceRng([0.001, 0.001]))
        first, second = record.outcome_trace
        assert (first.sender, first.recipient) == ("alice", "bob")
        assert first.payload[0][0] == "bell"
        # The flag is measured and kept at the receiver.
        assert (second.sender, second.recipient) == ("bob", "bob")
        assert second.payload[0][0] == "flag"

    def test_branch_probabilities_cover_all_outcomes(self, channel, oracle_input):
        total = 0.0
        for u0 in (0.05, 0.3, 0.55, 0.8):
            for u1 in (0.001, 0.999):
                record = run_typical(oracle_input, channel, SequenceRng([u0, u1]))
                total += record.branch_probability
        assert abs(total - 1) < 1e-12


class TestSenderSchemes:
    def test_povm_failure_leaves_reference_state(self, channel, oracle_input):
        # Success mass is 0.5 here, so u0 above it lands on the failure outcome.
        record = run_sender_povm(oracle_input, channel, SequenceRng([0.9]))
        assert not record.success
        assert abs(record.branch_probability - 0.5) < 1e-12
        # The receiver qubit collapses to |0>; fidelity degrades to |alpha|^2.
        assert abs(record.fidelity - 0.36) < 1e-10
        (message,) = record.outcome_trace
        assert message.payload == (("povm", "M4"),)

    def test_povm_success_branch(self, channel, oracle_input):
        record = run_sender_povm(oracle_input, channel, SequenceRng([0.2]))
        assert record.success
        assert abs(record.branch_probability - 0.125) < 1e-12
        assert abs(record.fidelity - 1) < 1e-10

    def test_circuit_failure_message_is_flag_only(self, channel, oracle_input):
        record = run_sender_circuit(oracle_input, channel, SequenceRng([0.9, 0.5]))
        assert not record.success
        assert abs(record.fidelity - 0.36) < 1e-10
        (message,) = record.outcome_trace
        assert message.payload == (("flag", 1),)

    def test_circuit_success_flag_precedes_bell(self, channel, oracle_input):
        record = run_sender_circuit(oracle_input, channel, SequenceRng([0.2, 0.6]))
        assert record.success
        kinds = [kind for msg in record.outcome_trace for kind, _ in msg.payload]
        assert kinds == ["flag", "bell"]
        assert abs(record.fidelity - 1) < 1e-10

    def test_circuit_matches_povm_branch_by_branch(self, rng):
        for _ in range(10):
            b2 = 0.5 * (1e-3 + (1 - 1e-3) * rng.random())
            ch = ChannelParams.from_b_squared(b2, phase=2 * np.pi * rng.random())
            inp = InputQubit.haar_random(rng)
            # Success mass is identical, so equal u0 picks matching branches.
            for u0 in (0.05, 0.6, 0.98):
                povm = run_sender_povm(inp, ch, SequenceRng([u0]))
                circuit = run_sender_circuit(inp, ch, _circuit_draws(ch, u0))
                assert povm.success == circuit.success
                assert abs(povm.branch_probability - circuit.branch_probability) < 1e-10
                assert abs(povm.fidelity - circuit.fidelity) < 1e-10


def _circuit_draws(ch, u0):
    """Uniforms steering the circuit runner onto the povm branch picked by u0.

    The povm sampler orders outcomes as four equal success slots then the
    failure slot; the circuit realization first splits success/failure with
    the flag, then picks the Bell outcome among four equal slots.
    """
    success_mass = ch.success_probability
    if u0 >= success_mass:  # failure branch
        return SequenceRng([0.999, 0.5])
    slot = int(u0 / (success_mass / 4))
    return SequenceRng([0.001, (slot + 0.5) / 4])


class TestKnowledgeGuards:
    def test_typical_receiver_must_know_channel(self, channel, oracle_input):
        with pytest.raises(KnowledgeError):
            run_typical(
                oracle_input,
                channel,
                SequenceRng([0.1, 0.1]),
                receiver_knowledge=PartyKnowledge("bob", ()),
            )

    def test_sender_schemes_require_sender_knowledge(self, channel, oracle_input):
        for runner in (run_sender_povm, run_sender_circuit):
            with pytest.raises(KnowledgeError):
                runner(
                    oracle_input,
                    channel,
                    SequenceRng([0.1, 0.1]),
                    sender_knowledge=PartyKnowledge("alice", ()),
                )

    def test_relay_rejects_knowing_endpoints(self, channel, oracle_input):
        rng = np.random.default_rng(0)
        with pytest.raises(KnowledgeError):
            run_relay(
                oracle_input,
                channel,
                channel,
                RELAY_ASSISTANT,
                rng,
                knowledge={"alice": PartyKnowledge("alice", ("alice-charlie",))},
            )

    def test_relay_rejects_underinformed_assistant(self, channel, oracle_input):
        rng = np.random.default_rng(0)
        with pytest.raises(KnowledgeError):
            run_relay(
                oracle_input,
                channel,
                channel,
                RELAY_ASSISTANT,
                rng,
                knowledge={"charlie": PartyKnowledge("charlie", ("alice-charlie",))},
            )

    def test_relay_rejects_knowing_repeater(self, channel, oracle_input):
        rng = np.random.default_rng(0)
        with pytest.raises(KnowledgeError):
            run_relay(
                oracle_input,
                channel,
                channel,
                RELAY_ENDPOINTS,
                rng,
                knowledge={"charlie": PartyKnowledge("charlie", ("charlie-bob",))},
            )


class TestRelay:
    def test_success_chain_reconstructs_input(self, oracle_input):
        ch1 = ChannelParams.from_b_squared(0.3)
        ch2 = ChannelParams.from_b_squared(0.2)
        record = run_relay(
            oracle_input, ch1, ch2, RELAY_ASSISTANT, SequenceRng([0.001] * 4)
        )
        assert record.success
        assert record.hop1.success and record.hop2.success
        assert fidelity_pure(record.hop2.final_state, oracle_input.as_state()) > 1 - 1e-10

    def test_first_hop_failure_skips_second_hop(self, oracle_input):
        ch1 = ChannelParams.from_b_squared(0.3)
        ch2 = ChannelParams.from_b_squared(0.2)
        # Typical first hop: Bell outcome phi+, then flag forced to 1.
        record = run_relay(
            oracle_input, ch1, ch2, RELAY_ASSISTANT, SequenceRng([0.05, 0.999, 0.5, 0.5])
        )
        assert not record.success
        assert record.hop2 is None

    def test_consumes_exactly_four_draws(self, oracle_input):
        ch = ChannelParams.from_b_squared(0.25)
        for scenario in (RELAY_ASSISTANT, RELAY_ENDPOINTS):
            for draws in ([0.05, 0.999, 0.5, 0.5], [0.001, 0.001, 0.001, 0.001]):
                # SequenceRng raises if a fifth draw is requested and the
                # run would fail outright if a draw were missing.
                run_relay(oracle_input, ch, ch, scenario, SequenceRng(draws))

    def test_variant_selects_sender_scheme(self, oracle_input):
        ch = ChannelParams.from_b_squared(0.25)
        record = run_relay(
            oracle_input,
            ch,
            ch,
            RELAY_ASSISTANT,
            SequenceRng([0.001] * 4),
            variant=SCHEME_POVM,
        )
        assert record.hop2.scheme == SCHEME_POVM

    def test_hop_order_per_scenario(self, oracle_input):
        ch = ChannelParams.from_b_squared(0.25)
        assistant = run_relay(
            oracle_input, ch, ch, RELAY_ASSISTANT, SequenceRng([0.001] * 4)
        )
        assert assistant.hop1.scheme == SCHEME_TYPICAL
        assert assistant.hop2.scheme == SCHEME_CIRCUIT
        endpoints = run_relay(
            oracle_input, ch, ch, RELAY_ENDPOINTS, SequenceRng([0.001] * 4)
        )
        assert endpoints.hop1.scheme == SCHEME_CIRCUIT
        assert endpoints.hop2.scheme == SCHEME_TYPICAL

    def test_unknown_scenario_rejected(self, oracle_input):
        ch = ChannelParams.from_b_squared(0.25)
        with pytest.raises(InvalidArgument):
            run_relay(oracle_input, ch, ch, "triangle", SequenceRng([0.5] * 4))


class TestMessageDiscipline:
    """No classical payload may leak more than correction-selecting labels."""

    def _sweep_records(self, oracle_input):
        ch1 = ChannelParams.from_b_squared(0.3)
        ch2 = ChannelParams.from_b_squared(0.2)
        records = []
        for u in (0.001, 0.4, 0.7, 0.999):
            records.append(run_typical(oracle_input, ch1, SequenceRng([u, 0.5])))
            records.append(run_sender_povm(oracle_input, ch1, SequenceRng([u])))
            records.append(run_sender_circuit(oracle_input, ch1, SequenceRng([u, 0.5])))
            for scenario in (RELAY_ASSISTANT, RELAY_ENDPOINTS):
                records.append(
                    run_relay(oracle_input, ch1, ch2, scenario, SequenceRng([u, 0.5, u, 0.5]))
                )
        return records

    def test_payload_kinds_are_closed(self, oracle_input):
        for record in self._sweep_records(oracle_input):
            for message in _all_messages(record):
                assert isinstance(message, ClassicalMessage)
                for kind, _ in message.payload:
                    assert kind in _ALLOWED_PAYLOAD_KINDS

    def test_assistant_relay_keeps_endpoints_out_of_the_loop(self, oracle_input):
        ch1 = ChannelParams.from_b_squared(0.3)
        ch2 = ChannelParams.from_b_squared(0.2)
        for u in (0.001, 0.4, 0.7, 0.999):
            record = run_relay(
                oracle_input, ch1, ch2, RELAY_ASSISTANT, SequenceRng([u, 0.5, u, 0.5])
            )
            for message in _all_messages(record):
                # Nothing is ever addressed to the sender of the payload...
                assert message.recipient != "alice"
                # ...and the hop-1 flag never leaves the assistant.
                if message.payload[0][0] == "flag" and message in record.hop1.outcome_trace:
                    assert message.sender == "charlie"
                    assert message.recipient == "charlie"
