"""Trial-engine tests: backend selection, parity, and runner equivalence.

The load-bearing test here replays the exact uniform rows consumed by the
vectorised kernels through the single-shot reference runners and demands
the same branch, success flag, and fidelity for every trial.  That pins
the kernels to the slow, well-audited protocol implementation.
"""

import numpy as np
import pytest

from teleportsim.backend import (
    ENV_BACKEND,
    available_backends,
    resolve_backend,
    run_trials,
    uniforms_per_trial,
    warmup,
)
from teleportsim.errors import BackendError, InvalidArgument
from teleportsim.operators import BELL_LABELS, POVM_LABELS, ChannelParams, InputQubit
from teleportsim.protocols import (
    RELAY_ASSISTANT,
    RELAY_ENDPOINTS,
    SCHEME_CIRCUIT,
    SCHEME_POVM,
    SCHEME_TYPICAL,
    SequenceRng,
    run_relay,
    run_sender_circuit,
    run_sender_povm,
    run_typical,
)

_BOTH_BACKENDS = available_backends()

_SINGLE_RUNNERS = {
    SCHEME_TYPICAL: run_typical,
    SCHEME_POVM: run_sender_povm,
    SCHEME_CIRCUIT: run_sender_circuit,
}


def _payload_kinds(record):
    return [kind for msg in record.outcome_trace for kind, _ in msg.payload]


def _branch_code(record):
    """Kernel branch code of a single-hop record, from its classical trace."""
    payload = [p for msg in record.outcome_trace for p in msg.payload]
    if record.scheme == SCHEME_TYPICAL:
        (_, bell), (_, flag) = payload
        return 2 * BELL_LABELS.index(bell) + flag
    if record.scheme == SCHEME_POVM:
        ((_, label),) = payload
        return POVM_LABELS.index(label)
    if payload[0] == ("flag", 1):
        return 4
    return BELL_LABELS.index(payload[1][1])


def _uniform_rows(trials, width, seed):
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return gen.random((trials, width))


def _haar_inputs(trials, seed):
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    raw = gen.standard_normal((trials, 2)) + 1j * gen.standard_normal((trials, 2))
    return raw / np.linalg.norm(raw, axis=1)[:, None]


class TestBackendSelection:
    def test_numpy_always_available(self):
        assert "numpy" in _BOTH_BACKENDS

    def test_explicit_argument_wins(self, monkeypatch):
        monkeypatch.setenv(ENV_BACKEND, "numpy")
        assert resolve_backend("numpy") == "numpy"

    def test_env_flag_selects_fallback(self, monkeypatch):
        monkeypatch.setenv(ENV_BACKEND, "numpy")
        assert resolve_backend() == "numpy"

    def test_env_auto_prefers_accelerated(self, monkeypatch):
        monkeypatch.setenv(ENV_BACKEND, "auto")
        assert resolve_backend() == _BOTH_BACKENDS[0]

    def test_unknown_backend_rejected(self, monkeypatch):
        monkeypatch.delenv(ENV_BACKEND, raising=False)
        with pytest.raises(BackendError):
            resolve_backend("fortran")
        monkeypatch.setenv(ENV_BACKEND, "fortran")
        with pytest.raises(BackendError):
            resolve_backend()

    def test_uniforms_per_trial(self):
        assert uniforms_per_trial(SCHEME_TYPICAL) == 2
        assert uniforms_per_trial(SCHEME_CIRCUIT) == 2
        assert uniforms_per_trial(RELAY_ASSISTANT) == 4

    def test_warmup_reports_backend(self, compiled_backends):
        assert warmup() in _BOTH_BACKENDS


class TestInputValidation:
    def test_shape_checks(self, channel):
        inputs = np.zeros((4, 2), dtype=complex)
        inputs[:, 0] = 1.0
        with pytest.raises(InvalidArgument):
            run_trials(SCHEME_TYPICAL, (channel,), inputs, np.zeros((4, 3)))
        with pytest.raises(InvalidArgument):
            run_trials(SCHEME_TYPICAL, (channel,), inputs[:, :1], np.zeros((4, 2)))
        with pytest.raises(InvalidArgument):
            run_trials(SCHEME_TYPICAL, (channel, channel), inputs, np.zeros((4, 2)))

    def test_unknown_scheme(self, channel):
        inputs = np.zeros((1, 2), dtype=complex)
        inputs[:, 0] = 1.0
        with pytest.raises(InvalidArgument):
            run_trials("warp", (channel,), inputs, np.zeros((1, 2)))


@pytest.mark.parametrize("backend", _BOTH_BACKENDS)
class TestKernelsMatchRunners:
    """Replay each kernel trial through the reference runner, bit for bit."""

    def test_single_hop_schemes(self, backend, compiled_backends):
        trials = 64
        ch = ChannelParams.from_b_squared(0.21, phase=1.3)
        inputs = _haar_inputs(trials, seed=31)
        uniforms = _uniform_rows(trials, 2, seed=32)
        for scheme, runner in _SINGLE_RUNNERS.items():
            batch = run_trials(scheme, (ch,), inputs, uniforms, backend=backend)
            for t in range(trials):
                inp = InputQubit(complex(inputs[t, 0]), complex(inputs[t, 1]))
                record = runner(inp, ch, SequenceRng(uniforms[t]))
                assert _branch_code(record) == batch.hop1[t], (scheme, t)
                assert record.success == bool(batch.success[t])
                assert abs(record.fidelity - batch.fidelity[t]) < 1e-10

    def test_relay_scenarios(self, backend, compiled_backends):
        trials = 48
        ch1 = ChannelParams.from_b_squared(0.3, phase=0.4)
        ch2 = ChannelParams.from_b_squared(0.2, phase=2.2)
        inputs = _haar_inputs(trials, seed=41)
        uniforms = _uniform_rows(trials, 4, seed=42)
        for scenario in (RELAY_ASSISTANT, RELAY_ENDPOINTS):
            for variant in (SCHEME_CIRCUIT, SCHEME_POVM):
                batch = run_trials(
                    scenario, (ch1, ch2), inputs, uniforms,
                    variant=variant, backend=backend,
                )
                for t in range(trials):
                    inp = InputQubit(complex(inputs[t, 0]), complex(inputs[t, 1]))
                    record = run_relay(
                        inp, ch1, ch2, scenario, SequenceRng(uniforms[t]), variant=variant
                    )
                    assert _branch_code(record.hop1) == batch.hop1[t]
                    if record.hop2 is None:
                        assert batch.hop2[t] == -1
                    else:
                        assert _branch_code(record.hop2) == batch.hop2[t]
                    assert record.success == bool(batch.success[t])
                    expected_fid = (
                        record.hop2.fidelity if record.hop2 is not None
                        else record.hop1.fidelity
                    )
                    assert abs(expected_fid - batch.fidelity[t]) < 1e-10


@pytest.mark.skipif(len(_BOTH_BACKENDS) < 2, reason="accelerated backend unavailable")
class TestCrossBackendParity:
    def test_branch_streams_identical(self, compiled_backends):
        trials = 4000
        inputs = _haar_inputs(trials, seed=51)
        cases = [
            (SCHEME_TYPICAL, (ChannelParams.from_b_squared(0.25),), 2, SCHEME_CIRCUIT),
            (SCHEME_POVM, (ChannelParams.from_b_squared(0.37, phase=1.0),), 2, SCHEME_CIRCUIT),
            (SCHEME_CIRCUIT, (ChannelParams.from_b_squared(0.11, phase=4.0),), 2, SCHEME_CIRCUIT),
            (
                RELAY_ASSISTANT,
                (ChannelParams.from_b_squared(0.3), ChannelParams.from_b_squared(0.2)),
                4,
                SCHEME_POVM,
            ),
            (
                RELAY_ENDPOINTS,
                (ChannelParams.from_b_squared(0.3), ChannelParams.from_b_squared(0.2)),
                4,
                SCHEME_CIRCUIT,
            ),
        ]
        for scheme, channels, width, variant in cases:
            uniforms = _uniform_rows(trials, width, seed=52)
            fast = run_trials(
                scheme, channels, inputs, uniforms, variant=variant, backend="numba"
            )
            slow = run_trials(
                scheme, channels, inputs, uniforms, variant=variant, backend="numpy"
            )
            assert np.array_equal(fast.hop1, slow.hop1), scheme
            assert np.array_equal(fast.hop2, slow.hop2), scheme
            assert np.array_equal(fast.success, slow.success), scheme
            assert np.max(np.abs(fast.fidelity - slow.fidelity)) < 1e-12
            assert np.max(np.abs(fast.final - slow.final)) < 1e-12
