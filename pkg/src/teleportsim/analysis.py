"""Exact branch enumeration and Monte Carlo reporting.

This module owes its shape to a division of labour:

* :func:`enumerate_branches` walks every measurement branch of a scenario
  with the slow, well-tested single-shot machinery from :mod:`.protocols`
  and returns exact probabilities and fidelities.
* :func:`monte_carlo` runs the vectorised trial engine from :mod:`.backend`
  on counter-based uniform tables and reconciles the empirical counts with
  the exact enumeration, producing a :class:`Report`.

Branch labels follow one canonical order per scheme, and the Monte Carlo
side maps kernel outcome codes onto the same order, so the two columns of a
report always line up.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Union

import numpy as np

from .backend import (
    TrialBatch,
    hop_kinds,
    resolve_backend,
    run_trials,
    uniforms_per_trial,
)
from .errors import InvalidConfig, InvariantViolation
from .operators import (
    BELL_LABELS,
    POVM_LABELS,
    ChannelParams,
    InputQubit,
    bell_basis,
    correction_for,
    measurement_operators,
    receiver_correction,
    sender_dilation,
)
from .protocols import (
    RELAY_SCENARIOS,
    SCHEME_CIRCUIT,
    SCHEME_POVM,
    SCHEME_TYPICAL,
    SINGLE_HOP_SCHEMES,
    prepare_total_state,
    receiver_finish,
)
from .statevec import (
    PROB_FLOOR,
    StateVector,
    apply_unitary,
    basis_state,
    computational_basis,
    kraus_apply,
    outcome_distribution,
    permute_qubits,
    project_onto,
    projective_distribution,
    pure_subsystem_state,
    tensor_product,
)

__all__ = [
    "Branch",
    "OutcomeStat",
    "RandomInput",
    "Report",
    "ScenarioConfig",
    "analytic_success",
    "branch_labels",
    "enumerate_branches",
    "monte_carlo",
]

_SEED_LIMIT = 2**64

_FLAG_BASIS = computational_basis(1)


@dataclass(frozen=True)
class RandomInput:
    """Marker requesting Haar-random input qubits, one per trial.

    ``seed`` pins the input stream independently of the trial seed; leaving
    it ``None`` derives the stream from the scenario seed instead, so a
    scenario is still fully reproducible without it.
    """

    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.seed is not None:
            if not isinstance(self.seed, int) or isinstance(self.seed, bool):
                raise InvalidConfig("random-input seed must be an integer or None")
            if not 0 <= self.seed < _SEED_LIMIT:
                raise InvalidConfig("random-input seed must lie in [0, 2**64)")


InputSpec = Union[InputQubit, RandomInput]


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation scenario.

    ``channels`` carries one entry for a single-hop scheme and two entries
    (first hop, second hop) for a relay scenario.  ``relay_variant`` selects
    which realisation of the sender-side scheme a relay uses for its
    sender-side hop; it is ignored for single-hop schemes.
    """

    scheme: str
    channels: tuple[ChannelParams, ...]
    input_state: InputSpec
    trials: int
    seed: int
    relay_variant: str = SCHEME_CIRCUIT

    def __post_init__(self) -> None:
        if self.scheme not in SINGLE_HOP_SCHEMES and self.scheme not in RELAY_SCENARIOS:
            raise InvalidConfig(f"unknown scheme {self.scheme!r}")
        channels = tuple(self.channels)
        object.__setattr__(self, "channels", channels)
        for ch in channels:
            if not isinstance(ch, ChannelParams):
                raise InvalidConfig("channels must be ChannelParams instances")
        expected = 2 if self.scheme in RELAY_SCENARIOS else 1
        if len(channels) != expected:
            raise InvalidConfig(
                f"scheme {self.scheme!r} needs {expected} channel(s), got {len(channels)}"
            )
        if not isinstance(self.input_state, (InputQubit, RandomInput)):
            raise InvalidConfig("input_state must be an InputQubit or RandomInput")
        if not isinstance(self.trials, int) or isinstance(self.trials, bool):
            raise InvalidConfig("trials must be an integer")
        if self.trials < 1:
            raise InvalidConfig("trials must be at least 1")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InvalidConfig("seed must be an integer")
        if not 0 <= self.seed < _SEED_LIMIT:
            raise InvalidConfig("seed must lie in [0, 2**64)")
        if self.relay_variant not in (SCHEME_POVM, SCHEME_CIRCUIT):
            raise InvalidConfig(f"unknown relay variant {self.relay_variant!r}")


class Branch(NamedTuple):
    """One measurement branch: label, exact probability, outcome, fidelity."""

    label: str
    probability: float
    success: bool
    fidelity: float


class OutcomeStat(NamedTuple):
    """Exact versus empirical probability for one branch label."""

    label: str
    exact: float
    empirical: float


def analytic_success(config: ScenarioConfig) -> float:
    """Closed-form total success probability for a scenario.

    A single hop over a channel with smaller Schmidt weight ``|b|^2``
    succeeds with probability ``2|b|^2`` regardless of scheme; a relay
    multiplies the per-hop values because the second hop runs only when the
    first succeeded.
    """

    value = 1.0
    for ch in config.channels:
        value *= ch.success_probability
    return value


# ---------------------------------------------------------------------------
# Canonical branch labelling
# ---------------------------------------------------------------------------


def _hop_label_table(kind: str) -> tuple[tuple[str, ...], tuple[bool, ...]]:
    if kind == "typical":
        labels = tuple(f"{bell}/m{m}" for bell in BELL_LABELS for m in (0, 1))
        flags = tuple(m == 0 for _ in BELL_LABELS for m in (0, 1))
        return labels, flags
    if kind == "povm":
        return tuple(POVM_LABELS), (True, True, True, True, False)
    if kind == "circuit":
        labels = tuple(f"m0/{bell}" for bell in BELL_LABELS) + ("m1",)
        return labels, (True, True, True, True, False)
    raise InvalidConfig(f"unknown hop kind {kind!r}")


def branch_labels(scheme: str, relay_variant: str = SCHEME_CIRCUIT) -> list[str]:
    """Canonical branch label order for a scheme.

    Relay branches are ``"<hop1>><hop2>"`` for first-hop successes and the
    bare first-hop label for first-hop failures, ordered by first-hop branch
    and then by second-hop branch.  Monte Carlo outcome columns use the same
    order.
    """

    kinds = hop_kinds(scheme, relay_variant)
    labels1, flags1 = _hop_label_table(kinds[0])
    if len(kinds) == 1:
        return list(labels1)
    labels2, _ = _hop_label_table(kinds[1])
    out: list[str] = []
    for label1, ok in zip(labels1, flags1):
        if ok:
            out.extend(f"{label1}>{label2}" for label2 in labels2)
        else:
            out.append(label1)
    return out


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------


class _HopBranch(NamedTuple):
    label: str
    probability: float
    success: bool
    fidelity: float
    pure: Optional[StateVector]


def _enumerate_typical(inp: InputQubit, ch: ChannelParams) -> list[_HopBranch]:
    total = prepare_total_state(inp, ch)
    bell = bell_basis()
    bell_probs = projective_distribution(total, bell, (0, 1))
    out: list[_HopBranch] = []
    for k, bell_label in enumerate(BELL_LABELS):
        if bell_probs[k] <= PROB_FLOOR:
            for m in (0, 1):
                out.append(_HopBranch(f"{bell_label}/m{m}", 0.0, m == 0, 0.0, None))
            continue
        _, post = project_onto(total, bell, k, (0, 1))
        flagged = tensor_product([post, basis_state(1, 0)])
        rotated = apply_unitary(flagged, receiver_correction(k, ch), (2, 3))
        flag_probs = projective_distribution(rotated, _FLAG_BASIS, (3,))
        for m in (0, 1):
            prob = float(bell_probs[k] * flag_probs[m])
            if flag_probs[m] <= PROB_FLOOR:
                out.append(_HopBranch(f"{bell_label}/m{m}", 0.0, m == 0, 0.0, None))
                continue
            _, final = project_onto(rotated, _FLAG_BASIS, m, (3,))
            pure = pure_subsystem_state(final, 2)
            fid = float(abs(pure.overlap(inp.as_state())) ** 2)
            out.append(_HopBranch(f"{bell_label}/m{m}", prob, m == 0, fid, pure))
    return out


def _enumerate_povm(inp: InputQubit, ch: ChannelParams) -> list[_HopBranch]:
    total = prepare_total_state(inp, ch)
    kraus = measurement_operators(ch)
    probs = outcome_distribution(total, kraus, (0, 1))
    out: list[_HopBranch] = []
    for i, label in enumerate(POVM_LABELS):
        success = i < 4
        if probs[i] <= PROB_FLOOR:
            out.append(_HopBranch(label, 0.0, success, 0.0, None))
            continue
        _, post = kraus_apply(total, kraus, i, (0, 1))
        pure = pure_subsystem_state(post, 2)
        code = correction_for(SCHEME_POVM, label)
        corrected = receiver_finish(pure, code)
        fid = float(abs(corrected.overlap(inp.as_state())) ** 2)
        out.append(_HopBranch(label, float(probs[i]), success, fid, corrected))
    return out


def _enumerate_circuit(inp: InputQubit, ch: ChannelParams) -> list[_HopBranch]:
    flagged = tensor_product([inp.as_state(), ch.pair_state(), basis_state(1, 0)])
    register = permute_qubits(flagged, (0, 1, 3, 2))
    register = apply_unitary(register, sender_dilation(ch), (0, 1, 2))
    flag_probs = projective_distribution(register, _FLAG_BASIS, (2,))
    bell = bell_basis()
    out: list[_HopBranch] = []
    if flag_probs[0] <= PROB_FLOOR:
        for bell_label in BELL_LABELS:
            out.append(_HopBranch(f"m0/{bell_label}", 0.0, True, 0.0, None))
    else:
        _, kept = project_onto(register, _FLAG_BASIS, 0, (2,))
        bell_probs = projective_distribution(kept, bell, (0, 1))
        for k, bell_label in enumerate(BELL_LABELS):
            prob = float(flag_probs[0] * bell_probs[k])
            if bell_probs[k] <= PROB_FLOOR:
                out.append(_HopBranch(f"m0/{bell_label}", 0.0, True, 0.0, None))
                continue
            _, post = project_onto(kept, bell, k, (0, 1))
            pure = pure_subsystem_state(post, 3)
            code = correction_for(SCHEME_CIRCUIT, (0, bell_label))
            corrected = receiver_finish(pure, code)
            fid = float(abs(corrected.overlap(inp.as_state())) ** 2)
            out.append(_HopBranch(f"m0/{bell_label}", prob, True, fid, corrected))
    if flag_probs[1] <= PROB_FLOOR:
        out.append(_HopBranch("m1", 0.0, False, 0.0, None))
    else:
        _, failed = project_onto(register, _FLAG_BASIS, 1, (2,))
        pure = pure_subsystem_state(failed, 3)
        fid = float(abs(pure.overlap(inp.as_state())) ** 2)
        out.append(_HopBranch("m1", float(flag_probs[1]), False, fid, pure))
    return out


_HOP_ENUMERATORS = {
    "typical": _enumerate_typical,
    "povm": _enumerate_povm,
    "circuit": _enumerate_circuit,
}


def _enumerate_hop(kind: str, inp: InputQubit, ch: ChannelParams) -> list[_HopBranch]:
    return _HOP_ENUMERATORS[kind](inp, ch)


def enumerate_branches(config: ScenarioConfig) -> list[Branch]:
    """Exact probability, outcome, and fidelity of every measurement branch.

    Branches with probability below the floor are still listed, in canonical
    order, with probability and fidelity reported as ``0.0``.  Requires a
    fixed input qubit; Haar-random inputs have no single branch table.
    """

    if isinstance(config.input_state, RandomInput):
        raise InvalidConfig("enumerate_branches needs a fixed input qubit")
    inp = config.input_state
    kinds = hop_kinds(config.scheme, config.relay_variant)
    first = _enumerate_hop(kinds[0], inp, config.channels[0])
    if len(kinds) == 1:
        return [Branch(b.label, b.probability, b.success, b.fidelity) for b in first]
    labels2, flags2 = _hop_label_table(kinds[1])
    out: list[Branch] = []
    for hop1 in first:
        if not hop1.success:
            out.append(Branch(hop1.label, hop1.probability, False, hop1.fidelity))
            continue
        if hop1.pure is None:
            # Degenerate first hop: keep the canonical slot layout anyway.
            for label2, ok2 in zip(labels2, flags2):
                out.append(Branch(f"{hop1.label}>{label2}", 0.0, ok2, 0.0))
            continue
        relayed = InputQubit(
            complex(hop1.pure.amplitudes[0]), complex(hop1.pure.amplitudes[1])
        )
        for hop2 in _enumerate_hop(kinds[1], relayed, config.channels[1]):
            out.append(
                Branch(
                    f"{hop1.label}>{hop2.label}",
                    hop1.probability * hop2.probability,
                    hop2.success,
                    hop2.fidelity,
                )
            )
    return out


def _expected_probabilities(config: ScenarioConfig) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Labels, exact probabilities, and success flags for a scenario.

    For Haar-random inputs every branch probability is linear in the input
    density matrix, and the Haar average of that matrix is maximally mixed,
    so averaging the enumerations at the two basis inputs gives the exact
    expected distribution.
    """

    if isinstance(config.input_state, RandomInput):
        parts = []
        for amps in ((1.0, 0.0), (0.0, 1.0)):
            fixed = replace(config, input_state=InputQubit(*amps))
            parts.append(enumerate_branches(fixed))
        labels = [b.label for b in parts[0]]
        probs = 0.5 * (
            np.array([b.probability for b in parts[0]])
            + np.array([b.probability for b in parts[1]])
        )
        flags = np.array([b.success for b in parts[0]], dtype=bool)
        return labels, probs, flags
    branches = enumerate_branches(config)
    labels = [b.label for b in branches]
    probs = np.array([b.probability for b in branches])
    flags = np.array([b.success for b in branches], dtype=bool)
    return labels, probs, flags


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _uniform_table(seed: int, trials: int, width: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return rng.random((trials, width))


def _input_table(config: ScenarioConfig) -> np.ndarray:
    spec = config.input_state
    if isinstance(spec, InputQubit):
        row = np.array([spec.alpha, spec.beta], dtype=np.complex128)
        return np.ascontiguousarray(np.broadcast_to(row, (config.trials, 2)))
    if spec.seed is not None:
        seq = np.random.SeedSequence(spec.seed)
    else:
        seq = np.random.SeedSequence(config.seed).spawn(1)[0]
    rng = np.random.Generator(np.random.Philox(seq))
    re = rng.standard_normal((config.trials, 2))
    im = rng.standard_normal((config.trials, 2))
    raw = re + 1j * im
    norms = np.sqrt((raw.real * raw.real + raw.imag * raw.imag).sum(axis=1))
    return raw / norms[:, None]


def _composite_index(batch: TrialBatch, kinds: tuple[str, ...]) -> np.ndarray:
    if len(kinds) == 1:
        return batch.hop1
    _, flags1 = _hop_label_table(kinds[0])
    labels2, _ = _hop_label_table(kinds[1])
    offsets = np.empty(len(flags1), dtype=np.int64)
    position = 0
    for i, ok in enumerate(flags1):
        offsets[i] = position
        position += len(labels2) if ok else 1
    return offsets[batch.hop1] + np.where(batch.hop2 >= 0, batch.hop2, 0)


@dataclass(frozen=True, eq=False)
class Report:
    """Reconciled exact versus empirical statistics for one scenario run.

    Construction re-checks the bookkeeping: the exact column must sum to one
    and its success mass must reproduce the closed-form value, otherwise the
    enumeration and the analytic formula have diverged and the report is not
    to be trusted.
    """

    config: ScenarioConfig
    backend: str
    exact_success: float
    analytic_success: float
    empirical_success: float
    mean_success_fidelity: float
    per_outcome: tuple[OutcomeStat, ...] = field(repr=False)

    def __post_init__(self) -> None:
        exact_total = float(sum(stat.exact for stat in self.per_outcome))
        if abs(exact_total - 1.0) > 1e-12:
            raise InvariantViolation(
                f"exact branch probabilities sum to {exact_total!r}, expected 1"
            )
        if abs(self.exact_success - self.analytic_success) > 1e-10:
            raise InvariantViolation(
                "enumerated success probability "
                f"{self.exact_success!r} disagrees with closed form "
                f"{self.analytic_success!r}"
            )
        empirical_total = float(sum(stat.empirical for stat in self.per_outcome))
        if abs(empirical_total - 1.0) > 1e-12:
            raise InvariantViolation(
                f"empirical frequencies sum to {empirical_total!r}, expected 1"
            )
        if not 0.0 <= self.empirical_success <= 1.0:
            raise InvariantViolation("empirical success outside [0, 1]")
        if not 0.0 <= self.mean_success_fidelity <= 1.0 + 1e-12:
            raise InvariantViolation("mean success fidelity outside [0, 1]")

    def to_dict(self) -> dict:
        """Serialisable summary with floats rounded to 12 significant digits."""

        spec = self.config.input_state
        if isinstance(spec, InputQubit):
            input_part: object = {
                "alpha_re": _round12(spec.alpha.real),
                "alpha_im": _round12(spec.alpha.imag),
                "beta_re": _round12(spec.beta.real),
                "beta_im": _round12(spec.beta.imag),
            }
        elif spec.seed is None:
            input_part = "random"
        else:
            input_part = {"random": spec.seed}
        return {
            "scheme": self.config.scheme,
            "channels": [
                {
                    "a2": _round12(ch.a_squared),
                    "b2": _round12(ch.b_squared),
                    "b_phase": _round12(ch.b_phase),
                }
                for ch in self.config.channels
            ],
            "input": input_part,
            "trials": self.config.trials,
            "seed": self.config.seed,
            "exact_success": _round12(self.exact_success),
            "analytic_success": _round12(self.analytic_success),
            "empirical_success": _round12(self.empirical_success),
            "mean_success_fidelity": _round12(self.mean_success_fidelity),
            "per_outcome": [
                {
                    "label": stat.label,
                    "exact": _round12(stat.exact),
                    "empirical": _round12(stat.empirical),
                }
                for stat in self.per_outcome
            ],
        }


def _round12(x: float) -> float:
    return float(f"{float(x):.12g}")


def monte_carlo(config: ScenarioConfig, *, backend: Optional[str] = None) -> Report:
    """Run a scenario's trials and reconcile them with the exact enumeration.

    The uniform stream is a counter-based table seeded only by
    ``config.seed``, so a report is bit-reproducible for a given backend.
    Success trials are additionally checked to reconstruct the input exactly
    (fidelity one within state tolerance); a violation means the trial
    engine and the protocol definitions have diverged.
    """

    width = uniforms_per_trial(config.scheme)
    uniforms = _uniform_table(config.seed, config.trials, width)
    inputs = _input_table(config)
    batch = run_trials(
        config.scheme,
        config.channels,
        inputs,
        uniforms,
        variant=config.relay_variant,
        backend=backend,
    )
    kinds = hop_kinds(config.scheme, config.relay_variant)
    labels, exact_probs, success_flags = _expected_probabilities(config)
    index = _composite_index(batch, kinds)
    counts = np.bincount(index, minlength=len(labels))
    if counts.size > len(labels):
        raise InvariantViolation("trial engine produced an out-of-range branch code")
    success_mask = batch.success.astype(bool)
    if np.any(batch.fidelity[success_mask] < 1.0 - 1e-10):
        raise InvariantViolation("a success trial failed to reconstruct the input")
    successes = int(success_mask.sum())
    mean_fid = (
        float(batch.fidelity[success_mask].sum() / successes) if successes else 0.0
    )
    per_outcome = tuple(
        OutcomeStat(label, float(exact_probs[i]), float(counts[i] / config.trials))
        for i, label in enumerate(labels)
    )
    return Report(
        config=config,
        backend=resolve_backend(backend),
        exact_success=float(exact_probs[success_flags].sum()),
        analytic_success=analytic_success(config),
        empirical_success=float(successes / config.trials),
        mean_success_fidelity=mean_fid,
        per_outcome=per_outcome,
    )
