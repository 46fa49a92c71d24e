"""Self-verification suite: algebraic identities and statistical checks.

Every check is registered under a short name with a level:

* ``fast`` checks are pure algebra on operators and exact enumerations and
  run in well under a second.
* ``full`` adds Monte Carlo consistency: empirical distributions against
  exact ones, bit-reproducibility, and backend agreement.

``run_checks`` returns one :class:`CheckResult` per check; nothing here
raises on failure, so a caller can always print the complete table.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Optional

import numpy as np

from .analysis import (
    ScenarioConfig,
    _enumerate_hop,
    analytic_success,
    enumerate_branches,
    monte_carlo,
)
from .backend import available_backends
from .errors import KnowledgeError
from .operators import (
    BELL_LABELS,
    ChannelParams,
    InputQubit,
    amplitude_filter_matrix,
    bell_basis,
    measurement_operators,
    receiver_correction,
    sender_dilation,
)
from .protocols import (
    RELAY_ASSISTANT,
    RELAY_ENDPOINTS,
    RELAY_SCENARIOS,
    SCHEME_CIRCUIT,
    SCHEME_POVM,
    SCHEME_TYPICAL,
    PartyKnowledge,
    prepare_total_state,
    run_relay,
    run_typical,
)
from .statevec import ATOL_ALGEBRA, ATOL_STATE, outcome_distribution

__all__ = [
    "CheckResult",
    "FAST",
    "FULL",
    "available_checks",
    "format_result",
    "run_checks",
]

FAST = "fast"
FULL = "full"
LEVELS = (FAST, FULL)

_CHECK_SEED = 714025


class CheckResult(NamedTuple):
    name: str
    level: str
    passed: bool
    detail: str


def _rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_CHECK_SEED)))


def _random_channels(count: int, rng: np.random.Generator) -> list[ChannelParams]:
    """Seeded channel sample covering weak, generic, complex, and maximal."""

    channels = [
        ChannelParams.from_b_squared(0.5),
        ChannelParams.from_b_squared(1e-3),
        ChannelParams.from_b_squared(0.25, phase=np.pi / 2),
    ]
    while len(channels) < count:
        b2 = 0.5 * (1e-3 + (1.0 - 1e-3) * rng.random())
        phase = 2.0 * np.pi * rng.random()
        channels.append(ChannelParams.from_b_squared(b2, phase=phase))
    return channels[:count]


def _unitary_deviation(matrix: np.ndarray) -> float:
    gram = matrix.conj().T @ matrix
    return float(np.max(np.abs(gram - np.eye(matrix.shape[0]))))


# ---------------------------------------------------------------------------
# Fast checks
# ---------------------------------------------------------------------------


def _check_bell_orthonormality(backend: Optional[str]) -> tuple[bool, str]:
    rows = np.stack([state.amplitudes for state in bell_basis()])
    gram = rows.conj() @ rows.T
    dev = float(np.max(np.abs(gram - np.eye(4))))
    return dev <= ATOL_ALGEBRA, f"Gram deviation {dev:.2e}"


def _check_operator_unitarity(backend: Optional[str]) -> tuple[bool, str]:
    worst = 0.0
    for ch in _random_channels(100, _rng()):
        for outcome in range(4):
            worst = max(worst, _unitary_deviation(receiver_correction(outcome, ch).matrix))
        worst = max(worst, _unitary_deviation(sender_dilation(ch).matrix))
    ok = worst <= ATOL_ALGEBRA
    return ok, f"max deviation {worst:.2e} over 100 channels x 5 operators"


def _check_kraus_completeness(backend: Optional[str]) -> tuple[bool, str]:
    worst = 0.0
    for ch in _random_channels(100, _rng()):
        ops = measurement_operators(ch).operators
        total = np.einsum("kij,kil->jl", ops.conj(), ops)
        worst = max(worst, float(np.max(np.abs(total - np.eye(4)))))
    return worst <= ATOL_ALGEBRA, f"max completeness deviation {worst:.2e} over 100 channels"


def _check_filter_conjugation(backend: Optional[str]) -> tuple[bool, str]:
    ch = ChannelParams.from_b_squared(0.25, phase=np.pi / 2)  # b = 0.5i
    literal = _unitary_deviation(amplitude_filter_matrix(ch, conjugated=False))
    repaired = _unitary_deviation(amplitude_filter_matrix(ch, conjugated=True))
    ok = literal > 1e-6 and repaired <= ATOL_ALGEBRA
    return ok, f"literal form deviates {literal:.2e}, conjugated form {repaired:.2e}"


def _check_dilation_blocks(backend: Optional[str]) -> tuple[bool, str]:
    worst = 0.0
    for ch in _random_channels(20, _rng()):
        block = receiver_correction(0, ch).matrix
        expected = np.zeros((8, 8), dtype=np.complex128)
        expected[:4, :4] = block
        expected[4:, 4:] = block
        worst = max(worst, float(np.max(np.abs(sender_dilation(ch).matrix - expected))))
    return worst <= ATOL_ALGEBRA, f"max block mismatch {worst:.2e} over 20 channels"


def _check_povm_input_independence(backend: Optional[str]) -> tuple[bool, str]:
    rng = _rng()
    ch = ChannelParams.from_b_squared(0.17, phase=1.3)
    kraus = measurement_operators(ch)
    reference = None
    worst = 0.0
    for _ in range(10):
        inp = InputQubit.haar_random(rng)
        probs = outcome_distribution(prepare_total_state(inp, ch), kraus, (0, 1))
        if reference is None:
            reference = probs
        else:
            worst = max(worst, float(np.max(np.abs(probs - reference))))
    return worst <= ATOL_STATE, f"max distribution spread {worst:.2e} over 10 inputs"


def _check_enumeration_consistency(backend: Optional[str]) -> tuple[bool, str]:
    rng = _rng()
    inp = InputQubit.haar_random(rng)
    ch = ChannelParams.from_b_squared(0.21, phase=0.7)
    ch2 = ChannelParams.from_b_squared(0.34, phase=2.1)
    worst_sum = 0.0
    worst_succ = 0.0
    worst_fid = 0.0
    for scheme in (SCHEME_TYPICAL, SCHEME_POVM, SCHEME_CIRCUIT):
        cfg = ScenarioConfig(scheme, (ch,), inp, trials=1, seed=0)
        branches = enumerate_branches(cfg)
        worst_sum = max(worst_sum, abs(sum(b.probability for b in branches) - 1.0))
        succ = sum(b.probability for b in branches if b.success)
        worst_succ = max(worst_succ, abs(succ - analytic_success(cfg)))
        for b in branches:
            if b.success and b.probability > 0:
                worst_fid = max(worst_fid, abs(b.fidelity - 1.0))
    for scenario in RELAY_SCENARIOS:
        cfg = ScenarioConfig(scenario, (ch, ch2), inp, trials=1, seed=0)
        branches = enumerate_branches(cfg)
        worst_sum = max(worst_sum, abs(sum(b.probability for b in branches) - 1.0))
        succ = sum(b.probability for b in branches if b.success)
        worst_succ = max(worst_succ, abs(succ - analytic_success(cfg)))
        for b in branches:
            if b.success and b.probability > 0:
                worst_fid = max(worst_fid, abs(b.fidelity - 1.0))
    ok = worst_sum <= ATOL_ALGEBRA and worst_succ <= ATOL_STATE and worst_fid <= ATOL_STATE
    return ok, (
        f"prob-sum dev {worst_sum:.2e}, success-mass dev {worst_succ:.2e}, "
        f"success-fidelity dev {worst_fid:.2e}"
    )


def _check_scheme_equivalence(backend: Optional[str]) -> tuple[bool, str]:
    rng = _rng()
    worst_prob = 0.0
    worst_fid = 0.0
    for _ in range(20):
        b2 = 0.5 * (1e-3 + (1.0 - 1e-3) * rng.random())
        ch = ChannelParams.from_b_squared(b2, phase=2.0 * np.pi * rng.random())
        inp = InputQubit.haar_random(rng)
        povm = _enumerate_hop("povm", inp, ch)
        circuit = _enumerate_hop("circuit", inp, ch)
        for p, c in zip(povm, circuit):
            worst_prob = max(worst_prob, abs(p.probability - c.probability))
            if p.pure is not None and c.pure is not None:
                mutual = abs(p.pure.overlap(c.pure)) ** 2
                worst_fid = max(worst_fid, abs(mutual - 1.0))
    ok = worst_prob <= ATOL_STATE and worst_fid <= ATOL_STATE
    return ok, (
        f"max branch-probability gap {worst_prob:.2e}, "
        f"max post-state infidelity {worst_fid:.2e} over 20 channel/input pairs"
    )


def _check_relay_factorization(backend: Optional[str]) -> tuple[bool, str]:
    rng = _rng()
    inp = InputQubit.haar_random(rng)
    worst = 0.0
    for _ in range(5):
        ch1 = ChannelParams.from_b_squared(
            0.5 * (1e-3 + rng.random() * (1 - 1e-3)), phase=2 * np.pi * rng.random()
        )
        ch2 = ChannelParams.from_b_squared(
            0.5 * (1e-3 + rng.random() * (1 - 1e-3)), phase=2 * np.pi * rng.random()
        )
        product = ch1.success_probability * ch2.success_probability
        for scenario in RELAY_SCENARIOS:
            cfg = ScenarioConfig(scenario, (ch1, ch2), inp, trials=1, seed=0)
            succ = sum(b.probability for b in enumerate_branches(cfg) if b.success)
            worst = max(worst, abs(succ - product))
    return worst <= ATOL_STATE, f"max deviation from per-hop product {worst:.2e}"


def _check_typical_success_split(backend: Optional[str]) -> tuple[bool, str]:
    rng = _rng()
    worst = 0.0
    for ch in _random_channels(10, rng):
        share = ch.b_squared / 2.0
        for _ in range(3):
            inp = InputQubit.haar_random(rng)
            cfg = ScenarioConfig(SCHEME_TYPICAL, (ch,), inp, trials=1, seed=0)
            for b in enumerate_branches(cfg):
                if b.success:
                    worst = max(worst, abs(b.probability - share))
    return worst <= ATOL_STATE, (
        f"max success-branch deviation from |b|^2/2: {worst:.2e} over 10 channels x 3 inputs"
    )


def _check_failure_input_independence(backend: Optional[str]) -> tuple[bool, str]:
    rng = _rng()
    ch = ChannelParams.from_b_squared(0.11, phase=0.4)
    expected = 1.0 - ch.success_probability
    worst = 0.0
    for scheme in (SCHEME_TYPICAL, SCHEME_POVM, SCHEME_CIRCUIT):
        for _ in range(10):
            inp = InputQubit.haar_random(rng)
            cfg = ScenarioConfig(scheme, (ch,), inp, trials=1, seed=0)
            fail = sum(b.probability for b in enumerate_branches(cfg) if not b.success)
            worst = max(worst, abs(fail - expected))
    return worst <= ATOL_STATE, f"max failure-probability spread {worst:.2e} over 30 runs"


def _check_knowledge_guards(backend: Optional[str]) -> tuple[bool, str]:
    rng = _rng()
    inp = InputQubit.haar_random(rng)
    ch = ChannelParams.from_b_squared(0.25)
    failures = []
    try:
        run_typical(
            inp,
            ch,
            rng,
            receiver_knowledge=PartyKnowledge("bob", ()),
        )
        failures.append("ignorant receiver was allowed to correct")
    except KnowledgeError:
        pass
    for scenario, party, channels in (
        (RELAY_ASSISTANT, "alice", ("alice-charlie",)),
        (RELAY_ASSISTANT, "charlie", ("alice-charlie",)),
        (RELAY_ENDPOINTS, "charlie", ("charlie-bob",)),
        (RELAY_ENDPOINTS, "alice", ("alice-charlie", "charlie-bob")),
    ):
        try:
            run_relay(
                inp,
                ch,
                ch,
                scenario,
                rng,
                knowledge={party: PartyKnowledge(party, channels)},
            )
            failures.append(f"{scenario} accepted bad knowledge for {party}")
        except KnowledgeError:
            pass
    if failures:
        return False, "; ".join(failures)
    return True, "all 5 forbidden knowledge assignments rejected"


# ---------------------------------------------------------------------------
# Full-level Monte Carlo checks
# ---------------------------------------------------------------------------

_MC_SEED = 20260821
_MC_TRIALS = 100_000


def _mc_configs() -> list[ScenarioConfig]:
    ch = ChannelParams.from_b_squared(0.25)
    ch1 = ChannelParams.from_b_squared(0.3)
    ch2 = ChannelParams.from_b_squared(0.2)
    inp = InputQubit(0.6, 0.8)
    return [
        ScenarioConfig(SCHEME_TYPICAL, (ch,), inp, trials=_MC_TRIALS, seed=_MC_SEED),
        ScenarioConfig(SCHEME_POVM, (ch,), inp, trials=_MC_TRIALS, seed=_MC_SEED),
        ScenarioConfig(SCHEME_CIRCUIT, (ch,), inp, trials=_MC_TRIALS, seed=_MC_SEED),
        ScenarioConfig(RELAY_ASSISTANT, (ch1, ch2), inp, trials=_MC_TRIALS, seed=_MC_SEED),
        ScenarioConfig(RELAY_ENDPOINTS, (ch1, ch2), inp, trials=_MC_TRIALS, seed=_MC_SEED),
    ]


def _check_mc_statistics(backend: Optional[str]) -> tuple[bool, str]:
    hard = []
    soft = []
    for cfg in _mc_configs():
        report = monte_carlo(cfg, backend=backend)
        for stat in report.per_outcome:
            sigma = (stat.exact * (1.0 - stat.exact) / cfg.trials) ** 0.5
            if sigma == 0.0:
                if stat.empirical != stat.exact:
                    hard.append(f"{cfg.scheme}:{stat.label} hit a dead branch")
                continue
            z = abs(stat.empirical - stat.exact) / sigma
            if z >= 5.0:
                hard.append(f"{cfg.scheme}:{stat.label} at {z:.1f} sigma")
            elif z >= 4.0:
                soft.append(f"{cfg.scheme}:{stat.label} at {z:.1f} sigma")
    if hard:
        return False, "beyond 5 sigma: " + "; ".join(hard)
    detail = f"all branches within 4 sigma over {_MC_TRIALS} trials x 5 schemes"
    if soft:
        detail = "between 4 and 5 sigma (tolerated): " + "; ".join(soft)
    return True, detail


def _check_mc_reproducibility(backend: Optional[str]) -> tuple[bool, str]:
    cfg = ScenarioConfig(
        SCHEME_TYPICAL,
        (ChannelParams.from_b_squared(0.25),),
        InputQubit(0.6, 0.8),
        trials=20_000,
        seed=_MC_SEED,
    )
    first = monte_carlo(cfg, backend=backend).to_dict()
    second = monte_carlo(cfg, backend=backend).to_dict()
    ok = first == second
    return ok, "two identical runs produced identical reports" if ok else "reports differ"


def _check_backend_agreement(backend: Optional[str]) -> tuple[bool, str]:
    backends = available_backends()
    if len(backends) < 2:
        return True, f"only {backends[0]} available; nothing to compare"
    cfg = ScenarioConfig(
        RELAY_ENDPOINTS,
        (ChannelParams.from_b_squared(0.3), ChannelParams.from_b_squared(0.2)),
        InputQubit(0.6, 0.8),
        trials=20_000,
        seed=_MC_SEED,
    )
    columns = {}
    for name in backends:
        report = monte_carlo(cfg, backend=name)
        columns[name] = [stat.empirical for stat in report.per_outcome]
    values = list(columns.values())
    ok = all(v == values[0] for v in values[1:])
    detail = (
        f"branch frequencies identical across {', '.join(backends)}"
        if ok
        else "backends disagree on branch frequencies"
    )
    return ok, detail


def _check_sampled_runner(backend: Optional[str]) -> tuple[bool, str]:
    """Single-shot runner frequencies against exact success probability."""

    rng = _rng()
    shots = 2000
    worst = 0.0
    for ch, scenario in (
        (ChannelParams.from_b_squared(0.25), None),
        (ChannelParams.from_b_squared(0.3), RELAY_ASSISTANT),
    ):
        if scenario is None:
            p = ch.success_probability
            hits = sum(
                run_typical(InputQubit(0.6, 0.8), ch, rng).success for _ in range(shots)
            )
        else:
            ch2 = ChannelParams.from_b_squared(0.2)
            p = ch.success_probability * ch2.success_probability
            hits = sum(
                run_relay(InputQubit(0.6, 0.8), ch, ch2, scenario, rng).success
                for _ in range(shots)
            )
        sigma = (p * (1.0 - p) / shots) ** 0.5
        worst = max(worst, abs(hits / shots - p) / sigma)
    return worst < 5.0, f"max deviation {worst:.2f} sigma over {shots} single-shot runs"


_CHECKS: tuple[tuple[str, str, Callable[[Optional[str]], tuple[bool, str]]], ...] = (
    ("bell-orthonormality", FAST, _check_bell_orthonormality),
    ("operator-unitarity", FAST, _check_operator_unitarity),
    ("kraus-completeness", FAST, _check_kraus_completeness),
    ("filter-conjugation", FAST, _check_filter_conjugation),
    ("dilation-blocks", FAST, _check_dilation_blocks),
    ("povm-input-independence", FAST, _check_povm_input_independence),
    ("enumeration-consistency", FAST, _check_enumeration_consistency),
    ("scheme-equivalence", FAST, _check_scheme_equivalence),
    ("relay-factorization", FAST, _check_relay_factorization),
    ("typical-success-split", FAST, _check_typical_success_split),
    ("failure-input-independence", FAST, _check_failure_input_independence),
    ("knowledge-guards", FAST, _check_knowledge_guards),
    ("mc-statistics", FULL, _check_mc_statistics),
    ("mc-reproducibility", FULL, _check_mc_reproducibility),
    ("backend-agreement", FULL, _check_backend_agreement),
    ("sampled-runner", FULL, _check_sampled_runner),
)


def available_checks(level: str = FULL) -> list[str]:
    """Names of the checks that ``run_checks`` would execute at ``level``."""

    if level not in LEVELS:
        raise ValueError(f"unknown verification level {level!r}")
    wanted = (FAST,) if level == FAST else LEVELS
    return [name for name, lv, _ in _CHECKS if lv in wanted]


def run_checks(level: str = FAST, backend: Optional[str] = None) -> list[CheckResult]:
    """Execute all checks at ``level`` and return their results in order."""

    if level not in LEVELS:
        raise ValueError(f"unknown verification level {level!r}")
    wanted = (FAST,) if level == FAST else LEVELS
    results = []
    for name, check_level, func in _CHECKS:
        if check_level not in wanted:
            continue
        passed, detail = func(backend)
        results.append(CheckResult(name, check_level, passed, detail))
    return results


def format_result(result: CheckResult) -> str:
    status = "PASS" if result.passed else "FAIL"
    return f"{status} {result.name}: {result.detail}"
