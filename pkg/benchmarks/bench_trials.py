"""Benchmark the Monte Carlo kernels: compiled backend vs numpy fallback.

Runs every scheme through both engines on identical uniform streams,
asserts the branch/success/fidelity outputs agree bit for bit, and prints
wall-clock timings.  Usage::

    python3 benchmarks/bench_trials.py [--trials N] [--repeats R]
"""

import argparse
import sys
import time

import numpy as np

from teleportsim.backend import available_backends, run_trials, uniforms_per_trial, warmup
from teleportsim.operators import ChannelParams
from teleportsim.protocols import (
    RELAY_ASSISTANT,
    RELAY_ENDPOINTS,
    SCHEME_CIRCUIT,
    SCHEME_POVM,
    SCHEME_TYPICAL,
)

_CASES = (
    (SCHEME_TYPICAL, 1, SCHEME_CIRCUIT),
    (SCHEME_POVM, 1, SCHEME_CIRCUIT),
    (SCHEME_CIRCUIT, 1, SCHEME_CIRCUIT),
    (RELAY_ASSISTANT, 2, SCHEME_CIRCUIT),
    (RELAY_ASSISTANT, 2, SCHEME_POVM),
    (RELAY_ENDPOINTS, 2, SCHEME_CIRCUIT),
)


def _channels(count: int) -> tuple[ChannelParams, ...]:
    if count == 1:
        return (ChannelParams.from_b_squared(0.25, phase=0.9),)
    return (
        ChannelParams.from_b_squared(0.3),
        ChannelParams.from_b_squared(0.2, phase=1.1),
    )


def _time_backend(backend, scheme, channels, inputs, uniforms, variant, repeats):
    best = float("inf")
    batch = None
    for _ in range(repeats):
        start = time.perf_counter()
        batch = run_trials(
            scheme, channels, inputs, uniforms, variant=variant, backend=backend
        )
        best = min(best, time.perf_counter() - start)
    return best, batch


def _check_agreement(batches):
    reference = batches[0]
    for other in batches[1:]:
        assert np.array_equal(reference.hop1, other.hop1)
        assert np.array_equal(reference.hop2, other.hop2)
        assert np.array_equal(reference.success, other.success)
        assert float(np.max(np.abs(reference.fidelity - other.fidelity))) <= 1e-12
        assert float(np.max(np.abs(reference.final - other.final))) <= 1e-12


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=20260821)
    args = parser.parse_args(argv)

    backends = available_backends()
    for backend in backends:
        warmup(backend)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    inputs = np.broadcast_to(
        np.array([0.6, 0.8], dtype=np.complex128), (args.trials, 2)
    ).copy()

    print(f"trials={args.trials}  repeats={args.repeats}  backends={', '.join(backends)}")
    header = f"{'case':<32}" + "".join(f"{b + ' [s]':>12}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for scheme, count, variant in _CASES:
        uniforms = rng.random((args.trials, uniforms_per_trial(scheme)))
        label = scheme if count == 1 else f"{scheme}/{variant}"
        times = []
        batches = []
        for backend in backends:
            best, batch = _time_backend(
                backend, scheme, _channels(count), inputs, uniforms, variant, args.repeats
            )
            times.append(best)
            batches.append(batch)
        _check_agreement(batches)
        row = f"{label:<32}" + "".join(f"{t:>12.4f}" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)
    print("backend agreement: exact on branches/success, <=1e-12 on amplitudes")
    return 0


if __name__ == "__main__":
    sys.exit(main())
