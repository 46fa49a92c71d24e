"""Trial-engine selection: compiled numba kernels or the numpy fallback.

The engine is chosen per call: an explicit ``backend=`` argument wins,
then the ``TELEPORTSIM_BACKEND`` environment variable ("numba",
"numpy", or "auto"), then the default of numba when it is importable.
Both engines consume the same pre-drawn uniform table and produce
identical branch sequences, so switching backends never changes the
sampled outcomes of a seeded run.

Operator matrices are built once per call from the constructors in
``operators`` - the kernels receive plain arrays and never duplicate
the protocol algebra.
"""

from __future__ import annotations

import importlib.util
import os
from typing import NamedTuple

import numpy as np

from . import _trials_numpy
from .errors import BackendError, InvalidArgument
from .operators import (
    ChannelParams,
    CorrectionCode,
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
)

ENV_BACKEND = "TELEPORTSIM_BACKEND"

HAS_NUMBA = importlib.util.find_spec("numba") is not None

_KIND_CODES = {"typical": 0, "povm": 1, "circuit": 2}

_VARIANT_KINDS = {SCHEME_POVM: "povm", SCHEME_CIRCUIT: "circuit"}


class TrialBatch(NamedTuple):
    """Per-trial outcome arrays; ``hop2`` is -1 where no second hop ran."""

    hop1: np.ndarray
    hop2: np.ndarray
    success: np.ndarray
    fidelity: np.ndarray
    final: np.ndarray


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if HAS_NUMBA else ("numpy",)


def resolve_backend(name: str | None = None) -> str:
    """Pick the engine: argument, then environment, then best available."""
    choice = name if name is not None else os.environ.get(ENV_BACKEND, "auto")
    choice = (choice or "auto").strip().lower()
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise BackendError("numba backend requested but numba is not importable")
        return "numba"
    raise BackendError(f"unknown backend {choice!r} (use 'numba', 'numpy' or 'auto')")


class _ChannelPack(NamedTuple):
    chan: np.ndarray      # (4,)   pair amplitudes
    ufs: np.ndarray       # (4,4,4) receiver corrections per Bell outcome
    kraus: np.ndarray     # (5,4,4) sender measurement operators
    dilation: np.ndarray  # (8,8)  sender dilation unitary


def _channel_pack(ch: ChannelParams) -> _ChannelPack:
    return _ChannelPack(
        chan=ch.pair_state().amplitudes.copy(),
        ufs=np.stack([receiver_correction(k, ch).matrix for k in range(4)]),
        kraus=measurement_operators(ch).operators.copy(),
        dilation=sender_dilation(ch).matrix.copy(),
    )


def _shared_arrays():
    bellc = np.conj(np.stack([b.amplitudes for b in bell_basis()]))
    corr = np.stack(
        [
            CorrectionCode.IDENTITY.matrix(),
            CorrectionCode.Z.matrix(),
            CorrectionCode.X.matrix(),
            CorrectionCode.IY.matrix(),
        ]
    )
    return bellc, corr


def hop_kinds(scheme: str, variant: str) -> tuple[str, ...]:
    if variant not in _VARIANT_KINDS:
        raise InvalidArgument(f"unknown sender-side variant {variant!r}")
    sender_kind = _VARIANT_KINDS[variant]
    if scheme == SCHEME_TYPICAL:
        return ("typical",)
    if scheme == SCHEME_POVM:
        return ("povm",)
    if scheme == SCHEME_CIRCUIT:
        return ("circuit",)
    if scheme == RELAY_ASSISTANT:
        return ("typical", sender_kind)
    if scheme == RELAY_ENDPOINTS:
        return (sender_kind, "typical")
    raise InvalidArgument(f"unknown scheme {scheme!r}")


def uniforms_per_trial(scheme: str) -> int:
    """Uniform variates one trial consumes: two per hop, relays use four."""
    return 4 if scheme in RELAY_SCENARIOS else 2


def run_trials(
    scheme: str,
    channels,
    inputs: np.ndarray,
    uniforms: np.ndarray,
    *,
    variant: str = SCHEME_CIRCUIT,
    backend: str | None = None,
) -> TrialBatch:
    """Execute a batch of trials and return per-trial outcome arrays.

    ``inputs`` is a (T, 2) complex array of payload amplitudes (one row
    per trial), ``uniforms`` a (T, k) float array with k =
    ``uniforms_per_trial(scheme)``.  Trial t consumes exactly row t of
    both tables, so any suffix of a batch can be reproduced in
    isolation.
    """
    kinds = hop_kinds(scheme, variant)
    engine = resolve_backend(backend)
    inputs = np.ascontiguousarray(inputs, dtype=np.complex128)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != 2:
        raise InvalidArgument(f"inputs must be (trials, 2), got {inputs.shape}")
    want = uniforms_per_trial(scheme)
    if uniforms.ndim != 2 or uniforms.shape != (inputs.shape[0], want):
        raise InvalidArgument(
            f"uniforms must be ({inputs.shape[0]}, {want}), got {uniforms.shape}"
        )
    packs = [_channel_pack(ch) for ch in channels]
    if len(packs) != len(kinds):
        raise InvalidArgument(
            f"scheme {scheme!r} needs {len(kinds)} channel(s), got {len(packs)}"
        )
    if engine == "numpy":
        return _run_numpy(kinds, packs, inputs, uniforms)
    return _run_numba(kinds, packs, inputs, uniforms)


def _numpy_pack(kind: str, pack: _ChannelPack, bellc, corr):
    if kind == "typical":
        return (pack.chan, bellc, pack.ufs)
    if kind == "povm":
        return (pack.chan, pack.kraus, corr)
    return (pack.chan, pack.dilation, corr, bellc)


def _run_numpy(kinds, packs, inputs, uniforms) -> TrialBatch:
    bellc, corr = _shared_arrays()
    T = inputs.shape[0]
    if len(kinds) == 1:
        branch, ok, fid, final = _trials_numpy.single_hop_batch(
            kinds[0],
            inputs,
            _numpy_pack(kinds[0], packs[0], bellc, corr),
            uniforms[:, 0],
            uniforms[:, 1],
        )
        return TrialBatch(branch, np.full(T, -1, np.int64), ok, fid, final)
    h1, h2, ok, fid, final = _trials_numpy.relay_batch(
        kinds[0],
        kinds[1],
        inputs,
        _numpy_pack(kinds[0], packs[0], bellc, corr),
        _numpy_pack(kinds[1], packs[1], bellc, corr),
        uniforms,
    )
    return TrialBatch(h1, h2, ok, fid, final)


def _run_numba(kinds, packs, inputs, uniforms) -> TrialBatch:
    from . import _trials_numba as tn

    bellc, corr = _shared_arrays()
    T = inputs.shape[0]
    branch = np.empty(T, np.int64)
    success = np.empty(T, np.bool_)
    fid = np.empty(T, np.float64)
    final = np.empty((T, 2), np.complex128)
    if len(kinds) == 1:
        p = packs[0]
        tn.single_hop_loop(
            _KIND_CODES[kinds[0]], inputs, p.chan, p.ufs, p.kraus, p.dilation,
            corr, bellc, uniforms, branch, success, fid, final,
        )
        return TrialBatch(branch, np.full(T, -1, np.int64), success, fid, final)
    hop2 = np.empty(T, np.int64)
    p1, p2 = packs
    tn.relay_loop(
        _KIND_CODES[kinds[0]], _KIND_CODES[kinds[1]], inputs,
        p1.chan, p1.ufs, p1.kraus, p1.dilation,
        p2.chan, p2.ufs, p2.kraus, p2.dilation,
        corr, bellc, uniforms, branch, hop2, success, fid, final,
    )
    return TrialBatch(branch, hop2, success, fid, final)


def warmup(backend: str | None = None) -> str:
    """Run a tiny batch of every scheme so JIT cost is paid up front."""
    engine = resolve_backend(backend)
    ch = ChannelParams.from_b_squared(0.25)
    inputs = np.array([[0.6, 0.8]], dtype=np.complex128)
    for scheme in (SCHEME_TYPICAL, SCHEME_POVM, SCHEME_CIRCUIT):
        run_trials(scheme, (ch,), inputs, np.full((1, 2), 0.3), backend=engine)
    for scheme in (RELAY_ASSISTANT, RELAY_ENDPOINTS):
        for variant in (SCHEME_CIRCUIT, SCHEME_POVM):
            run_trials(
                scheme, (ch, ch), inputs, np.full((1, 4), 0.3),
                variant=variant, backend=engine,
            )
    return engine
