"""Vectorized pure-numpy trial engine.

Fallback implementation of the Monte Carlo kernels: whole trial batches
as (T, ...) array sweeps.  The compiled engine in ``_trials_numba``
performs the same arithmetic trial by trial; the two must stay
operation-for-operation aligned (same contraction order, explicit
``re*re + im*im`` magnitudes, division by sqrt rather than reciprocal
multiplication) so that both backends sample identical branches from
identical uniform variates.

All kernels consume pre-drawn uniforms, return per-trial branch index,
success flag, fidelity against the hop input, and the receiver-side
qubit (used for relay threading); measured registers are dropped as soon
as they factor out, which is what makes these kernels fast while staying
equivalent to the reference runners in ``protocols``.
"""

from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-14


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real * z.real + z.imag * z.imag


def categorical(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise cumulative sampling with the shared floor semantics.

    Selects the first index whose cumulative sum exceeds the uniform,
    skipping outcomes at or below PROB_FLOOR; a uniform beyond the last
    cumulative value falls back to the last live outcome.
    """
    n = probs.shape[1]
    cum = np.cumsum(probs, axis=1)
    k = np.minimum(np.sum(u[:, None] >= cum, axis=1), n - 1)
    live = probs > PROB_FLOOR
    rows = np.arange(k.size)
    dead = ~live[rows, k]
    if np.any(dead):
        last = (n - 1) - np.argmax(live[:, ::-1], axis=1)
        for t in np.flatnonzero(dead):
            j = int(k[t])
            while j < n and probs[t, j] <= PROB_FLOOR:
                j += 1
            k[t] = j if j < n else last[t]
    return k


def _payload_with_channel(inputs: np.ndarray, chan: np.ndarray) -> np.ndarray:
    """(T, 4, 2) amplitudes of (payload, pair) grouped as (q1q2, q3)."""
    amp = inputs[:, :, None, None] * chan.reshape(2, 2)[None, None, :, :]
    return amp.reshape(inputs.shape[0], 4, 2)


def typical_batch(inputs, chan, bellc, ufs, u0, u1):
    """Receiver-corrected scheme; branch index is 2*bell + flag."""
    T = inputs.shape[0]
    x = _payload_with_channel(inputs, chan)
    coeff = np.einsum("kb,tbr->tkr", bellc, x)
    probs = _abs2(coeff).sum(axis=2)
    k = categorical(probs, u0)
    rows = np.arange(T)
    sel = coeff[rows, k] / np.sqrt(probs[rows, k])[:, None]

    # receiver register (payload, flag) with the flag attached in |0>
    s4 = np.zeros((T, 4), dtype=np.complex128)
    s4[:, 0] = sel[:, 0]
    s4[:, 2] = sel[:, 1]
    for kk in range(4):
        mask = k == kk
        if np.any(mask):
            s4[mask] = np.einsum("ji,ti->tj", ufs[kk], s4[mask])
    pm = np.empty((T, 2))
    pm[:, 0] = _abs2(s4[:, 0]) + _abs2(s4[:, 2])
    pm[:, 1] = _abs2(s4[:, 1]) + _abs2(s4[:, 3])
    m = categorical(pm, u1)

    final = np.empty((T, 2), dtype=np.complex128)
    root = np.sqrt(pm[rows, m])
    zero = m == 0
    final[zero, 0] = s4[zero, 0] / root[zero]
    final[zero, 1] = s4[zero, 2] / root[zero]
    final[~zero, 0] = s4[~zero, 1] / root[~zero]
    final[~zero, 1] = s4[~zero, 3] / root[~zero]
    overlap = np.conj(inputs[:, 0]) * final[:, 0] + np.conj(inputs[:, 1]) * final[:, 1]
    return 2 * k + m, zero, _abs2(overlap), final


def povm_batch(inputs, chan, kraus, corr, u0, u1):
    """Sender-side generalized measurement; u1 is accepted and unused."""
    T = inputs.shape[0]
    x = _payload_with_channel(inputs, chan)
    y = np.einsum("kab,tbr->tkar", kraus, x)
    # staged sums keep numpy on its sequential (< 8 element) reduction
    # path, bit-aligned with the compiled engine's accumulation order
    probs = _abs2(y).sum(axis=3).sum(axis=2)
    k = categorical(probs, u0)
    rows = np.arange(T)
    ysel = y[rows, k]  # (T, 4, 2), unnormalized branch amplitudes

    final = np.empty((T, 2), dtype=np.complex128)
    fail = k == 4
    final[fail, 0] = 1.0
    final[fail, 1] = 0.0
    ok = ~fail
    if np.any(ok):
        rown = _abs2(ysel[:, :, 0]) + _abs2(ysel[:, :, 1])
        best = np.argmax(rown, axis=1)
        vec = ysel[rows, best] / np.sqrt(rown[rows, best])[:, None]
        for kk in range(4):
            mask = k == kk
            if np.any(mask):
                final[mask] = np.einsum("jr,tr->tj", corr[kk], vec[mask])
    overlap = np.conj(inputs[:, 0]) * final[:, 0] + np.conj(inputs[:, 1]) * final[:, 1]
    fid = _abs2(overlap)
    fid[fail] = _abs2(inputs[fail, 0])
    return k, ok, fid, final


def circuit_batch(inputs, chan, dilation, corr, bellc, u0, u1):
    """Dilated sender-side scheme; branch 0..3 per Bell outcome, 4 = failure."""
    T = inputs.shape[0]
    # register (q1, q2, flag, q3): four nonzero entries before the dilation
    s = np.zeros((T, 8, 2), dtype=np.complex128)
    s[:, 0, 0] = inputs[:, 0] * chan[0]
    s[:, 2, 1] = inputs[:, 0] * chan[3]
    s[:, 4, 0] = inputs[:, 1] * chan[0]
    s[:, 6, 1] = inputs[:, 1] * chan[3]
    y = np.einsum("ab,tbr->tar", dilation, s)

    view = _abs2(y).reshape(T, 4, 2, 2)
    pm = np.empty((T, 2))
    pm[:, 0] = view[:, :, 0, :].sum(axis=2).sum(axis=1)
    pm[:, 1] = view[:, :, 1, :].sum(axis=2).sum(axis=1)
    m = categorical(pm, u0)

    branch = np.full(T, 4, dtype=np.int64)
    success = m == 0
    final = np.empty((T, 2), dtype=np.complex128)
    fid = np.empty(T)
    final[~success, 0] = 1.0
    final[~success, 1] = 0.0
    fid[~success] = _abs2(inputs[~success, 0])
    if np.any(success):
        rows = np.flatnonzero(success)
        v = y[rows][:, ::2, :] / np.sqrt(pm[rows, 0])[:, None, None]
        coeff = np.einsum("kb,tbr->tkr", bellc, v)
        probs = _abs2(coeff).sum(axis=2)
        kk = categorical(probs, u1[rows])
        sub = np.arange(rows.size)
        vec = coeff[sub, kk] / np.sqrt(probs[sub, kk])[:, None]
        out = np.empty_like(vec)
        for j in range(4):
            mask = kk == j
            if np.any(mask):
                out[mask] = np.einsum("jr,tr->tj", corr[j], vec[mask])
        branch[rows] = kk
        final[rows] = out
        overlap = (
            np.conj(inputs[rows, 0]) * out[:, 0]
            + np.conj(inputs[rows, 1]) * out[:, 1]
        )
        fid[rows] = _abs2(overlap)
    return branch, success, fid, final


_HOPS = {
    "typical": typical_batch,
    "povm": povm_batch,
    "circuit": circuit_batch,
}


def single_hop_batch(kind, inputs, pack, u0, u1):
    return _HOPS[kind](inputs, *pack, u0, u1)


def relay_batch(kind1, kind2, inputs, pack1, pack2, uniforms):
    """Two-hop composition; hop 2 runs on the surviving sub-batch.

    Fidelity is measured against the original payload throughout, and
    ``hop2`` is -1 for trials that died in hop 1.
    """
    T = inputs.shape[0]
    h1, ok1, fid, final1 = single_hop_batch(
        kind1, inputs, pack1, uniforms[:, 0], uniforms[:, 1]
    )
    h2 = np.full(T, -1, dtype=np.int64)
    success = np.zeros(T, dtype=bool)
    final = final1.copy()
    rows = np.flatnonzero(ok1)
    if rows.size:
        mid = np.ascontiguousarray(final1[rows])
        b2, ok2, _, final2 = single_hop_batch(
            kind2, mid, pack2, uniforms[rows, 2], uniforms[rows, 3]
        )
        h2[rows] = b2
        success[rows] = ok2
        final[rows] = final2
        overlap = (
            np.conj(inputs[rows, 0]) * final2[:, 0]
            + np.conj(inputs[rows, 1]) * final2[:, 1]
        )
        fid[rows] = _abs2(overlap)
    return h1, h2, success, fid, final
