"""Compiled per-trial engine (numba).

Scalar twin of ``_trials_numpy``: one loop iteration per trial, small
fixed-size scratch arrays allocated once per batch.  Every contraction
accumulates in the same order as the numpy engine's einsum calls and
every magnitude is ``re*re + im*im``, so both backends produce
bit-identical probabilities and therefore sample identical branches
from the same uniform stream.

This module must stay importable without numba (the backend selector
checks availability before importing it), so the import sits at the top
unguarded on purpose.
"""

from __future__ import annotations

import numba
import numpy as np

PROB_FLOOR = 1e-14

_SIG_CACHE = {"cache": True}


@numba.njit(inline="always", **_SIG_CACHE)
def _abs2(z):
    return z.real * z.real + z.imag * z.imag


@numba.njit(inline="always", **_SIG_CACHE)
def _pick(probs, u):
    """First index with cumulative > u, skipping floored outcomes."""
    n = probs.shape[0]
    acc = 0.0
    last = -1
    for j in range(n):
        p = probs[j]
        if p > PROB_FLOOR:
            last = j
        acc += p
        if u < acc and p > PROB_FLOOR:
            return j
    return last


@numba.njit(**_SIG_CACHE)
def _typical_trial(a0, a1, chan, bellc, ufs, u0, u1, coeff, probs4, s4in, s4, pm):
    for k in range(4):
        for r in range(2):
            acc = 0j
            for b in range(4):
                amp = a0 if (b >> 1) == 0 else a1
                x = amp * chan[2 * (b & 1) + r]
                acc += bellc[k, b] * x
            coeff[k, r] = acc
    for k in range(4):
        probs4[k] = _abs2(coeff[k, 0]) + _abs2(coeff[k, 1])
    k = _pick(probs4, u0)
    root = np.sqrt(probs4[k])
    s4in[0] = coeff[k, 0] / root
    s4in[1] = 0j
    s4in[2] = coeff[k, 1] / root
    s4in[3] = 0j
    for j in range(4):
        acc = 0j
        for i in range(4):
            acc += ufs[k, j, i] * s4in[i]
        s4[j] = acc
    pm[0] = _abs2(s4[0]) + _abs2(s4[2])
    pm[1] = _abs2(s4[1]) + _abs2(s4[3])
    m = _pick(pm, u1)
    root = np.sqrt(pm[m])
    if m == 0:
        w0 = s4[0] / root
        w1 = s4[2] / root
    else:
        w0 = s4[1] / root
        w1 = s4[3] / root
    overlap = np.conj(a0) * w0 + np.conj(a1) * w1
    return 2 * k + m, m == 0, _abs2(overlap), w0, w1


@numba.njit(**_SIG_CACHE)
def _povm_trial(a0, a1, chan, kraus, corr, u0, y, probs5):
    for k in range(5):
        acc_p = 0.0
        for a in range(4):
            for r in range(2):
                acc = 0j
                for b in range(4):
                    amp = a0 if (b >> 1) == 0 else a1
                    x = amp * chan[2 * (b & 1) + r]
                    acc += kraus[k, a, b] * x
                y[k, a, r] = acc
            acc_p += _abs2(y[k, a, 0]) + _abs2(y[k, a, 1])
        probs5[k] = acc_p
    k = _pick(probs5, u0)
    if k == 4:
        return 4, False, _abs2(a0), 1.0 + 0j, 0j
    best = 0
    bestv = -1.0
    for a in range(4):
        rown = _abs2(y[k, a, 0]) + _abs2(y[k, a, 1])
        if rown > bestv:
            bestv = rown
            best = a
    root = np.sqrt(bestv)
    h0 = y[k, best, 0] / root
    h1 = y[k, best, 1] / root
    w0 = corr[k, 0, 0] * h0 + corr[k, 0, 1] * h1
    w1 = corr[k, 1, 0] * h0 + corr[k, 1, 1] * h1
    overlap = np.conj(a0) * w0 + np.conj(a1) * w1
    return k, True, _abs2(overlap), w0, w1


@numba.njit(**_SIG_CACHE)
def _circuit_trial(a0, a1, chan, dilation, corr, bellc, u0, u1, s82, y82, coeff, probs4, pm):
    for b in range(8):
        s82[b, 0] = 0j
        s82[b, 1] = 0j
    s82[0, 0] = a0 * chan[0]
    s82[2, 1] = a0 * chan[3]
    s82[4, 0] = a1 * chan[0]
    s82[6, 1] = a1 * chan[3]
    for a in range(8):
        for r in range(2):
            acc = 0j
            for b in range(8):
                acc += dilation[a, b] * s82[b, r]
            y82[a, r] = acc
    p0 = 0.0
    p1 = 0.0
    for q in range(4):
        p0 += _abs2(y82[2 * q, 0]) + _abs2(y82[2 * q, 1])
        p1 += _abs2(y82[2 * q + 1, 0]) + _abs2(y82[2 * q + 1, 1])
    pm[0] = p0
    pm[1] = p1
    m = _pick(pm, u0)
    if m == 1:
        return 4, False, _abs2(a0), 1.0 + 0j, 0j
    root = np.sqrt(pm[0])
    for k in range(4):
        for r in range(2):
            acc = 0j
            for b in range(4):
                acc += bellc[k, b] * (y82[2 * b, r] / root)
            coeff[k, r] = acc
    for k in range(4):
        probs4[k] = _abs2(coeff[k, 0]) + _abs2(coeff[k, 1])
    k = _pick(probs4, u1)
    root = np.sqrt(probs4[k])
    h0 = coeff[k, 0] / root
    h1 = coeff[k, 1] / root
    w0 = corr[k, 0, 0] * h0 + corr[k, 0, 1] * h1
    w1 = corr[k, 1, 0] * h0 + corr[k, 1, 1] * h1
    overlap = np.conj(a0) * w0 + np.conj(a1) * w1
    return k, True, _abs2(overlap), w0, w1


@numba.njit(**_SIG_CACHE)
def _hop_trial(kind, a0, a1, chan, ufs, kraus, dilation, corr, bellc, u0, u1,
               coeff, probs4, s4in, s4, pm, y, probs5, s82, y82):
    if kind == 0:
        return _typical_trial(a0, a1, chan, bellc, ufs, u0, u1,
                              coeff, probs4, s4in, s4, pm)
    if kind == 1:
        return _povm_trial(a0, a1, chan, kraus, corr, u0, y, probs5)
    return _circuit_trial(a0, a1, chan, dilation, corr, bellc, u0, u1,
                          s82, y82, coeff, probs4, pm)


@numba.njit(**_SIG_CACHE)
def single_hop_loop(kind, inputs, chan, ufs, kraus, dilation, corr, bellc,
                    uniforms, branch, success, fid, final):
    coeff = np.empty((4, 2), np.complex128)
    probs4 = np.empty(4, np.float64)
    s4in = np.empty(4, np.complex128)
    s4 = np.empty(4, np.complex128)
    pm = np.empty(2, np.float64)
    y = np.empty((5, 4, 2), np.complex128)
    probs5 = np.empty(5, np.float64)
    s82 = np.empty((8, 2), np.complex128)
    y82 = np.empty((8, 2), np.complex128)
    for t in range(inputs.shape[0]):
        b, ok, f, w0, w1 = _hop_trial(
            kind, inputs[t, 0], inputs[t, 1], chan, ufs, kraus, dilation,
            corr, bellc, uniforms[t, 0], uniforms[t, 1],
            coeff, probs4, s4in, s4, pm, y, probs5, s82, y82,
        )
        branch[t] = b
        success[t] = ok
        fid[t] = f
        final[t, 0] = w0
        final[t, 1] = w1


@numba.njit(**_SIG_CACHE)
def relay_loop(kind1, kind2, inputs,
               chan1, ufs1, kraus1, dilation1,
               chan2, ufs2, kraus2, dilation2,
               corr, bellc, uniforms,
               hop1, hop2, success, fid, final):
    coeff = np.empty((4, 2), np.complex128)
    probs4 = np.empty(4, np.float64)
    s4in = np.empty(4, np.complex128)
    s4 = np.empty(4, np.complex128)
    pm = np.empty(2, np.float64)
    y = np.empty((5, 4, 2), np.complex128)
    probs5 = np.empty(5, np.float64)
    s82 = np.empty((8, 2), np.complex128)
    y82 = np.empty((8, 2), np.complex128)
    for t in range(inputs.shape[0]):
        a0 = inputs[t, 0]
        a1 = inputs[t, 1]
        b1, ok1, f1, w0, w1 = _hop_trial(
            kind1, a0, a1, chan1, ufs1, kraus1, dilation1,
            corr, bellc, uniforms[t, 0], uniforms[t, 1],
            coeff, probs4, s4in, s4, pm, y, probs5, s82, y82,
        )
        hop1[t] = b1
        if not ok1:
            hop2[t] = -1
            success[t] = False
            fid[t] = f1
            final[t, 0] = w0
            final[t, 1] = w1
            continue
        b2, ok2, _, v0, v1 = _hop_trial(
            kind2, w0, w1, chan2, ufs2, kraus2, dilation2,
            corr, bellc, uniforms[t, 2], uniforms[t, 3],
            coeff, probs4, s4in, s4, pm, y, probs5, s82, y82,
        )
        hop2[t] = b2
        success[t] = ok2
        overlap = np.conj(a0) * v0 + np.conj(a1) * v1
        fid[t] = _abs2(overlap)
        final[t, 0] = v0
        final[t, 1] = v1
