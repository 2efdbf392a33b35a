"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The public names (``eval_cover``, ``activation_codes``, ``mean_abs_error``,
``uncovered_adjacent_pairs``) dispatch to the numba variant when
:data:`afc._accel.USE_NUMBA` is true.  Both variants are importable under
``*_numba`` / ``*_numpy`` so tests and the benchmark can compare them.

Cubes are passed as two parallel ``int64`` arrays: ``masks`` holds a 1 for
every input bit that carries a literal, ``values`` holds the required
polarity of those bits (``values & ~masks == 0``).
"""

from __future__ import annotations

import math

import numpy as np

from afc._accel import USE_NUMBA, njit

# activation_codes region kinds
KIND_ODD = 0
KIND_NEGEXP = 1
KIND_CLAMP = 2


# -- cover evaluation ------------------------------------------------------


def eval_cover_numpy(masks, values, or_matrix, codes):
    codes = np.asarray(codes, dtype=np.int64)
    n_out = or_matrix.shape[0]
    if masks.size == 0:
        return np.zeros(codes.shape, dtype=np.int64)
    hits = (codes[:, None] & masks[None, :]) == values[None, :]
    bits = (hits.astype(np.int64) @ or_matrix.T.astype(np.int64)) > 0
    weights = np.left_shift(np.int64(1), np.arange(n_out, dtype=np.int64))
    return bits.astype(np.int64) @ weights


@njit
def eval_cover_numba(masks, values, or_matrix, codes):
    n_codes = codes.shape[0]
    n_prod = masks.shape[0]
    n_out = or_matrix.shape[0]
    out = np.zeros(n_codes, dtype=np.int64)
    hit = np.zeros(n_prod, dtype=np.bool_)
    for i in range(n_codes):
        c = codes[i]
        for p in range(n_prod):
            hit[p] = (c & masks[p]) == values[p]
        word = 0
        for j in range(n_out):
            for p in range(n_prod):
                if or_matrix[j, p] and hit[p]:
                    word |= 1 << j
                    break
        out[i] = word
    return out


# -- wrapped table lookup --------------------------------------------------


def activation_codes_numpy(
    x, entries, kind, in_step, nearest, bp_lo, bp_hi, sat_lo, sat_hi, gain_code, out_scale, unfolded
):
    x = np.asarray(x, dtype=np.float64)
    entries = np.asarray(entries, dtype=np.int64)
    last = entries.shape[0] - 1
    neg = x < 0
    if kind == KIND_NEGEXP:
        t = np.where(neg, -x, 0.0)
    elif kind == KIND_CLAMP:
        t = np.maximum(x, 0.0)
    else:
        t = np.abs(x)
    scaled = t / in_step
    idx = np.floor(scaled)
    if nearest:
        idx = idx + ((scaled - idx) >= 0.5)
    idx = np.clip(idx, 0, last).astype(np.int64)
    mag = entries[idx]
    if kind == KIND_NEGEXP:
        if unfolded:
            mag = np.floor(mag * gain_code / out_scale + 0.5).astype(np.int64)
        lin = np.floor(x * gain_code + 0.5).astype(np.int64)
        out = np.where(neg, -mag, lin)
        out = np.where(x <= bp_lo, sat_lo, out)
    elif kind == KIND_CLAMP:
        out = np.where(x >= bp_hi, sat_hi, mag)
    else:
        out = np.where(neg, -mag, mag)
        out = np.where(x >= bp_hi, sat_hi, out)
        out = np.where(x <= bp_lo, sat_lo, out)
    return out.astype(np.int64)


@njit
def activation_codes_numba(
    x, entries, kind, in_step, nearest, bp_lo, bp_hi, sat_lo, sat_hi, gain_code, out_scale, unfolded
):
    n = x.shape[0]
    last = entries.shape[0] - 1
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        xi = x[i]
        if kind == KIND_NEGEXP:
            if xi <= bp_lo:
                out[i] = sat_lo
                continue
            if xi >= 0.0:
                out[i] = np.int64(math.floor(xi * gain_code + 0.5))
                continue
            t = -xi
        elif kind == KIND_CLAMP:
            if xi >= bp_hi:
                out[i] = sat_hi
                continue
            t = xi if xi > 0.0 else 0.0
        else:
            if xi >= bp_hi:
                out[i] = sat_hi
                continue
            if xi <= bp_lo:
                out[i] = sat_lo
                continue
            t = -xi if xi < 0.0 else xi
        scaled = t / in_step
        k = math.floor(scaled)
        if nearest and scaled - k >= 0.5:
            k += 1
        if k > last:
            k = last
        if k < 0:
            k = 0
        mag = entries[np.int64(k)]
        if kind == KIND_NEGEXP:
            if unfolded:
                mag = np.int64(math.floor(mag * gain_code / out_scale + 0.5))
            out[i] = -mag
        elif kind == KIND_CLAMP:
            out[i] = mag
        else:
            out[i] = -mag if xi < 0.0 else mag
    return out


# -- error accumulation ----------------------------------------------------


def mean_abs_error_numpy(a, b):
    d = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    return math.fsum(d.tolist()) / d.size


@njit
def mean_abs_error_numba(a, b):
    # Neumaier compensated sum, fixed order
    s = 0.0
    comp = 0.0
    for i in range(a.shape[0]):
        v = abs(a[i] - b[i])
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
    return (s + comp) / a.shape[0]


# -- hazard scan -----------------------------------------------------------


def uncovered_adjacent_pairs_numpy(onset, masks, values, n):
    onset = np.asarray(onset, dtype=np.bool_)
    codes = np.flatnonzero(onset).astype(np.int64)
    found = []
    for b in range(n):
        bit = np.int64(1) << b
        lo = codes[(codes & bit) == 0]
        lo = lo[onset[lo | bit]]
        if lo.size == 0:
            continue
        if masks.size:
            ok = ((masks[None, :] & bit) == 0) & ((lo[:, None] & masks[None, :]) == values[None, :])
            lo = lo[~ok.any(axis=1)]
        for a in lo:
            found.append((int(a), int(a | bit)))
    found.sort()
    return np.array(found, dtype=np.int64).reshape(-1, 2)


@njit
def uncovered_adjacent_pairs_numba(onset, masks, values, n):
    size = onset.shape[0]
    buf = np.empty((size * n, 2), dtype=np.int64)
    k = 0
    for a in range(size):
        if not onset[a]:
            continue
        for b in range(n):
            bit = 1 << b
            if a & bit:
                continue
            c = a | bit
            if not onset[c]:
                continue
            covered = False
            for p in range(masks.shape[0]):
                if (masks[p] & bit) == 0 and (a & masks[p]) == values[p]:
                    covered = True
                    break
            if not covered:
                buf[k, 0] = a
                buf[k, 1] = c
                k += 1
    return buf[:k].copy()


# -- dispatch --------------------------------------------------------------


def _as_int64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


if USE_NUMBA:

    def eval_cover(masks, values, or_matrix, codes):
        return eval_cover_numba(
            _as_int64(masks), _as_int64(values), np.ascontiguousarray(or_matrix, dtype=np.bool_), _as_int64(codes)
        )

    def activation_codes(x, entries, kind, in_step, nearest, bp_lo, bp_hi, sat_lo, sat_hi, gain_code, out_scale, unfolded):
        x = np.ascontiguousarray(x, dtype=np.float64)
        shape = x.shape
        out = activation_codes_numba(
            x.ravel(), _as_int64(entries), int(kind), float(in_step), bool(nearest), float(bp_lo), float(bp_hi),
            int(sat_lo), int(sat_hi), float(gain_code), float(out_scale), bool(unfolded),
        )
        return out.reshape(shape)

    def mean_abs_error(a, b):
        return float(
            mean_abs_error_numba(
                np.ascontiguousarray(a, dtype=np.float64).ravel(), np.ascontiguousarray(b, dtype=np.float64).ravel()
            )
        )

    def uncovered_adjacent_pairs(onset, masks, values, n):
        # numba scan order is (a, bit); sort to match the numpy variant
        pairs = uncovered_adjacent_pairs_numba(np.ascontiguousarray(onset, dtype=np.bool_), _as_int64(masks), _as_int64(values), int(n))
        if pairs.shape[0]:
            pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        return pairs

else:
    eval_cover = eval_cover_numpy
    activation_codes = activation_codes_numpy
    mean_abs_error = mean_abs_error_numpy

    def uncovered_adjacent_pairs(onset, masks, values, n):
        return uncovered_adjacent_pairs_numpy(onset, _as_int64(masks), _as_int64(values), n)
