"""Pure numpy implementations of the inner-loop kernels.

Every arithmetic step mirrors ``_ext.pyx`` operation for operation (same
accumulation order, no fused multiply-add) so both backends produce
bit-identical detections.
"""

import numpy as np

BACKEND = "python"

# symbols per chunk in the brute-force distance search
_DETECT_CHUNK_ELEMS = 1 << 21


def mrc_combine(gains, received):
    gains = np.ascontiguousarray(gains, dtype=np.complex128)
    received = np.ascontiguousarray(received, dtype=np.complex128)
    hr, hi = gains.real, gains.imag
    rr, ri = received.real, received.imag
    n, branches = gains.shape
    num_re = np.zeros(n)
    num_im = np.zeros(n)
    scale = np.zeros(n)
    for b in range(branches):
        num_re += hr[:, b] * rr[:, b] + hi[:, b] * ri[:, b]
        num_im += hr[:, b] * ri[:, b] - hi[:, b] * rr[:, b]
        scale += hr[:, b] * hr[:, b] + hi[:, b] * hi[:, b]
    with np.errstate(invalid="ignore", divide="ignore"):
        zero = scale == 0.0
        safe = np.where(zero, 1.0, scale)
        out_re = np.where(zero, np.nan, num_re / safe)
        out_im = np.where(zero, np.nan, num_im / safe)
    return out_re + 1j * out_im, scale


def detect_nearest(combined, points):
    combined = np.ascontiguousarray(combined, dtype=np.complex128).ravel()
    points = np.ascontiguousarray(points, dtype=np.complex128)
    pr, pi = points.real, points.imag
    out = np.empty(combined.size, dtype=np.int64)
    step = max(1, _DETECT_CHUNK_ELEMS // max(points.size, 1))
    for start in range(0, combined.size, step):
        c = combined[start : start + step]
        dr = c.real[:, None] - pr[None, :]
        di = c.imag[:, None] - pi[None, :]
        d = dr * dr + di * di
        idx = np.argmin(d, axis=1)
        idx[~np.isfinite(c)] = -1
        out[start : start + step] = idx
    return out


def mrc_detect(gains, received, points):
    combined, _ = mrc_combine(gains, received)
    return detect_nearest(combined, points)


def count_errors(tx, rx, labels, bits_per_symbol):
    tx = np.asarray(tx, dtype=np.int64)
    rx = np.asarray(rx, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    erased = rx < 0
    diff = labels[tx] ^ labels[np.where(erased, 0, rx)]
    bit_err = np.bitwise_count(diff).astype(np.int64)
    bit_err[erased] = bits_per_symbol
    sym_err = int(np.count_nonzero((tx != rx)))
    return int(bit_err.sum()), sym_err
