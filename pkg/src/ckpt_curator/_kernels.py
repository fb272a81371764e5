"""Hot inner loops, each in a numba and a pure-numpy flavour.

The numba path is used when numba imports and ``CKPT_CURATOR_DISABLE_NUMBA``
is unset (or ``0``). Both flavours are always importable by name so tests and
``benchmarks/bench_kernels.py`` can compare them directly.
"""

import os

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_DISABLE_FLAG = "CKPT_CURATOR_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(_DISABLE_FLAG, "0").lower() in ("", "0", "false", "no")


# --------------------------------------------------------------------------
# numpy / pure-python reference paths


def fnv1a64_numpy(data):
    """64-bit FNV-1a over a uint8 buffer (byte-serial; no vector form exists)."""
    h = FNV_OFFSET
    for b in memoryview(np.ascontiguousarray(data, dtype=np.uint8)).cast("B"):
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def stop_scan_numpy(losses, patience):
    """Index of the first observation closing ``patience`` non-decreasing steps, or -1."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size <= patience:
        return -1
    steps = losses[1:] >= losses[:-1]
    counts = np.cumsum(steps)
    # running count at the most recent decreasing step
    reset = np.maximum.accumulate(np.where(steps, 0, counts))
    run = counts - reset
    hit = np.flatnonzero(run >= patience)
    return int(hit[0]) + 1 if hit.size else -1


def accumulate_numpy(acc, values):
    """``acc += values`` with f32 -> f64 promotion, in place."""
    np.add(acc, values.astype(np.float64), out=acc)


def bv_terms_numpy(y, log_preds):
    """Per-sample cross-entropy decomposition terms.

    y : (n, C) label distributions. log_preds : (R, n, C) clamped log-probabilities.
    Returns (noise, bias, variance, error, log_z), each shape (n,).
    """
    n_rep = log_preds.shape[0]
    mean_log = log_preds.sum(axis=0) / n_rep
    top = mean_log.max(axis=1, keepdims=True)
    log_z = top[:, 0] + np.log(np.exp(mean_log - top).sum(axis=1))
    log_ybar = mean_log - log_z[:, None]
    ybar = np.exp(log_ybar)

    pos = y > 0
    log_y = np.log(np.where(pos, y, 1.0))
    noise = -(np.where(pos, y * log_y, 0.0)).sum(axis=1)
    bias = (np.where(pos, y * (log_y - log_ybar), 0.0)).sum(axis=1)
    variance = (ybar[None] * (log_ybar[None] - log_preds)).sum(axis=2).sum(axis=0) / n_rep
    error = (-(y[None] * log_preds)).sum(axis=2).sum(axis=0) / n_rep
    return noise, bias, variance, error, log_z


# --------------------------------------------------------------------------
# numba paths

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def fnv1a64_numba(data):
        h = np.uint64(FNV_OFFSET)
        prime = np.uint64(FNV_PRIME)
        for i in range(data.shape[0]):
            h = (h ^ np.uint64(data[i])) * prime
        return h

    @numba.njit(cache=True)
    def stop_scan_numba(losses, patience):
        run = 0
        for i in range(1, losses.shape[0]):
            if losses[i] >= losses[i - 1]:
                run += 1
                if run >= patience:
                    return i
            else:
                run = 0
        return -1

    @numba.njit(cache=True)
    def accumulate_numba(acc, values):
        for i in range(acc.shape[0]):
            acc[i] += np.float64(values[i])

    @numba.njit(cache=True)
    def bv_terms_numba(y, log_preds):
        n_rep, n, n_cls = log_preds.shape
        noise = np.zeros(n)
        bias = np.zeros(n)
        variance = np.zeros(n)
        error = np.zeros(n)
        log_z = np.zeros(n)
        mean_log = np.empty(n_cls)
        for s in range(n):
            top = -np.inf
            for c in range(n_cls):
                acc = 0.0
                for r in range(n_rep):
                    acc += log_preds[r, s, c]
                mean_log[c] = acc / n_rep
                if mean_log[c] > top:
                    top = mean_log[c]
            z = 0.0
            for c in range(n_cls):
                z += np.exp(mean_log[c] - top)
            lz = top + np.log(z)
            log_z[s] = lz
            for c in range(n_cls):
                lyb = mean_log[c] - lz
                yb = np.exp(lyb)
                if y[s, c] > 0:
                    ly = np.log(y[s, c])
                    noise[s] -= y[s, c] * ly
                    bias[s] += y[s, c] * (ly - lyb)
                v = 0.0
                e = 0.0
                for r in range(n_rep):
                    v += yb * (lyb - log_preds[r, s, c])
                    e -= y[s, c] * log_preds[r, s, c]
                variance[s] += v / n_rep
                error[s] += e / n_rep
        return noise, bias, variance, error, log_z

else:  # pragma: no cover
    fnv1a64_numba = stop_scan_numba = accumulate_numba = bv_terms_numba = None


# --------------------------------------------------------------------------
# dispatch


def fnv1a64(data):
    buf = np.frombuffer(bytes(data), dtype=np.uint8) if isinstance(data, (bytes, bytearray, memoryview)) else data
    if USE_NUMBA:
        return int(fnv1a64_numba(np.ascontiguousarray(buf, dtype=np.uint8)))
    return fnv1a64_numpy(buf)


def stop_scan(losses, patience):
    losses = np.ascontiguousarray(losses, dtype=np.float64)
    if USE_NUMBA:
        return int(stop_scan_numba(losses, int(patience)))
    return stop_scan_numpy(losses, patience)


def accumulate(acc, values):
    if USE_NUMBA:
        accumulate_numba(acc, np.ascontiguousarray(values, dtype=np.float32).reshape(-1))
    else:
        accumulate_numpy(acc, np.asarray(values, dtype=np.float32).reshape(-1))


def bv_terms(y, log_preds):
    y = np.ascontiguousarray(y, dtype=np.float64)
    log_preds = np.ascontiguousarray(log_preds, dtype=np.float64)
    if USE_NUMBA:
        return bv_terms_numba(y, log_preds)
    return bv_terms_numpy(y, log_preds)


def backend():
    return "numba" if USE_NUMBA else "numpy"
