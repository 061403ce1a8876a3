"""Compiled kernels.  Mirrors ``_kernels_numpy`` function by function."""

import math

import numpy as np
from numba import njit, prange

from ._consts import ZIG_F as _FX, ZIG_R, ZIG_X as _X

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
LAYER_MASK = np.uint64(255)
INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@njit(cache=True, inline="always")
def _unif(h):
    return (np.float64(np.int64(h >> S11)) + 0.5) * INV53


@njit(cache=True)
def _normal_slow(h, i, x):
    """Rejection steps of the ziggurat after a failed rectangle test."""
    while True:
        if i == 0:
            while True:
                h = _mix(h + GOLDEN)
                a = -math.log(_unif(h)) / ZIG_R
                h = _mix(h + GOLDEN)
                c = -math.log(_unif(h))
                if c + c > a * a:
                    return ZIG_R + a if x > 0 else -(ZIG_R + a)
        h = _mix(h + GOLDEN)
        y = _FX[i] + _unif(h) * (_FX[i + 1] - _FX[i])
        if y < math.exp(-0.5 * x * x):
            return x
        h = _mix(h + GOLDEN)
        i = np.int64(h & LAYER_MASK)
        x = (2.0 * _unif(h) - 1.0) * _X[i]
        if abs(x) < _X[i + 1]:
            return x


@njit(cache=True, inline="always")
def _normal(key, heap):
    """Ziggurat draw driven by the hash chain started at ``(key, heap)``."""
    h = _mix(key ^ (heap * GOLDEN))
    i = np.int64(h & LAYER_MASK)
    x = (2.0 * _unif(h) - 1.0) * _X[i]
    if abs(x) < _X[i + 1]:
        return x
    return _normal_slow(h, i, x)


@njit(cache=True, inline="always")
def _discrete(key, heap, values, cdf):
    u = _unif(_mix(key ^ (heap * GOLDEN)))
    j = 0
    while j < cdf.shape[0] - 1 and not (u < cdf[j]):
        j += 1
    return values[j]


@njit(cache=True)
def node_weights(kind, sigma, values, cdf, key, heaps):
    out = np.empty(heaps.shape[0])
    half = 0.5 * sigma * sigma
    for i in range(heaps.shape[0]):
        if kind == 0:
            out[i] = math.exp(sigma * _normal(key, heaps[i]) - half)
        else:
            out[i] = _discrete(key, heaps[i], values, cdf)
    return out


@njit(cache=True)
def _fill(buf, kind, sigma, values, cdf, b, depth, key0, key1, prefix_depth, log_out, sums, powers):
    """Leaf products of weights written into ``buf[:b**depth]``.

    Children overwrite from the right; each parent value is read before its
    first child (which may share its slot) is written.  Log-normal paths accumulate in log space.  If ``sums`` has
    rows, ``sums[m, j]`` receives the level-m sum of products**powers[j].
    """
    half = 0.5 * sigma * sigma
    use_log = kind == 0 or log_out
    buf[0] = 0.0 if use_log else 1.0
    track = sums.shape[0] > 0
    if track:
        for j in range(powers.shape[0]):
            sums[0, j] = 1.0
    size = 1
    for m in range(1, depth + 1):
        key = key0 if m <= prefix_depth else key1
        new = size * b
        start = np.uint64(new)
        for par in range(size - 1, -1, -1):
            pv = buf[par]
            for k in range(par * b + b - 1, par * b - 1, -1):
                h = start + np.uint64(k)
                if kind == 0:
                    buf[k] = pv + (sigma * _normal(key, h) - half)
                else:
                    w = _discrete(key, h, values, cdf)
                    if use_log:
                        buf[k] = pv + (math.log(w) if w > 0 else -np.inf)
                    else:
                        buf[k] = pv * w
        if track:
            for j in range(powers.shape[0]):
                p = powers[j]
                acc = 0.0
                for k in range(new):
                    x = buf[k]
                    if use_log:
                        acc += math.exp(p * x)
                    elif x > 0:
                        acc += x * x if p == 2.0 else math.exp(p * math.log(x))
                sums[m, j] = acc
        size = new
    if use_log and not log_out:
        for k in range(size):
            buf[k] = math.exp(buf[k])


@njit(cache=True, parallel=True)
def fill_batch(kind, sigma, values, cdf, b, depth, keys0, keys1, prefix_depth, log_out, out):
    """Row r of ``out`` receives the leaf products of replicate r.

    Log-normal rows are always left in log space; the caller exponentiates.
    """
    for r in prange(keys0.shape[0]):
        _fill(out[r], kind, sigma, values, cdf, b, depth, keys0[r], keys1[r], prefix_depth,
              log_out or kind == 0, np.zeros((0, 0)), np.zeros(0))


@njit(cache=True, parallel=True)
def phase_sums(leaves, in_cos, in_sin, out_cos, out_sin):
    """Per row: sum_k P_k e^{-2 pi i s k / N}, sum_k P_k and sum_k P_k^2.

    The phase of leaf ``k = q*B + j`` factors as outer[q] * inner[j].
    """
    reps, n = leaves.shape
    nf, blk = in_cos.shape
    nblk = out_cos.shape[1]
    re = np.empty((reps, nf))
    im = np.empty((reps, nf))
    tot = np.empty(reps)
    sq = np.empty(reps)
    for r in prange(reps):
        buf = leaves[r]
        t = 0.0
        q2 = 0.0
        for k in range(n):
            t += buf[k]
            q2 += buf[k] * buf[k]
        tot[r] = t
        sq[r] = q2
        for f in range(nf):
            sr = 0.0
            si = 0.0
            for q in range(nblk):
                base = q * blk
                ac = 0.0
                asn = 0.0
                for j in range(blk):
                    x = buf[base + j]
                    ac += x * in_cos[f, j]
                    asn += x * in_sin[f, j]
                oc = out_cos[f, q]
                osn = out_sin[f, q]
                sr += oc * ac - osn * asn
                si -= oc * asn + osn * ac
            re[r, f] = sr
            im[r, f] = si
    return re, im, tot, sq


@njit(cache=True, parallel=True)
def level_power_sums(kind, sigma, values, cdf, b, depth, keys, powers):
    """Per replicate and level m: sum over |u| = m of (prod W)^power."""
    reps = keys.shape[0]
    out = np.zeros((reps, depth + 1, powers.shape[0]))
    for r in prange(reps):
        buf = np.empty(b ** depth)
        _fill(buf, kind, sigma, values, cdf, b, depth, keys[r], keys[r], depth, kind == 0,
              out[r], powers)
    return out
