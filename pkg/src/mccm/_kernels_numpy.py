"""Pure-numpy kernels with the same signatures and random streams as ``_kernels_numba``."""

import numpy as np

from ._consts import ZIG_F, ZIG_R, ZIG_X

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
INV53 = 1.0 / 9007199254740992.0


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * M1
        z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


def _next(h):
    with np.errstate(over="ignore"):
        return _mix(h + GOLDEN)


def _unif(h):
    return ((h >> np.uint64(11)).astype(np.int64).astype(np.float64) + 0.5) * INV53


def _start(key, heaps):
    with np.errstate(over="ignore"):
        return _mix(np.uint64(key) ^ (heaps * GOLDEN))


def _normals(key, heaps):
    """Vectorised ziggurat following the same hash chain per node as the compiled path."""
    h = _start(key, heaps)
    out = np.empty(h.shape[0])
    todo = np.arange(h.shape[0])
    while todo.size:
        hh = h[todo]
        i = (hh & np.uint64(255)).astype(np.int64)
        x = (2.0 * _unif(hh) - 1.0) * ZIG_X[i]
        ok = np.abs(x) < ZIG_X[i + 1]
        out[todo[ok]] = x[ok]
        rest = ~ok
        todo, hh, i, x = todo[rest], hh[rest], i[rest], x[rest]
        tail = i == 0
        if tail.any():
            tt, th, tx = todo[tail], hh[tail], x[tail]
            while tt.size:
                th = _next(th)
                a = -np.log(_unif(th)) / ZIG_R
                th = _next(th)
                c = -np.log(_unif(th))
                acc = c + c > a * a
                out[tt[acc]] = np.where(tx[acc] > 0, ZIG_R + a[acc], -(ZIG_R + a[acc]))
                tt, th, tx = tt[~acc], th[~acc], tx[~acc]
            keep = ~tail
            todo, hh, i, x = todo[keep], hh[keep], i[keep], x[keep]
        hh = _next(hh)
        y = ZIG_F[i] + _unif(hh) * (ZIG_F[i + 1] - ZIG_F[i])
        acc = y < np.exp(-0.5 * x * x)
        out[todo[acc]] = x[acc]
        todo, hh = todo[~acc], hh[~acc]
        h[todo] = _next(hh)
    return out


def _discrete(key, heaps, values, cdf):
    u = _unif(_start(key, heaps))
    return values[np.searchsorted(cdf[:-1], u, side="right")]


def node_weights(kind, sigma, values, cdf, key, heaps):
    heaps = np.asarray(heaps, dtype=np.uint64)
    if kind == 0:
        return np.exp(sigma * _normals(key, heaps) - 0.5 * sigma * sigma)
    return _discrete(key, heaps, values, cdf)


def _levels(kind, sigma, values, cdf, b, depth, key0, key1, prefix_depth, use_log):
    """Yield the level-m products (log or linear) for m = 1..depth."""
    half = 0.5 * sigma * sigma
    buf = np.zeros(1) if use_log else np.ones(1)
    for m in range(1, depth + 1):
        key = key0 if m <= prefix_depth else key1
        heaps = np.arange(b ** m, 2 * b ** m, dtype=np.uint64)
        parent = np.repeat(buf, b)
        if kind == 0:
            buf = parent + (sigma * _normals(key, heaps) - half)
        else:
            w = _discrete(key, heaps, values, cdf)
            if use_log:
                with np.errstate(divide="ignore"):
                    buf = parent + np.log(w)
            else:
                buf = parent * w
        yield buf


def fill_batch(kind, sigma, values, cdf, b, depth, keys0, keys1, prefix_depth, log_out, out):
    use_log = log_out or kind == 0
    for r in range(keys0.shape[0]):
        buf = np.zeros(1) if use_log else np.ones(1)
        for buf in _levels(kind, sigma, values, cdf, b, depth, keys0[r], keys1[r],
                           prefix_depth, use_log):
            pass
        out[r] = buf


def phase_sums(leaves, in_cos, in_sin, out_cos, out_sin):
    reps, n = leaves.shape
    nf, blk = in_cos.shape
    re = np.empty((reps, nf))
    im = np.empty((reps, nf))
    tot = leaves.sum(axis=1)
    sq = np.einsum("rk,rk->r", leaves, leaves)
    for r in range(reps):
        blocks = leaves[r].reshape(-1, blk)
        ac = blocks @ in_cos.T
        asn = blocks @ in_sin.T
        re[r] = np.sum(out_cos.T * ac - out_sin.T * asn, axis=0)
        im[r] = -np.sum(out_cos.T * asn + out_sin.T * ac, axis=0)
    return re, im, tot, sq


def level_power_sums(kind, sigma, values, cdf, b, depth, keys, powers):
    reps = keys.shape[0]
    out = np.zeros((reps, depth + 1, powers.shape[0]))
    use_log = kind == 0
    for r in range(reps):
        out[r, 0, :] = 1.0
        for m, buf in enumerate(_levels(kind, sigma, values, cdf, b, depth, keys[r], keys[r],
                                        depth, use_log), start=1):
            for j, p in enumerate(powers):
                if use_log:
                    out[r, m, j] = np.sum(np.exp(p * buf))
                else:
                    pos = buf[buf > 0]
                    out[r, m, j] = np.sum(pos * pos) if p == 2.0 else np.sum(np.exp(p * np.log(pos)))
    return out
