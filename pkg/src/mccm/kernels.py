"""Backend selection for the hot loops.

``MCCM_BACKEND=numba`` (default when numba imports) uses the compiled kernels;
``MCCM_BACKEND=numpy`` forces the vectorised fallback.  Both consume the same
counter-based random streams, so fields agree across backends up to
floating-point rounding of the transcendental functions.
"""

from __future__ import annotations

import os

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SALT_MUL = 0xD1B54A32D192ED03
_SALT_ADD = 0x8CB92BA72F3D8DD7


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, salt: int = 0) -> int:
    """64-bit key of the weight stream identified by ``(seed, salt)``."""
    a = _mix_int((int(seed) & _MASK) + _GOLDEN)
    return _mix_int(a ^ ((int(salt) * _SALT_MUL + _SALT_ADD) & _MASK))


def stream_keys(seeds, salts=None) -> np.ndarray:
    if salts is None:
        salts = [0] * len(seeds)
    return np.array([stream_key(s, t) for s, t in zip(seeds, salts)], dtype=np.uint64)


def _select():
    want = os.environ.get("MCCM_BACKEND", "numba").strip().lower()
    if want not in ("numba", "numpy"):
        raise RuntimeError(f"MCCM_BACKEND must be 'numba' or 'numpy', got {want!r}")
    if want == "numba":
        # the portable layer; the choice never affects results
        os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
        try:
            from . import _kernels_numba as mod
            return "numba", mod
        except ImportError:
            pass
    from . import _kernels_numpy as mod
    return "numpy", mod


BACKEND, _impl = _select()


def node_weights(kind, sigma, values, cdf, key, heaps):
    return _impl.node_weights(kind, float(sigma), values, cdf, np.uint64(key),
                              np.ascontiguousarray(heaps, dtype=np.uint64))


def set_threads(n: int | None) -> None:
    """Set the worker count of the compiled backend; results never depend on it."""
    if n is None or BACKEND != "numba":
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def leaf_batch(params, b, depth, keys0, keys1=None, prefix_depth=None, log_space=False):
    """Leaf products for a batch of replicates, shape ``(reps, b**depth)``.

    Row ``r`` uses stream ``keys0[r]`` for levels ``<= prefix_depth`` and
    ``keys1[r]`` below.  With ``log_space`` the natural logs are returned
    (``-inf`` for zero products).
    """
    kind, sigma, values, cdf = params
    keys0 = np.atleast_1d(np.asarray(keys0, dtype=np.uint64))
    keys1 = keys0 if keys1 is None else np.atleast_1d(np.asarray(keys1, dtype=np.uint64))
    if prefix_depth is None:
        prefix_depth = depth
    out = np.empty((keys0.shape[0], b ** depth))
    _impl.fill_batch(kind, float(sigma), values, cdf, int(b), int(depth), keys0, keys1,
                     int(prefix_depth), bool(log_space), out)
    if kind == 0 and not log_space:
        np.exp(out, out=out)
    return out


def leaf_products(params, b, depth, key0, key1=None, prefix_depth=None, log_space=False):
    k1 = None if key1 is None else [key1]
    return leaf_batch(params, b, depth, [key0], k1, prefix_depth, log_space)[0]


def phase_tables(freqs, b, depth, max_block=1024):
    """Factored phase tables for ``e^{-2 pi i s k / b^depth}`` with ``k = q*B + j``.

    Angles are reduced exactly in integer arithmetic before scaling.
    """
    n = b ** depth
    blk = 1
    while blk * b <= min(max_block, n):
        blk *= b
    freqs = np.asarray(freqs, dtype=np.int64) % n
    j = np.arange(blk, dtype=np.int64)
    q = np.arange(n // blk, dtype=np.int64) * blk
    a_in = 2.0 * np.pi * (np.outer(freqs, j) % n) / n
    a_out = 2.0 * np.pi * (np.outer(freqs, q) % n) / n
    return np.cos(a_in), np.sin(a_in), np.cos(a_out), np.sin(a_out)


def phase_sums(leaves, b, depth, freqs):
    """``(S, tot, sq)`` with ``S[r, f] = sum_k P[r, k] e^{-2 pi i freqs[f] k / b^depth}``."""
    tabs = phase_tables(freqs, b, depth)
    re, im, tot, sq = _impl.phase_sums(np.ascontiguousarray(leaves), *tabs)
    return re + 1j * im, tot, sq


def batch_rows(b, depth, budget=1 << 23):
    """Replicates per batch so that one batch holds about ``budget`` doubles."""
    return max(1, budget // (b ** depth))


def mc_phase_sums(params, b, depth, keys0, keys1, prefix_depth, freqs):
    """Phase sums, totals and squared sums of leaf products over many replicates."""
    keys0 = np.asarray(keys0, dtype=np.uint64)
    keys1 = np.asarray(keys1, dtype=np.uint64)
    reps = keys0.shape[0]
    step = batch_rows(b, depth)
    S = np.empty((reps, len(freqs)), dtype=complex)
    tot = np.empty(reps)
    sq = np.empty(reps)
    for lo in range(0, reps, step):
        hi = min(reps, lo + step)
        leaves = leaf_batch(params, b, depth, keys0[lo:hi], keys1[lo:hi], prefix_depth)
        S[lo:hi], tot[lo:hi], sq[lo:hi] = phase_sums(leaves, b, depth, freqs)
    return S, tot, sq


def level_power_sums(params, b, depth, keys, powers):
    """``out[r, m, j] = sum_{|u| = m} (prod W(u))**powers[j]`` for replicate r."""
    kind, sigma, values, cdf = params
    return _impl.level_power_sums(kind, float(sigma), values, cdf, int(b), int(depth),
                                  np.ascontiguousarray(keys, dtype=np.uint64),
                                  np.ascontiguousarray(powers, dtype=np.float64))
