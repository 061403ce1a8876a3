"""Replicated cascade statistics without materialising every field.

Unconditional replicate ``r`` is the field ``sample_field(spec, depth, replicate_seed(seed, r))``.
Conditional replicate ``r`` shares the level-``n`` prefix of ``seed`` and draws
the deeper levels from the stream salted by ``r + 1``, i.e. it equals
``sample_field(spec, depth, seed, tail_salt=r + 1, prefix_depth=n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .spectrum import kernel
from .weights import ModelSpec, kernel_params, validate

_REP_SALT = 1 << 40  # above every tail salt r + 1


def replicate_seed(seed: int, r: int) -> int:
    """Seed of replicate ``r``; distinct master seeds give disjoint replicate sets."""
    return kernels.stream_key(seed, _REP_SALT + int(r))


def replicate_seeds(seed: int, reps: int) -> list[int]:
    return [replicate_seed(seed, r) for r in range(int(reps))]


def _keys(seed: int, reps: int, prefix_depth: int | None):
    if prefix_depth is None:
        k = kernels.stream_keys(replicate_seeds(seed, reps))
        return k, k
    k0 = np.full(reps, kernels.stream_key(seed, 0), dtype=np.uint64)
    k1 = kernels.stream_keys([seed] * reps, [r + 1 for r in range(reps)])
    return k0, k1


@dataclass(frozen=True)
class CoefficientSamples:
    freqs: np.ndarray
    coeffs: np.ndarray  # (reps, len(freqs))
    totals: np.ndarray  # total mass per replicate
    sq_sums: np.ndarray  # sum of squared leaf masses per replicate


def coefficient_samples(spec: ModelSpec, depth: int, freqs, reps: int, seed: int,
                        prefix_depth: int | None = None) -> CoefficientSamples:
    """``mu_depth^(s)`` for every ``s`` in ``freqs`` over ``reps`` replicates."""
    validate(spec.weight)
    b = spec.b
    freqs = np.asarray(freqs, dtype=np.int64)
    k0, k1 = _keys(seed, reps, prefix_depth)
    pd = depth if prefix_depth is None else int(prefix_depth)
    S, tot, sq = kernels.mc_phase_sums(kernel_params(spec.weight), b, depth, k0, k1, pd, freqs)
    scale = float(b) ** (-depth)
    coeffs = S * (kernel(freqs, b ** depth) * scale)[None, :]
    return CoefficientSamples(freqs, coeffs, tot * scale, sq * scale * scale)


def level_sums(spec: ModelSpec, depth: int, powers, reps: int, seed: int) -> np.ndarray:
    """``out[r, m, j] = sum_{|u| = m} (prod_i W(u|_i))**powers[j]`` for replicate ``r``."""
    validate(spec.weight)
    keys = kernels.stream_keys(replicate_seeds(seed, reps))
    return kernels.level_power_sums(kernel_params(spec.weight), spec.b, depth, keys,
                                    np.atleast_1d(np.asarray(powers, dtype=float)))


def prefix_squared_mass(spec: ModelSpec, n: int, seed: int) -> float:
    """``M_n(W2)`` of the shared prefix used by conditional replicates."""
    key = np.array([kernels.stream_key(seed, 0)], dtype=np.uint64)
    s2 = kernels.level_power_sums(kernel_params(spec.weight), spec.b, n, key,
                                  np.array([2.0]))[0, n, 0]
    return float(s2 * math.exp(-n * (spec.log_b + spec.weight.log_moment(2.0))))


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
