"""Cascade realisations on the b-adic tree.

A field of depth ``n`` stores the masses ``mu_n(I_u)`` of the ``b^n`` level-n
b-adic intervals, left to right.  Node weights come from the counter-based
streams of :mod:`mccm.kernels`, keyed by ``(seed, heap index)``, so a deeper
field with the same seed reuses every ancestor weight.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .errors import DepthTooLarge, ModelError, NotBoundary
from .regimes import BoundaryTransform
from .weights import ModelSpec, kernel_params, validate

MAX_LEAVES = 1 << 25
FIELD_MAGIC = b"MCCF"
HEADER = struct.Struct("<4sIIQ16s")
_MASK64 = (1 << 64) - 1


class BaseMeasure:
    """Finitely additive measure on the b-adic intervals of ``[0, 1]``."""

    tag = "base"

    def __init__(self, b: int):
        self.b = int(b)

    def level_masses(self, m: int) -> np.ndarray:
        raise NotImplementedError

    def cylinder_mass(self, m: int, index: int) -> float:
        return float(self.level_masses(m)[index])


class Lebesgue(BaseMeasure):
    tag = "lebesgue"

    def level_masses(self, m):
        return np.full(self.b ** m, float(self.b) ** (-m))


class BadicProduct(BaseMeasure):
    """Self-similar measure giving digit ``d`` the factor ``probs[d]`` at every level."""

    tag = "product"

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        super().__init__(len(probs))
        if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-12:
            raise ModelError("digit probabilities must be non-negative and sum to 1")
        self.probs = probs

    def level_masses(self, m):
        out = np.ones(1)
        for _ in range(m):
            out = np.outer(out, self.probs).ravel()
        return out

    def lp_dim(self, p: float) -> float:
        """Exact L^p dimension ``log(sum p_d^p) / ((1 - p) log b)``."""
        pos = self.probs[self.probs > 0]
        return math.log(np.sum(pos ** p)) / ((1.0 - p) * math.log(self.b))


class Mixture(BaseMeasure):
    tag = "mixture"

    def __init__(self, parts, coefs):
        super().__init__(parts[0].b)
        self.parts = list(parts)
        self.coefs = [float(c) for c in coefs]

    def level_masses(self, m):
        return sum(c * p.level_masses(m) for c, p in zip(self.coefs, self.parts))


@dataclass(frozen=True)
class CascadeField:
    spec: ModelSpec
    depth: int
    seed: int
    masses: np.ndarray = dc_field(repr=False)
    base: BaseMeasure | None = None
    tail_salt: int = 0
    prefix_depth: int | None = None

    @property
    def b(self) -> int:
        return self.spec.b

    def base_masses(self) -> np.ndarray:
        base = self.base if self.base is not None else Lebesgue(self.b)
        return base.level_masses(self.depth)

    def level(self, m: int) -> np.ndarray:
        """Masses of the level-m intervals (block sums), ``m <= depth``."""
        if not 0 <= m <= self.depth:
            raise ValueError(f"level {m} outside 0..{self.depth}")
        return self.masses.reshape(self.b ** m, -1).sum(axis=1)


class _UnitWeight:
    """Test hook: every node weight equals 1 (validation bypass)."""


UNIT = _UnitWeight()


def _check_depth(b: int, depth: int, cap: int) -> None:
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if b ** depth > cap:
        raise DepthTooLarge(f"b^depth = {b}^{depth} exceeds the cap of {cap} leaves")


def log_space_threshold(b: int) -> float:
    return 40.0 / math.log2(b)


def leaf_log_products(spec: ModelSpec, depth: int, seed: int, tail_salt: int = 0,
                      prefix_depth: int | None = None) -> np.ndarray:
    """``log prod_j W(u|_j)`` for every leaf, ``-inf`` where a weight is 0."""
    k0 = kernels.stream_key(seed, 0)
    k1 = kernels.stream_key(seed, tail_salt) if tail_salt else k0
    pd = depth if prefix_depth is None else prefix_depth
    return kernels.leaf_products(kernel_params(spec.weight), spec.b, depth, k0, k1, pd,
                                 log_space=True)


def sample_field(spec: ModelSpec, depth: int, seed: int, base: BaseMeasure | None = None, *,
                 tail_salt: int = 0, prefix_depth: int | None = None, cap: int = MAX_LEAVES,
                 weight=None) -> CascadeField:
    """Realise ``mu_n`` (or ``Q_n nu`` for a base measure ``nu``).

    Levels deeper than ``prefix_depth`` draw from the stream salted by
    ``tail_salt``; this resamples the tail while keeping the prefix fixed.
    ``weight=UNIT`` replaces every weight by 1.
    """
    b = spec.b
    _check_depth(b, depth, cap)
    if base is not None and base.b != b:
        raise ModelError("base measure and spec use different b")
    if weight is not UNIT:
        validate(spec.weight)
    seed = int(seed) & _MASK64
    if weight is UNIT:
        prods = np.ones(b ** depth)
        logp = None
    else:
        k0 = kernels.stream_key(seed, 0)
        k1 = kernels.stream_key(seed, tail_salt) if tail_salt else k0
        pd = depth if prefix_depth is None else prefix_depth
        use_log = depth > log_space_threshold(b)
        out = kernels.leaf_products(kernel_params(spec.weight), b, depth, k0, k1, pd,
                                    log_space=use_log)
        prods, logp = (None, out) if use_log else (out, None)
    if base is None:
        if logp is not None:
            masses = np.exp(logp - depth * math.log(b))
        else:
            masses = prods * float(b) ** (-depth)
    else:
        bm = base.level_masses(depth)
        masses = np.exp(logp) * bm if logp is not None else prods * bm
    return CascadeField(spec, depth, seed, masses, base, tail_salt, prefix_depth)


def refine(field: CascadeField, extra: int, cap: int = MAX_LEAVES) -> CascadeField:
    """The same realisation ``omega`` observed ``extra`` levels deeper.

    Every ancestor weight is reused, so for each level-n word ``u``
    ``refined[u v] = field[u] * b^-extra * prod_i W(u v|_{n+i})``.
    """
    if extra < 0:
        raise ValueError("extra must be non-negative")
    if extra == 0:
        return field
    return sample_field(field.spec, field.depth + extra, field.seed, field.base,
                        tail_salt=field.tail_salt, prefix_depth=field.prefix_depth, cap=cap)


def total_mass(field: CascadeField) -> float:
    return float(np.sum(field.masses))


def squared_mass(field: CascadeField) -> float:
    """``M_n(W2) = b^{-n} sum_u prod_j W(u|_j)^2 / E[W^2]^n`` from the same draws."""
    if field.base is not None:
        raise ModelError("squared_mass needs the Lebesgue base")
    b, n = field.b, field.depth
    m2 = field.spec.weight.moment(2.0)
    # b^n sum masses^2 / m2^n, arranged to avoid overflow of b^n and m2^n separately
    return float(np.sum(field.masses ** 2) * math.exp(n * (math.log(b) - math.log(m2))))


def _require(tr) -> BoundaryTransform:
    if tr is None:
        raise NotBoundary("weight admits no boundary-case transform")
    return tr


def brw_values(field: CascadeField, tr: BoundaryTransform) -> np.ndarray:
    """``V(u) = -t* log prod_j W(u|_j) + n log E[b W^{t*}]``; ``+inf`` on zero-weight leaves."""
    tr = _require(tr)
    logp = leaf_log_products(field.spec, field.depth, field.seed, field.tail_salt,
                             field.prefix_depth)
    with np.errstate(invalid="ignore"):
        v = -tr.t_star * logp + field.depth * tr.log_norm
    v[np.isneginf(logp)] = np.inf
    return v


def derivative_martingale(field: CascadeField, tr: BoundaryTransform) -> float:
    """``D_n = sum_u V(u) e^{-V(u)}``, with ``(+inf) e^{-inf} = 0``."""
    v = brw_values(field, tr)
    fin = np.isfinite(v)
    return float(np.sum(v[fin] * np.exp(-v[fin])))


def partition_function(field: CascadeField, tr: BoundaryTransform, gamma: float) -> float:
    """``Z_{n,gamma} = sum_u e^{-gamma V(u)}``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    v = brw_values(field, tr)
    return float(np.sum(np.exp(-gamma * v[np.isfinite(v)])))


def write_field(path, field: CascadeField) -> None:
    tag = (field.base.tag if field.base is not None else "lebesgue").encode()[:16]
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(FIELD_MAGIC, field.b, field.depth, field.seed & _MASK64,
                             tag.ljust(16, b"\0")))
        fh.write(np.ascontiguousarray(field.masses, dtype="<f8").tobytes())


def read_field_dump(path):
    """Return ``(b, depth, seed, base_tag, masses)`` from a binary dump."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, b, depth, seed, tag = HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise ValueError(f"{path}: not a field dump")
    masses = np.frombuffer(raw, dtype="<f8", offset=HEADER.size)
    if masses.size != b ** depth:
        raise ValueError(f"{path}: expected {b ** depth} masses, found {masses.size}")
    return b, depth, seed, tag.rstrip(b"\0").decode(), masses.copy()


def write_field_csv(path, field: CascadeField) -> None:
    with open(path, "w") as fh:
        fh.write(f"# b={field.b} depth={field.depth} seed={field.seed}\n")
        fh.write("index,mass\n")
        for k, m in enumerate(field.masses):
            fh.write(f"{k},{m:.17g}\n")
