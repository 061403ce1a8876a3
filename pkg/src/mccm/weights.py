"""Random weight laws and their exact functionals.

A weight ``W`` is a non-negative random variable with ``E[W] = 1``.  Three
families are supported: log-normal ``W = exp(sigma*N - sigma^2/2)``, the
two-point law ``P(W = 1/x) = x, P(W = 0) = 1 - x`` and finite discrete laws.

All logarithms are natural.  Conventions: ``0**t = 0`` for ``t > 0``,
``0**0 = 1`` and ``0*log(0) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConstantWeight, MeanNotOne, ModelError, NegativeAtom, ZeroMoment

MEAN_TOL = 1e-12

KIND_LOGNORMAL = 0
KIND_DISCRETE = 1


class WeightModel:
    """Common interface of the weight families."""

    def moment(self, t: float) -> float:
        raise NotImplementedError

    def moment_log(self, t: float) -> float:
        """Return ``E[W^t log W]``."""
        raise NotImplementedError

    def log_moment(self, t: float) -> float:
        """``log E[W^t]``, stable for large ``t``."""
        at = self.atoms()
        vals, probs = at
        if t == 0:
            return math.log(float(np.sum(probs)))
        pos = vals > 0
        if not pos.any():
            return -math.inf
        terms = np.log(probs[pos]) + t * np.log(vals[pos])
        top = terms.max()
        return float(top + math.log(np.sum(np.exp(terms - top))))

    def log_moment_deriv(self, t: float) -> float:
        """``E[W^t log W] / E[W^t]``, the derivative of ``log_moment``."""
        vals, probs = self.atoms()
        pos = vals > 0
        lv = np.log(vals[pos])
        terms = np.log(probs[pos]) + t * lv
        w = np.exp(terms - terms.max())
        return float(np.dot(w, lv) / w.sum())

    def atoms(self):
        """Return ``(values, probs)`` for finitely supported laws, else None."""
        return None

    @property
    def bounded(self) -> bool:
        return self.atoms() is not None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LogNormal(WeightModel):
    sigma: float

    def moment(self, t):
        s2 = self.sigma * self.sigma
        return math.exp(0.5 * s2 * t * (t - 1.0))

    def moment_log(self, t):
        s2 = self.sigma * self.sigma
        return self.moment(t) * s2 * (2.0 * t - 1.0) / 2.0

    def log_moment(self, t):
        return 0.5 * self.sigma * self.sigma * t * (t - 1.0)

    def log_moment_deriv(self, t):
        return 0.5 * self.sigma * self.sigma * (2.0 * t - 1.0)

    def to_dict(self):
        return {"kind": "lognormal", "sigma": self.sigma}


@dataclass(frozen=True)
class TwoPoint(WeightModel):
    x: float

    def atoms(self):
        x = self.x
        if x == 1.0:
            return np.array([1.0]), np.array([1.0])
        return np.array([1.0 / x, 0.0]), np.array([x, 1.0 - x])

    def moment(self, t):
        if t == 0:
            return 1.0
        return self.x ** (1.0 - t)

    def moment_log(self, t):
        return self.x ** (1.0 - t) * math.log(1.0 / self.x)

    def to_dict(self):
        return {"kind": "twopoint", "x": self.x}


@dataclass(frozen=True)
class Discrete(WeightModel):
    values: tuple
    probs: tuple

    def __init__(self, atoms: Sequence[Sequence[float]]):
        vals = tuple(float(a[0]) for a in atoms)
        probs = tuple(float(a[1]) for a in atoms)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", probs)

    def atoms(self):
        return np.array(self.values), np.array(self.probs)

    def moment(self, t):
        if t == 0:
            return float(sum(self.probs))
        return float(sum(p * v ** t for v, p in zip(self.values, self.probs) if v > 0))

    def moment_log(self, t):
        return float(sum(p * v ** t * math.log(v)
                         for v, p in zip(self.values, self.probs) if v > 0))

    @property
    def lattice(self) -> bool:
        return is_lattice(self)

    def to_dict(self):
        return {"kind": "discrete", "atoms": [[v, p] for v, p in zip(self.values, self.probs)]}


@dataclass(frozen=True)
class ModelSpec:
    weight: WeightModel
    b: int

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 2:
            raise ModelError(f"b must be an integer >= 2, got {self.b}")
        object.__setattr__(self, "b", int(self.b))

    @property
    def log_b(self) -> float:
        return math.log(self.b)

    def to_dict(self) -> dict:
        return {"model": self.weight.to_dict(), "b": self.b}


def validate(model: WeightModel) -> WeightModel:
    """Return ``model`` unchanged if it is an admissible weight, else raise."""
    if isinstance(model, LogNormal):
        if not (model.sigma > 0 and math.isfinite(model.sigma)):
            raise ConstantWeight(f"sigma must be positive, got {model.sigma}")
        return model
    if isinstance(model, TwoPoint):
        if not (0.0 < model.x <= 1.0):
            raise ModelError(f"x must lie in (0, 1], got {model.x}")
        if model.x == 1.0:
            raise ConstantWeight("TwoPoint(1) is the constant weight 1")
        return model
    if isinstance(model, Discrete):
        if len(model.values) == 0:
            raise ModelError("empty atom list")
        for v, p in zip(model.values, model.probs):
            if v < 0 or not math.isfinite(v):
                raise NegativeAtom(f"atom value {v} is not a finite non-negative number")
            if not (p > 0 and math.isfinite(p)):
                raise ModelError(f"atom probability {p} must be positive")
        if abs(math.fsum(model.probs) - 1.0) > MEAN_TOL:
            raise ModelError(f"probabilities sum to {math.fsum(model.probs)!r}")
        if len(set(model.values)) < 2:
            raise ConstantWeight("a discrete weight needs two distinct values")
        mean = math.fsum(v * p for v, p in zip(model.values, model.probs))
        if abs(mean - 1.0) > MEAN_TOL:
            raise MeanNotOne(f"E[W] = {mean!r}")
        return model
    raise ModelError(f"unknown weight model {model!r}")


def moment(model: WeightModel, t: float) -> float:
    """``E[W^t]`` in closed form."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return model.moment(t)


def mean_w_log_w(model: WeightModel) -> float:
    """``E[W log W]``."""
    return model.moment_log(1.0)


def structure_fn(spec: ModelSpec, t: float) -> tuple[float, float]:
    """Return ``(phi(t), phi'(t))`` with ``phi(t) = log E[W^t] - (t-1) log b``."""
    if t <= 0:
        raise ValueError("t must be positive")
    lm = spec.weight.log_moment(t)
    if lm == -math.inf:
        raise ZeroMoment(f"E[W^{t}] = 0")
    lb = spec.log_b
    return lm - (t - 1.0) * lb, spec.weight.log_moment_deriv(t) - lb


def check_conditions(spec: ModelSpec, p: float) -> dict:
    """Non-degeneracy ``E[W log W] < log b`` and L^p-boundedness ``E[W^p] < b^(p-1)``."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    lb = spec.log_b
    return {
        "nondegenerate": mean_w_log_w(spec.weight) < lb,
        "lp_bounded": spec.weight.log_moment(p) < (p - 1.0) * lb,
    }


def squared_entropy(model: WeightModel) -> float:
    """``E[W2 log W2]`` for the squared weight ``W2 = W^2 / E[W^2]``."""
    m2 = model.moment(2.0)
    return (2.0 * model.moment_log(2.0) - m2 * math.log(m2)) / m2


def centered_second_moment(model: WeightModel) -> float:
    """``E[(W - 1)^2] = E[W^2] - 1``."""
    return model.moment(2.0) - 1.0


def merged_atoms(model: WeightModel):
    """Atoms with equal values merged, sorted by value; None for continuous laws."""
    at = model.atoms()
    if at is None:
        return None
    acc: dict[float, float] = {}
    for v, p in zip(*at):
        acc[float(v)] = acc.get(float(v), 0.0) + float(p)
    vals = sorted(acc)
    return np.array(vals), np.array([acc[v] for v in vals])


def is_lattice(model: WeightModel, max_den: int = 1000, tol: float = 1e-9) -> bool:
    """Whether ``log W`` (on ``W > 0``) is supported on an arithmetic progression."""
    at = merged_atoms(model)
    if at is None:
        return False
    logs = [math.log(v) for v in at[0] if v > 0]
    if len(logs) <= 2:
        return True
    diffs = [l - logs[0] for l in logs[1:]]
    d0 = diffs[0]
    for d in diffs[1:]:
        r = d / d0
        fr = Fraction(r).limit_denominator(max_den)
        if abs(float(fr) - r) > tol * max(1.0, abs(r)):
            return False
    return True


def kernel_params(model: WeightModel):
    """Encode a model for the sampling kernels as ``(kind, sigma, values, cdf)``."""
    if isinstance(model, LogNormal):
        return KIND_LOGNORMAL, float(model.sigma), np.zeros(1), np.ones(1)
    values, probs = model.atoms()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return KIND_DISCRETE, 0.0, np.ascontiguousarray(values, dtype=np.float64), cdf


def heap_index(digits: Sequence[int], b: int) -> int:
    """Encode the word ``d_1..d_m`` as ``b^m + sum_j d_j b^(m-j)``."""
    h = 1
    for d in digits:
        if not 0 <= d < b:
            raise ValueError(f"digit {d} outside 0..{b - 1}")
        h = h * b + d
    return h


def sample(model: WeightModel, node_id, seed: int, b: int | None = None, salt: int = 0) -> float:
    """Weight attached to a tree node.

    ``node_id`` is a heap index, or a digit sequence when ``b`` is given.
    The value is a pure function of ``(model, node_id, seed, salt)``.
    """
    from . import kernels

    if not isinstance(node_id, (int, np.integer)):
        if b is None:
            raise ValueError("b is required to encode a digit path")
        node_id = heap_index(node_id, b)
    key = kernels.stream_key(seed, salt)
    kind, sigma, values, cdf = kernel_params(model)
    out = kernels.node_weights(kind, sigma, values, cdf, key, np.array([node_id], dtype=np.uint64))
    return float(out[0])


def model_from_dict(d: dict) -> WeightModel:
    """Parse ``{"kind": ..., ...}`` descriptors."""
    kind = str(d.get("kind", "")).lower()
    if kind == "lognormal":
        if "sigma" in d:
            return LogNormal(float(d["sigma"]))
        raise ModelError("lognormal model needs 'sigma'")
    if kind == "twopoint":
        if "x" not in d:
            raise ModelError("twopoint model needs 'x'")
        return TwoPoint(float(d["x"]))
    if kind == "discrete":
        if "atoms" not in d:
            raise ModelError("discrete model needs 'atoms'")
        return Discrete([(float(v), float(p)) for v, p in d["atoms"]])
    raise ModelError(f"unknown model kind {d.get('kind')!r}")
