"""Closed-form dimensions, regime classification and second-moment series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ._numerics import golden_section, grid_golden
from .errors import AssumptionViolated, ConvergenceFailure, DegenerateModel, NotBoundary, SeriesDiverges
from .weights import ModelSpec, is_lattice, mean_w_log_w, merged_atoms, squared_entropy, structure_fn

CRITICAL_TOL = 1e-9


class Regime(str, Enum):
    SUB = "SquaredSub"
    CRITICAL = "SquaredCritical"
    SUPER = "SquaredSuper"


@dataclass(frozen=True)
class BoundaryTransform:
    """``W = e^{-beta xi} / E[e^{-beta xi}]`` with ``E[e^{-xi}] = 1/b`` and ``E[xi e^{-xi}] = 0``."""

    beta: float
    t_star: float
    log_norm: float  # log E[b W^{t*}]
    spec: ModelSpec


@dataclass(frozen=True)
class DimensionReport:
    d_h: float
    d_f: float
    regime: Regime
    nondegenerate: bool
    salem: bool
    boundary: BoundaryTransform | None
    varrho: float | None
    varpi: float | None
    lattice: bool

    def to_record(self) -> dict:
        tr = self.boundary
        return {
            "d_h": self.d_h,
            "d_f": self.d_f,
            "regime": self.regime.value,
            "salem": self.salem,
            "beta": None if tr is None else tr.beta,
            "psi_beta": None if tr is None else psi(tr, tr.beta),
            "varrho": self.varrho,
            "varpi": self.varpi,
            "nondegenerate": self.nondegenerate,
            "lattice": self.lattice,
        }


def is_nondegenerate(spec: ModelSpec) -> bool:
    return mean_w_log_w(spec.weight) < spec.log_b


def _require_nondegenerate(spec: ModelSpec) -> None:
    if not is_nondegenerate(spec):
        raise DegenerateModel(
            f"E[W log W] = {mean_w_log_w(spec.weight):.6g} >= log b = {spec.log_b:.6g}")


def classify_squared_regime(spec: ModelSpec) -> Regime:
    """Compare ``E[W2 log W2]`` (``W2 = W^2/E[W^2]``) with ``log b``."""
    d = squared_entropy(spec.weight) - spec.log_b
    if abs(d) < CRITICAL_TOL:
        return Regime.CRITICAL
    return Regime.SUB if d < 0 else Regime.SUPER


def _inf_objective(spec: ModelSpec):
    lb = spec.log_b
    lm = spec.weight.log_moment
    return lambda t: ((1.0 - t) * lb + lm(2.0 * t)) / (t * lb)


def fourier_dimension(spec: ModelSpec, branch: str | None = None) -> float:
    """Fourier dimension of the limit measure.

    ``branch`` forces ``"moment"`` (``1 - log_b E[W^2]``) or ``"infimum"``
    (``1 - inf_{1/2 <= t <= 1} log E[b^{1-t} W^{2t}] / (t log b)``); by
    default the branch follows the squared regime.
    """
    _require_nondegenerate(spec)
    if branch is None:
        branch = "infimum" if classify_squared_regime(spec) is Regime.SUPER else "moment"
    if branch == "moment":
        return 1.0 - spec.weight.log_moment(2.0) / spec.log_b
    if branch == "infimum":
        _, fmin = grid_golden(_inf_objective(spec), 0.5, 1.0, n=64, tol=1e-12)
        return 1.0 - float(fmin)
    raise ValueError(f"unknown branch {branch!r}")


def hausdorff_dimension(spec: ModelSpec) -> float:
    _require_nondegenerate(spec)
    return 1.0 - mean_w_log_w(spec.weight) / spec.log_b


def _g(spec: ModelSpec, t: float) -> float:
    phi, dphi = structure_fn(spec, t)
    return t * dphi - phi


def biggins_kyprianou(spec: ModelSpec, bracket: tuple[float, float] | None = None):
    """Boundary-case transform, or ``None`` when the weight is not in the boundary case.

    ``None`` is returned exactly when ``W`` is bounded and ``b P(W = max W) >= 1``.
    """
    at = merged_atoms(spec.weight)
    if at is not None:
        vals, probs = at
        if spec.b * probs[-1] >= 1.0:
            return None
    g = lambda t: _g(spec, t)
    if bracket is not None:
        lo, hi = bracket
    elif is_nondegenerate(spec):
        lo, hi = 1.0 + 1e-6, 4.0
    else:
        lo, hi = 1e-6, 1.0
    if g(lo) > 0:
        raise ConvergenceFailure(f"g({lo}) > 0: bracket does not start left of the root")
    for _ in range(61):
        if g(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceFailure("bracket expansion exhausted")
    t_star = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=1000)
    return BoundaryTransform(beta=1.0 / t_star, t_star=t_star,
                             log_norm=spec.log_b + spec.weight.log_moment(t_star), spec=spec)


def require_boundary(spec_or_tr) -> BoundaryTransform:
    if isinstance(spec_or_tr, BoundaryTransform):
        return spec_or_tr
    tr = biggins_kyprianou(spec_or_tr)
    if tr is None:
        raise NotBoundary("weight is bounded with b P(W = max) >= 1")
    return tr


def psi(tr: BoundaryTransform, t: float) -> float:
    """``psi(t) = log E[b e^{-t xi}] = log b + log E[W^{t t*}] - t log E[b W^{t*}]``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    spec = tr.spec
    return spec.log_b + spec.weight.log_moment(t * tr.t_star) - t * tr.log_norm


def is_salem(spec: ModelSpec) -> bool:
    """True iff ``W`` has a two-point law (one positive atom, possibly an atom at 0)."""
    _require_nondegenerate(spec)
    at = merged_atoms(spec.weight)
    if at is None:
        return False
    return int(np.count_nonzero(at[0] > 0)) == 1


def _sinc2(b: int, s: int, m: int) -> float:
    """``|(e^{i 2 pi s b^-m} - 1) / (2 pi s b^-m)|^2`` with exact zeros at ``b^m | s``."""
    bm = b ** m
    r = s % bm
    if r == 0:
        return 0.0
    x = math.pi * s / bm
    return (math.sin(math.pi * r / bm) / x) ** 2


def second_moment_series(spec: ModelSpec, s: int, depth: int | None = None,
                         tol: float = 1e-15) -> float:
    """``E|mu_depth^(s)|^2`` as the exact finite sum, or the series for ``depth=None``.

    ``(E[W0^2]/b) sum_{m=1}^{depth} r^{m-1} |(e^{i 2 pi s b^-m} - 1)/(2 pi s b^-m)|^2``
    with ``r = E[W^2]/b`` and ``W0 = W - 1``.
    """
    s = int(s)
    if s < 1:
        raise ValueError("s must be a positive integer")
    b = spec.b
    m2 = spec.weight.moment(2.0)
    c = (m2 - 1.0) / b
    r = m2 / b
    if depth is not None:
        return c * math.fsum(r ** (m - 1) * _sinc2(b, s, m) for m in range(1, int(depth) + 1))
    if r >= 1.0:
        raise SeriesDiverges(f"E[W^2]/b = {r:.6g} >= 1")
    terms = []
    total = 0.0
    m = 1
    while True:
        terms.append(c * r ** (m - 1) * _sinc2(b, s, m))
        total += terms[-1]
        tail = c * r ** m / (1.0 - r)
        if total > 0 and tail < tol * total:
            break
        m += 1
        if m > 100000:
            raise ConvergenceFailure("second-moment series did not reach tolerance")
    return math.fsum(terms)


def pseudo_moment_series(spec: ModelSpec, s: int, depth: int) -> complex:
    """``E[mu_depth^(s)^2]`` (no conjugate), exact at finite depth.

    Level ``m`` contributes ``E[W^2]^{m-1} E[W0^2] sum_k J_k^2`` with
    ``J_k = e^{-2 pi i s k b^-m} (1 - e^{-2 pi i s b^-m}) / (2 pi i s)``; the
    sum over ``k`` vanishes unless ``b^m`` divides ``2s``.
    """
    b = spec.b
    m2 = spec.weight.moment(2.0)
    total = 0j
    for m in range(1, int(depth) + 1):
        bm = b ** m
        if (2 * s) % bm:
            continue
        phase = 2.0 * math.pi * (s % bm) / bm
        j = (1.0 - complex(math.cos(phase), -math.sin(phase))) / (2j * math.pi * s)
        total += m2 ** (m - 1) * (m2 - 1.0) * bm * j * j
    return total


def varrho_varpi(spec: ModelSpec, tol: float = 1e-15):
    """``(varrho, varpi)``: ``E|mu^(1)|^2`` and, for ``b = 2`` only, ``E[mu^(1)^2]``."""
    varrho = second_moment_series(spec, 1, None, tol)
    varpi = -2.0 * (spec.weight.moment(2.0) - 1.0) / math.pi ** 2 if spec.b == 2 else None
    return varrho, varpi


def eta_lower_bound(spec: ModelSpec, lp_dim: Callable[[float], float], kappa: float,
                    q_values=tuple(4 * 2 ** k for k in range(9)), n_p: int = 64) -> float:
    """Lower bound ``eta_W(nu)`` for a base measure with Fourier exponent ``kappa``.

    The supremum of ``alpha >= 0`` for which some ``1 < p < 2 <= q`` gives
    ``tau = p((kappa - alpha) q - 1)/(q kappa) > 1`` and
    ``log_b E[W^p] < (tau - 1) lp_dim(tau)``.  For fixed ``(p, q)`` the
    smallest admissible ``tau`` is located on a grid and bisected, which gives
    ``alpha`` in closed form; ``p`` is scanned and refined for each ``q``.
    """
    if kappa <= 0:
        return 0.0
    lb = spec.log_b
    if not mean_w_log_w(spec.weight) / lb < lp_dim(1.0 + 1e-9):
        raise AssumptionViolated("E[W log W]/log b must be below lim_{p->1+} lp_dim(p)")

    def tau_min(p):
        target = spec.weight.log_moment(p) / lb
        ok = lambda tau: target < (tau - 1.0) * lp_dim(tau)
        grid = np.linspace(1.0, p, 257)[1:]
        hits = [i for i, tau in enumerate(grid) if ok(tau)]
        if not hits:
            return None
        i = hits[0]
        hi = grid[i]
        lo = 1.0 if i == 0 else grid[i - 1]
        for _ in range(100):
            if hi - lo < 1e-15:
                break
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def alpha(p, q):
        t = tau_min(p)
        if t is None:
            return -math.inf
        return kappa - 1.0 / q - kappa * t / p

    best = 0.0
    p_hi = 2.0 - 1e-9
    for q in q_values:
        ps = np.linspace(1.0 + (p_hi - 1.0) / n_p, p_hi, n_p)
        vals = [alpha(p, q) for p in ps]
        i = int(np.argmax(vals))
        if not math.isfinite(vals[i]):
            continue
        lo, hi = ps[max(i - 1, 0)], ps[min(i + 1, n_p - 1)]
        _, negv = golden_section(lambda p: -alpha(p, q), lo, hi, tol=1e-10)
        best = max(best, vals[i], -negv)
    return best


def dimension_report(spec: ModelSpec) -> DimensionReport:
    _require_nondegenerate(spec)
    regime = classify_squared_regime(spec)
    try:
        varrho, varpi = varrho_varpi(spec)
    except SeriesDiverges:
        varrho, varpi = None, None
    return DimensionReport(
        d_h=hausdorff_dimension(spec),
        d_f=fourier_dimension(spec),
        regime=regime,
        nondegenerate=True,
        salem=is_salem(spec),
        boundary=biggins_kyprianou(spec),
        varrho=varrho,
        varpi=varpi,
        lattice=is_lattice(spec.weight),
    )
