"""Estimators and Monte Carlo checks of the closed-form predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp, zeta
from scipy.stats import linregress

from . import montecarlo as mc
from .cascade import CascadeField, sample_field
from .errors import BadExponents, RegimeMismatch, SeriesDiverges, TooFewBlocks, ZeroField
from .regimes import (Regime, biggins_kyprianou, classify_squared_regime, fourier_dimension,
                      pseudo_moment_series, psi, second_moment_series)
from .spectrum import Spectrum, fourier_all
from .weights import ModelSpec

SURVIVAL_FLOOR = 1e-12
TAIL_FRACTION = 0.05
BORDER_TOL = 1e-12  # relative width of the critical-case equality


@dataclass(frozen=True)
class FitResult:
    estimate: float
    std_err: float
    n_points: int
    method: str


def _fit(x, y, method: str) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise TooFewBlocks(f"{x.size} points, need at least 3")
    res = linregress(x, y)
    return FitResult(float(res.slope), float(res.stderr), int(x.size), method)


# -- spectra -----------------------------------------------------------------

def decay_fit(spectra, block_base: int | None = None) -> FitResult:
    """Decay exponent ``D`` in ``|mu^(k)|^2 ~ k^-D`` from block maxima.

    ``|mu^(k)|^2`` is averaged over the surviving spectra, then
    ``y_l = log max_{B^{l-1} <= k < B^l}`` of that average is regressed on
    ``-l log B``.  Spectra with ``|mu^(0)| <= 1e-12`` (extinct realisations)
    are skipped and blocks below ``(1e-12 mean|mu^(0)|)^2`` are dropped.
    """
    spectra = list(spectra)
    if len(spectra) < 2:
        raise ValueError("decay_fit needs at least 2 spectra")
    depths = {s.depth for s in spectra}
    if len(depths) > 1:
        raise ValueError(f"spectra have mixed depths {sorted(depths)}")
    base = int(block_base or spectra[0].spec.b)
    if base < 2:
        raise ValueError("block_base must be >= 2")
    kmax = min(s.kmax for s in spectra)
    if kmax < base ** 4:
        raise TooFewBlocks(f"kmax={kmax} < block_base^4={base ** 4}")
    alive = [s for s in spectra if abs(s.coeffs[0]) > SURVIVAL_FLOOR]
    if len(alive) < 2:
        raise TooFewBlocks(f"only {len(alive)} surviving spectra")
    avg = np.mean([s.abs2[:kmax + 1] for s in alive], axis=0)
    floor = (1e-12 * np.mean([abs(s.coeffs[0]) for s in alive])) ** 2
    l_all, y = [], []
    l = 1
    while base ** l <= kmax + 1:
        top = avg[base ** (l - 1):base ** l].max()
        if top > floor:
            l_all.append(l)
            y.append(math.log(top))
        l += 1
    if len(y) < 3:
        raise TooFewBlocks(f"only {len(y)} blocks above the floor")
    return _fit(-np.asarray(l_all) * math.log(base), y, "block-max")


# -- single-field dimensions ---------------------------------------------------

def _normalized(field: CascadeField, level: int | None) -> tuple[np.ndarray, int]:
    m = field.depth if level is None else int(level)
    if m < 1:
        raise ValueError("level must be >= 1")
    masses = field.level(m)
    total = masses.sum()
    if not total > 0:
        raise ZeroField("field has zero total mass")
    return masses / total, m


def lp_dimension(field: CascadeField, p: float, level: int | None = None) -> float:
    """Plug-in ``-log(sum q_u^p) / (n (p - 1) log b)`` with normalised masses ``q_u``."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    q, n = _normalized(field, level)
    pos = q[q > 0]
    return -math.log(np.sum(pos ** p)) / (n * (p - 1.0) * math.log(field.b))


def entropy_dimension(field: CascadeField, level: int | None = None) -> float:
    """Normalised entropy ``sum -q_u log_b q_u / n``."""
    q, n = _normalized(field, level)
    pos = q[q > 0]
    return float(-np.sum(pos * np.log(pos)) / (n * math.log(field.b)))


def depth_trend(spec: ModelSpec, seed: int, depths, p: float | None = None) -> FitResult:
    """Slope of ``n * D_n`` over depths ``n`` of one realisation (entropy for ``p=None``).

    Every depth reuses the ancestor weights of ``seed``; the random
    normalising constant cancels in the slope.
    """
    depths = [int(d) for d in depths]
    vals = []
    for d in depths:
        f = sample_field(spec, d, seed)
        vals.append(d * (entropy_dimension(f) if p is None else lp_dimension(f, p)))
    return _fit(depths, vals, "entropy-trend" if p is None else f"lp{p:g}-trend")


def frostman_stat(field: CascadeField, gamma: float) -> float:
    """``max_{m <= depth} max_{|u| = m} mu(I_u) b^{m gamma}``."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    b = field.b
    cur = field.masses
    best = -math.inf
    for m in range(field.depth, -1, -1):
        best = max(best, float(cur.max()) * float(b) ** (m * gamma))
        if m:
            cur = cur.reshape(-1, b).sum(axis=1)
    return best


# -- fluctuations --------------------------------------------------------------

@dataclass(frozen=True)
class FluctuationReport:
    regime: Regime
    n: int
    depth: int
    reps: int
    mean: complex
    mean_se: float
    second_moment: float
    second_moment_se: float
    oracle_second_moment: float
    re_im_corr: float
    variance_ratio: float | None
    oracle_variance_ratio: float | None
    conditional_ratio_stats: tuple[float, float] | None  # (mean, sd)
    conditional_ratio_se: float | None
    conditional_re_im_corr: float | None
    tail_index: float | None
    n_dead: int

    def to_record(self) -> dict:
        rec = dict(self.__dict__)
        rec["regime"] = self.regime.value
        rec["mean"] = [self.mean.real, self.mean.imag]
        return rec


def _scale(spec: ModelSpec, regime: Regime, n: int, d_f: float) -> float:
    base = float(spec.b) ** (n * d_f / 2.0)
    if regime is Regime.CRITICAL:
        return base * n ** 0.25
    if regime is Regime.SUPER:
        return base * n ** (1.5 * biggins_kyprianou(spec).beta)
    return base


def tail_index(x, fraction: float = TAIL_FRACTION) -> FitResult:
    """Log-rank regression ``log(i - 1/2) ~ c - a log x_(i)`` over the top ``fraction``."""
    x = np.sort(np.asarray(x, dtype=float))[::-1]
    k = int(fraction * x.size)
    top = x[:k]
    if k < 3 or not (top > 0).all():
        raise TooFewBlocks(f"{k} usable order statistics")
    fit = _fit(np.log(top), np.log(np.arange(1, k + 1) - 0.5), "log-rank")
    a = -fit.estimate
    return FitResult(a, a * math.sqrt(2.0 / k), k, "log-rank")


def _corr(z: np.ndarray) -> float:
    return float(np.corrcoef(z.real, z.imag)[0, 1])


@dataclass(frozen=True)
class ConditionalCheck:
    mean: float
    sd: float
    se: float
    re_im_corr: float


def conditional_check(spec: ModelSpec, n: int, depth: int, reps: int, seed: int) -> ConditionalCheck:
    """``b^n E[|mu_N^(b^n)|^2 | F_n] / (E[W^2]^n varrho_{N-n} M_n(W2))`` over tail replicates.

    Conditionally on the level-n prefix, ``mu_N^(b^n)`` is a weighted sum of
    independent copies of ``mu_{N-n}^(1)``, so the ratio has mean exactly 1.
    """
    s = spec.b ** n
    cz = mc.coefficient_samples(spec, depth, [s], reps, seed, prefix_depth=n).coeffs[:, 0]
    lm2 = spec.weight.log_moment(2.0)
    denom = second_moment_series(spec, 1, depth - n) * mc.prefix_squared_mass(spec, n, seed)
    ratio = np.abs(cz) ** 2 * math.exp(n * (spec.log_b - lm2)) / denom
    sd = float(ratio.std(ddof=1))
    return ConditionalCheck(float(ratio.mean()), sd, sd / math.sqrt(reps), _corr(cz))


def fluctuation_suite(spec: ModelSpec, n: int, depth: int, reps: int, seed: int,
                      regime: Regime | None = None, conditional: bool = True) -> FluctuationReport:
    """Rescaled ``mu_N^(b^n)`` against the finite-depth identities.

    The unconditional second moment is compared with the depth-``N`` series
    and the conditional test resamples levels below ``n`` with the level-n
    prefix of ``seed`` held fixed.
    """
    if reps < 100:
        raise ValueError("fluctuation_suite needs reps >= 100")
    if not 1 <= n < depth:
        raise ValueError("need 1 <= n < depth")
    actual = classify_squared_regime(spec)
    if regime is not None and Regime(regime) is not actual:
        raise RegimeMismatch(f"spec is {actual.value}, not {Regime(regime).value}")
    b = spec.b
    s = b ** n
    d_f = fourier_dimension(spec)
    scale = _scale(spec, actual, n, d_f)

    cs = mc.coefficient_samples(spec, depth, [s], reps, seed)
    x = cs.coeffs[:, 0] * scale
    a2 = np.abs(x) ** 2
    alive = cs.totals > SURVIVAL_FLOOR
    mean = complex(x.mean())
    mean_se = float(math.sqrt((x.real.var(ddof=1) + x.imag.var(ddof=1)) / reps))
    m2, m2_se = mc.mean_and_se(a2)
    oracle = scale * scale * second_moment_series(spec, s, depth)

    var_ratio = oracle_ratio = None
    if b == 2:
        var_ratio = float(x.real.var(ddof=1) / x.imag.var(ddof=1))
        e2 = second_moment_series(spec, s, depth)
        pm = pseudo_moment_series(spec, s, depth).real
        oracle_ratio = (e2 + pm) / (e2 - pm)

    cond = cond_se = cond_corr = None
    if conditional:
        cc = conditional_check(spec, n, depth, reps, seed)
        cond, cond_se, cond_corr = (cc.mean, cc.sd), cc.se, cc.re_im_corr

    tail = None
    if actual is Regime.SUPER:
        tail = tail_index(np.abs(x[alive])).estimate

    return FluctuationReport(actual, n, depth, reps, mean, mean_se, m2, m2_se, oracle, _corr(x),
                             var_ratio, oracle_ratio, cond, cond_se, cond_corr, tail,
                             int((~alive).sum()))


# -- moment scaling --------------------------------------------------------------

def mc_moments(spec: ModelSpec, k_list, depth: int, reps: int, seed: int, q: float = 2.0):
    """Monte Carlo ``E|mu_depth^(k)|^q`` with standard errors."""
    cs = mc.coefficient_samples(spec, depth, k_list, reps, seed)
    v = np.abs(cs.coeffs) ** q
    return v.mean(axis=0), v.std(axis=0, ddof=1) / math.sqrt(reps)


def moment_scaling(spec: ModelSpec, q: float, k_list, depth: int | None = None, reps: int = 0,
                   seed: int = 0) -> FitResult:
    """Slope of ``log E|mu^(k)|^q`` against ``log k``.

    ``reps = 0`` with ``q = 2`` uses the exact series (depth ``None`` means the
    limit measure); otherwise the moments are Monte Carlo estimates.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    k = np.asarray(sorted(set(int(v) for v in k_list)), dtype=np.int64)
    if q == 2 and spec.weight.moment(2.0) >= spec.b:
        raise SeriesDiverges(f"E[W^2] = {spec.weight.moment(2.0):.6g} >= b")
    if reps == 0:
        if q != 2:
            raise ValueError("the series path exists only for q = 2")
        vals = np.array([second_moment_series(spec, int(s), depth) for s in k])
        return _fit(np.log(k), np.log(vals), "series")
    if depth is None:
        raise ValueError("Monte Carlo moments need a finite depth")
    vals, _ = mc_moments(spec, k, depth, reps, seed, q)
    return _fit(np.log(k), np.log(vals), "mc")


# -- norm criterion ------------------------------------------------------------------

class Verdict(str, Enum):
    FINITE = "Finite"
    DIVERGING = "Diverging"
    BORDERLINE = "Borderline"


def check_exponents(alpha: float, p: float, q: float) -> None:
    if not 0 <= alpha < 1:
        raise BadExponents(f"alpha={alpha} outside [0, 1)")
    if not (1 < p <= 2 <= q):
        raise BadExponents(f"need 1 < p <= 2 <= q, got p={p}, q={q}")
    if not q > 1.0 / (1.0 - alpha):
        raise BadExponents(f"need q > 1/(1 - alpha) = {1.0 / (1.0 - alpha):.6g}")


def norm_verdict(spec: ModelSpec, alpha: float, p: float, q: float) -> Verdict:
    """Finiteness of the ``(alpha, p, q)``-norm from the regime criteria (no sampling).

    Sub-critical: finite iff ``E[W^2] < b^{1 - 2 alpha - 2/q}``.  Critical:
    ``<`` finite, ``=`` (to ``1e-12`` relative) borderline, ``>`` diverging.  Super-critical: finite
    iff ``alpha + 1/q <= psi(beta)/log b``, for ``p < 1/beta``.
    """
    check_exponents(alpha, p, q)
    regime = classify_squared_regime(spec)
    lb = spec.log_b
    if regime is Regime.SUPER:
        tr = biggins_kyprianou(spec)
        if p >= 1.0 / tr.beta:
            return Verdict.DIVERGING
        return Verdict.FINITE if alpha + 1.0 / q <= psi(tr, tr.beta) / lb else Verdict.DIVERGING
    gap = spec.weight.log_moment(2.0) - (1.0 - 2.0 * alpha - 2.0 / q) * lb
    if regime is Regime.SUB:
        return Verdict.FINITE if gap < 0 else Verdict.DIVERGING
    if abs(gap) <= BORDER_TOL * lb:
        return Verdict.BORDERLINE
    return Verdict.FINITE if gap < 0 else Verdict.DIVERGING


@dataclass(frozen=True)
class NormReport:
    chi_hat: float
    norm_hat: float
    r_seq: np.ndarray
    verdict: Verdict


def _theta(b: int, depth: int, alpha: float, s: np.ndarray) -> np.ndarray:
    """``Theta(n, s) = s^{-2(1-alpha)} |e^{i 2 pi s b^-n} - 1|^2 / (4 pi^2)`` for n = 1..depth."""
    out = np.empty((depth, s.size))
    for n in range(1, depth + 1):
        bn = b ** n
        ang = np.pi * (s % bn) / bn
        out[n - 1] = (2.0 * np.sin(ang)) ** 2 * s ** (-2.0 * (1.0 - alpha)) / (4 * np.pi ** 2)
    return out


def chi_and_norm(spec: ModelSpec, alpha: float, p: float, q: float, depth: int, reps: int,
                 seed: int, s_max: int | None = None) -> NormReport:
    """Depth-``N`` Monte Carlo estimates of ``chi`` and of the partial norm, plus ``R_n``.

    ``chi`` is truncated to levels ``1..N`` and frequencies ``s <= s_max``
    (default ``4 b^N``); the partial norm uses ``s < b^N``.  ``R_n`` uses
    Monte Carlo moments of ``M_{n-1}(W2)`` except in the super-critical regime,
    where only the shape ``n^{-3 p beta/2} e^{-n p psi(2 beta)/2}`` is known.
    """
    verdict = norm_verdict(spec, alpha, p, q)
    b = spec.b
    lm2 = spec.weight.log_moment(2.0)
    lb = spec.log_b
    sums = mc.level_sums(spec, depth, [2.0], reps, seed)[:, :, 0]  # (reps, depth+1)

    # A_{n-1} = sum_{|u| = n} prod_{j < n} W(u|_j)^2 = b * S2_{n-1}
    a = b * sums[:, :depth]
    s = np.arange(1, (s_max or 4 * b ** depth) + 1, dtype=np.int64)
    inner = a @ _theta(b, depth, alpha, s)
    chi = float(np.mean(np.sum(inner ** (q / 2.0), axis=1) ** (p / q)))

    norms = np.empty(reps)
    n_cells = b ** depth
    weights = np.arange(1, n_cells, dtype=float) ** alpha
    for r, rs in enumerate(mc.replicate_seeds(seed, reps)):
        c = fourier_all(sample_field(spec, depth, rs), n_cells - 1).coeffs[1:]
        norms[r] = np.sum(np.abs(weights * c) ** q) ** (p / q)
    norm_hat = float(np.mean(norms) ** (1.0 / p))

    n = np.arange(1, depth + 1)
    growth = np.exp(n * p / 2.0 * (lm2 - (1.0 - 2.0 * alpha - 2.0 / q) * lb))
    if classify_squared_regime(spec) is Regime.SUPER:
        tr = biggins_kyprianou(spec)
        m = np.maximum(n - 1, 1)
        shape = m ** (-1.5 * p * tr.beta) * np.exp(-m * p * psi(tr, 2 * tr.beta) / 2.0)
        shape[n == 1] = 1.0
        r_seq = shape * growth
    else:
        m_prev = sums[:, :depth] * np.exp(-(n - 1) * (lb + lm2))[None, :]
        r_seq = np.mean(m_prev ** (p / 2.0), axis=0) * growth
    return NormReport(chi, norm_hat, r_seq, verdict)


def hv_growth(alpha: float, p: float, q: float, b: int, n_max: int) -> FitResult:
    """Growth rate of ``||T_n||^p`` for the Lebesgue vector measure, target ``p (alpha + 1/q)``.

    With ``N = b^n`` and ``s = k + jN`` the frequency sum folds into Hurwitz
    zeta values: ``sum_k |2 sin(pi k/N)|^q k^-a (1 + (k/N)^a zeta(a, 1 + k/N))``
    with ``a = (1 - alpha) q``.  The slope is fitted over ``n_max/2 <= n <= n_max``.
    """
    if not 0 <= alpha < 1:
        raise BadExponents(f"alpha={alpha} outside [0, 1)")
    a = (1.0 - alpha) * q
    if a <= 1:
        raise SeriesDiverges(f"(1 - alpha) q = {a} <= 1")
    ns = np.arange(max(1, n_max // 2), n_max + 1)
    logs = []
    for n in ns:
        N = b ** int(n)
        k = np.arange(1, N, dtype=float)
        x = k / N
        tail = np.exp(a * np.log(x) + np.log(zeta(a, 1.0 + x)))
        terms = q * np.log(2.0 * np.sin(np.pi * x)) - a * np.log(k) + np.log1p(tail)
        log_sigma = logsumexp(terms)
        logs.append(n * p * math.log(b) - p * math.log(2 * math.pi) + (p / q) * log_sigma)
    return _fit(ns * math.log(b), logs, "hurwitz")


def divergence_probe(spec: ModelSpec, eps: float, depth: int, reps: int, seed: int) -> bool:
    """Whether ``b^{n(D_F + eps)} median|mu_N^(b^n)|^2`` has a growing running max.

    Survivors only.  Returns False when ``depth < 6`` (too few levels).
    """
    if depth < 6:
        return False
    b = spec.b
    d_f = fourier_dimension(spec)
    ns = np.arange(1, depth - 1)
    cs = mc.coefficient_samples(spec, depth, b ** ns, reps, seed)
    alive = cs.totals > SURVIVAL_FLOOR
    if alive.sum() == 0:
        return False
    med = np.median(np.abs(cs.coeffs[alive]) ** 2, axis=0)
    env = np.maximum.accumulate(np.log(med) + ns * (d_f + eps) * math.log(b))
    third = max(1, ns.size // 3)
    return bool(env[-third:].max() > env[:third].max())
