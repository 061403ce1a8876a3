"""The acceptance suite: fifteen numbered criteria, each returning numbers and a verdict.

Results contain only numbers derived from the master seed, never timings or
thread counts, so their serialisation is reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import estimators as est
from . import montecarlo as mc
from .cascade import sample_field
from .errors import NotBoundary
from .regimes import (Regime, biggins_kyprianou, classify_squared_regime, fourier_dimension,
                      hausdorff_dimension, psi, require_boundary, second_moment_series)
from .weights import Discrete, LogNormal, ModelSpec, TwoPoint

DEFAULT_SEED = 1


def lognormal(a: float, b: int) -> ModelSpec:
    """Log-normal weight with ``sigma^2 = a log b``."""
    return ModelSpec(LogNormal(math.sqrt(a * math.log(b))), b)


def lognormal_df(a: float) -> float:
    """Closed-form Fourier dimension of the log-normal cascade, ``a = sigma^2 / log b``."""
    return 1.0 - a if a <= 0.5 else 2.0 * (1.0 - math.sqrt(a / 2.0)) ** 2


@dataclass
class Outcome:
    number: int
    name: str
    passed: bool
    values: dict
    budget: float | None
    elapsed: float = 0.0
    numeric_pass: bool = True

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        nums = ", ".join(f"{k}={_fmt(v)}" for k, v in self.values.items() if not isinstance(v, list))
        t = f"{self.elapsed:.1f}s" + (f"/{self.budget:g}s" if self.budget else "")
        return f"[{tag}] {self.number:2d} {self.name}: {nums} ({t})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


@dataclass
class Context:
    seed: int = DEFAULT_SEED
    scale: float = 1.0
    threads: int | None = None
    cache: dict = field(default_factory=dict)

    def reps(self, n: int, floor: int = 2) -> int:
        return max(floor, int(round(n * self.scale)))


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    return v


# -- 1..3: closed forms ----------------------------------------------------------

def c01_lognormal_closed_form(ctx: Context):
    worst = 0.0
    for b in (2, 3, 10):
        for a in np.linspace(0.04, 1.96, 25):
            worst = max(worst, abs(fourier_dimension(lognormal(float(a), b)) - lognormal_df(float(a))))
    joint = 0.0
    for b in (2, 3, 10):
        spec = lognormal(0.5, b)
        m, i = fourier_dimension(spec, "moment"), fourier_dimension(spec, "infimum")
        joint = max(joint, abs(m - i), abs(m - 0.5))
    return worst < 1e-12 and joint < 1e-12, {"max_err": worst, "kink_gap": joint}


SALEM_SPECS = [ModelSpec(TwoPoint(x), b) for x, b in
               [(0.6, 2), (0.75, 2), (0.9, 2), (0.4, 3), (0.6, 3), (0.95, 3),
                (0.3, 4), (0.5, 4), (0.2, 10), (0.7, 10)]]
NON_SALEM_SPECS = [
    lognormal(0.2, 2), lognormal(0.5, 3), lognormal(1.0, 2), lognormal(1.5, 10),
    ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 2),
    ModelSpec(Discrete([(3.0, 0.2), (0.5, 0.8)]), 3),
    ModelSpec(Discrete([(2.0, 0.25), (1.0, 0.25), (0.5, 0.5)]), 2),
    ModelSpec(Discrete([(4.0, 0.125), (0.0, 0.375), (1.0, 0.5)]), 4),
    ModelSpec(Discrete([(1.2, 0.5), (0.8, 0.5)]), 5),
    ModelSpec(Discrete([(2.5, 0.2), (0.625, 0.8)]), 3),
]


def c02_salem(ctx: Context):
    salem_gap = max(abs(fourier_dimension(s) - hausdorff_dimension(s)) for s in SALEM_SPECS)
    margin = min(hausdorff_dimension(s) - fourier_dimension(s) for s in NON_SALEM_SPECS)
    regimes = sorted({classify_squared_regime(s).value for s in NON_SALEM_SPECS})
    ok = salem_gap < 1e-12 and margin > 1e-6 and len(regimes) == 3
    return ok, {"salem_gap": salem_gap, "non_salem_margin": margin, "regimes": regimes}


SUPER_SPECS = [lognormal(0.8, 2), lognormal(1.0, 3), lognormal(1.6, 10),
               ModelSpec(Discrete([(3.0, 0.2), (0.5, 0.8)]), 3),
               ModelSpec(Discrete([(4.0, 0.2), (0.25, 0.8)]), 3)]


def c03_boundary_transform(ctx: Context):
    beta_err = 0.0
    for b in (2, 3, 10):
        for a in (0.1, 0.5, 1.0, 1.9):
            spec = lognormal(a, b)
            beta_err = max(beta_err, abs(biggins_kyprianou(spec).beta
                                         - spec.weight.sigma / math.sqrt(2 * math.log(b))))
    not_boundary = 0
    for spec in SALEM_SPECS:
        try:
            require_boundary(spec)
        except NotBoundary:
            not_boundary += 1
    psi_err = 0.0
    for spec in SUPER_SPECS:
        assert classify_squared_regime(spec) is Regime.SUPER
        tr = biggins_kyprianou(spec)
        psi_err = max(psi_err, abs(fourier_dimension(spec) - 2 * psi(tr, tr.beta) / spec.log_b))
    ok = beta_err < 1e-10 and not_boundary == len(SALEM_SPECS) and psi_err < 1e-9
    return ok, {"beta_err": beta_err, "not_boundary": not_boundary, "psi_err": psi_err}


# -- 4..6: second moments ----------------------------------------------------------

MOMENT_SPECS = [ModelSpec(TwoPoint(0.75), 2), lognormal(0.3, 3)]
MOMENT_FREQS = (1, 3, 7, 16)
BADIC_LEVELS = (2, 4, 6)


def _moment_samples(ctx: Context, spec: ModelSpec, depth: int = 12):
    key = ("moments", spec, depth)
    if key not in ctx.cache:
        freqs = sorted(set(MOMENT_FREQS) | {spec.b ** n for n in BADIC_LEVELS})
        cs = mc.coefficient_samples(spec, depth, freqs, ctx.reps(10_000), ctx.seed)
        ctx.cache[key] = {int(s): np.abs(cs.coeffs[:, j]) ** 2 for j, s in enumerate(freqs)}
    return ctx.cache[key]


def c04_second_moment(ctx: Context):
    z = []
    for spec in MOMENT_SPECS:
        a2 = _moment_samples(ctx, spec)
        for s in MOMENT_FREQS:
            m, se = mc.mean_and_se(a2[s])
            z.append((m - second_moment_series(spec, s, 12)) / se)
    worst = max(abs(v) for v in z)
    return worst < 3.0, {"max_abs_z": worst, "z": z}


def c05_badic_scaling(ctx: Context):
    z = []
    for spec in MOMENT_SPECS:
        a2 = _moment_samples(ctx, spec)
        r = spec.weight.moment(2.0) / spec.b
        for n in BADIC_LEVELS:
            m, se = mc.mean_and_se(a2[spec.b ** n])
            z.append((m - r ** n * second_moment_series(spec, 1, 12 - n)) / se)
    worst = max(abs(v) for v in z)
    return worst < 3.0, {"max_abs_z": worst, "z": z}


def c06_conditional_identity(ctx: Context):
    cc = est.conditional_check(lognormal(0.3, 3), 5, 12, ctx.reps(5000), ctx.seed)
    ok = abs(cc.mean - 1.0) <= 0.05 and abs(cc.re_im_corr) < 0.05
    return ok, {"ratio": cc.mean, "ratio_se": cc.se, "re_im_corr": cc.re_im_corr}


# -- 7, 8: dimensions ------------------------------------------------------------------

DIMENSION_SPECS = [lognormal(0.2, 2), ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 2)]
TREND_DEPTHS = range(16, 21)


def _trend_mean(ctx: Context, spec: ModelSpec, p):
    vals = [est.depth_trend(spec, mc.replicate_seed(ctx.seed, r), TREND_DEPTHS, p).estimate
            for r in range(ctx.reps(20))]
    return float(np.mean(vals))


def c07_correlation_dimension(ctx: Context):
    est_vals = [_trend_mean(ctx, s, 2.0) for s in DIMENSION_SPECS]
    errs = [abs(e - fourier_dimension(s)) for e, s in zip(est_vals, DIMENSION_SPECS)]
    return max(errs) <= 0.05, {"estimates": est_vals, "max_err": max(errs)}


def c08_entropy_dimension(ctx: Context):
    est_vals = [_trend_mean(ctx, s, None) for s in DIMENSION_SPECS]
    errs = [abs(e - hausdorff_dimension(s)) for e, s in zip(est_vals, DIMENSION_SPECS)]
    return max(errs) <= 0.05, {"estimates": est_vals, "max_err": max(errs)}


# -- 9, 10: deterministic norm checks --------------------------------------------------

HV_TRIPLES = [(0.1, 1.5, 4.0), (0.0, 2.0, 8.0), (0.3, 1.2, 3.0)]


def c09_hv_growth(ctx: Context):
    errs = [abs(est.hv_growth(a, p, q, 2, 12).estimate - p * (a + 1.0 / q))
            for a, p, q in HV_TRIPLES]
    return max(errs) <= 0.02, {"max_err": max(errs), "errs": errs}


def norm_grid():
    """Fifty ``(spec, alpha, p, q)`` points over the three regimes."""
    pts = []
    for spec in (lognormal(0.2, 3), lognormal(0.4, 2)):
        for alpha in (0.0, 0.12, 0.22, 0.32, 0.45):
            for q in (4.0, 10.0, 40.0):
                pts.append((spec, alpha, 1.5, q))
    for spec in (lognormal(0.5, 3),):
        for alpha in (0.0, 0.1, 0.2, 0.3):
            for q in (4.0, 10.0):
                pts.append((spec, alpha, 1.5, q))
    for spec in (lognormal(1.0, 2), lognormal(0.8, 3)):
        for alpha in (0.0, 0.05, 0.1):
            for q in (8.0, 40.0):
                pts.append((spec, alpha, 1.1, q))
    return pts


def _reference_verdict(spec: ModelSpec, alpha, p, q) -> str:
    """The criteria from closed forms of the log-normal law alone (no solver)."""
    a = round(spec.weight.sigma ** 2 / spec.log_b, 12)
    if a > 0.5:
        return "Finite" if alpha + 1.0 / q <= lognormal_df(a) / 2.0 else "Diverging"
    gap = a - (1.0 - 2.0 * alpha - 2.0 / q)  # log_b E[W^2] = a
    if a == 0.5 and abs(gap) <= 1e-12:
        return "Borderline"
    return "Finite" if gap < 0 else "Diverging"


def c10_norm_verdicts(ctx: Context):
    pts = norm_grid()
    got = [est.norm_verdict(s, a, p, q).value for s, a, p, q in pts]
    want = [_reference_verdict(s, a, p, q) for s, a, p, q in pts]
    mism = sum(g != w for g, w in zip(got, want))
    kinds = sorted(set(got))
    return mism == 0 and len(pts) == 50, {"points": len(pts), "mismatches": mism, "verdicts": kinds}


# -- 11..14: Monte Carlo asymptotics -----------------------------------------------

def c11_super_tail(ctx: Context):
    spec = lognormal(1.0, 2)
    rep = est.fluctuation_suite(spec, 10, 14, ctx.reps(20_000, 100), ctx.seed, conditional=False)
    target = 1.0 / biggins_kyprianou(spec).beta
    return abs(rep.tail_index - target) <= 0.25, {"tail_index": rep.tail_index, "target": target}


def partition_slope(spec: ModelSpec, gamma: float, r: float, ns, reps: int, seed: int) -> float:
    """Slope of ``log E[Z_{n,gamma}^r]`` against ``log n``."""
    tr = biggins_kyprianou(spec)
    ns = np.asarray(list(ns))
    sums = mc.level_sums(spec, int(ns.max()), [gamma * tr.t_star], reps, seed)[:, :, 0]
    z = sums[:, ns] * np.exp(-ns * gamma * tr.log_norm)
    return est._fit(np.log(ns), np.log(np.mean(z ** r, axis=0)), "partition").estimate


def c12_partition_moments(ctx: Context):
    g, r = 1.5, 0.4
    slope = partition_slope(lognormal(1.0, 2), g, r, range(4, 13), ctx.reps(20_000), ctx.seed)
    target = -1.5 * r * g
    return abs(slope - target) <= 0.35, {"slope": slope, "target": target}


SERIES_SPECS = [lognormal(0.2, 2), lognormal(0.3, 3), ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 2)]


def c13_series_slope(ctx: Context):
    ks = np.unique(np.round(np.geomspace(16, 4096, 40)).astype(int))
    errs = [abs(est.moment_scaling(s, 2, ks).estimate + fourier_dimension(s, "moment"))
            for s in SERIES_SPECS]
    return max(errs) <= 0.05, {"max_err": max(errs)}


def c14_frostman(ctx: Context):
    spec = lognormal(0.2, 2)
    gamma = 0.8 * fourier_dimension(spec) / 2.0
    reps = ctx.reps(100)
    good = 0
    for r in range(reps):
        s = mc.replicate_seed(ctx.seed, r)
        ratio = est.frostman_stat(sample_field(spec, 16, s), gamma) / \
            est.frostman_stat(sample_field(spec, 10, s), gamma)
        good += ratio < 2.0
    frac = good / reps
    return frac >= 0.95, {"fraction_below_2": frac}


# -- 15: reproducibility ------------------------------------------------------------------

REPRO_SCALE = 0.05
REPRO_ONLY = tuple(range(1, 15))


def c15_reproducibility(ctx: Context):
    """Reduced-scale ``verify`` runs, twice each at 1, 4 and 8 threads."""
    digests = []
    env = dict(os.environ, NUMBA_NUM_THREADS="8")
    with tempfile.TemporaryDirectory() as tmp:
        for threads in (1, 4, 8):
            for k in range(2):
                out = os.path.join(tmp, f"t{threads}_{k}")
                cmd = [sys.executable, "-m", "mccm.cli", "verify", "--seed", str(ctx.seed),
                       "--scale", str(REPRO_SCALE), "--threads", str(threads), "--out", out,
                       "--only", ",".join(map(str, REPRO_ONLY)), "--no-time-limits"]
                subprocess.run(cmd, env=env, capture_output=True, check=False)
                with open(os.path.join(out, "manifest.json")) as fh:
                    digests.append(json.load(fh)["files"])
    same = all(d == digests[0] for d in digests) and bool(digests[0])
    return same, {"runs": len(digests), "identical": same}


CRITERIA: dict[int, tuple[str, Callable, float | None]] = {
    1: ("lognormal closed form", c01_lognormal_closed_form, 1.0),
    2: ("Salem characterisation", c02_salem, 1.0),
    3: ("boundary-case transform", c03_boundary_transform, 1.0),
    4: ("exact second moment", c04_second_moment, 120.0),
    5: ("b-adic scaling identity", c05_badic_scaling, 120.0),
    6: ("conditional variance identity", c06_conditional_identity, 180.0),
    7: ("correlation dimension", c07_correlation_dimension, 300.0),
    8: ("entropy dimension", c08_entropy_dimension, 120.0),
    9: ("H_V growth rate", c09_hv_growth, 30.0),
    10: ("norm criterion verdicts", c10_norm_verdicts, 1.0),
    11: ("super-critical tail index", c11_super_tail, 600.0),
    12: ("partition-function small moments", c12_partition_moments, 300.0),
    13: ("series moment-scaling slope", c13_series_slope, 10.0),
    14: ("Frostman proxy", c14_frostman, 180.0),
    15: ("reproducibility across threads", c15_reproducibility, None),
}


def run_criterion(number: int, ctx: Context, time_limits: bool = True) -> Outcome:
    name, fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        ok, values = fn(ctx)
    except Exception as exc:  # a crashing criterion is reported as a failure
        ok, values = False, {"error": f"{type(exc).__name__}: {exc}"}
    elapsed = time.perf_counter() - t0
    in_time = budget is None or not time_limits or elapsed < budget
    return Outcome(number, name, bool(ok and in_time), _clean(values), budget, elapsed, bool(ok))


def run_suite(numbers, ctx: Context, time_limits: bool = True, echo=None) -> list[Outcome]:
    out = []
    for k in numbers:
        res = run_criterion(k, ctx, time_limits)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out


def results_record(outcomes) -> dict:
    """Seed-determined content only (no timings)."""
    return {str(o.number): {"name": o.name, "pass": o.numeric_pass, "values": o.values}
            for o in outcomes}
