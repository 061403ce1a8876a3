"""Unit tests of the acceptance machinery (the suite itself runs in test_acceptance)."""

import json

import pytest

from mccm import verify
from mccm.regimes import Regime, classify_squared_regime, fourier_dimension


def test_lognormal_helper():
    assert fourier_dimension(verify.lognormal(0.25, 3)) == pytest.approx(0.75)
    assert verify.lognormal_df(0.5) == pytest.approx(0.5)
    assert verify.lognormal_df(1.0) == pytest.approx(2 * (1 - 0.5 ** 0.5) ** 2)


def test_norm_grid_has_fifty_points_over_three_regimes():
    pts = verify.norm_grid()
    assert len(pts) == 50
    assert {classify_squared_regime(p[0]) for p in pts} == set(Regime)


def test_reference_spec_lists():
    assert len(verify.SALEM_SPECS) == 10 and len(verify.NON_SALEM_SPECS) == 10
    assert all(classify_squared_regime(s) is Regime.SUPER for s in verify.SUPER_SPECS)


def test_context_reps():
    ctx = verify.Context(scale=0.01)
    assert ctx.reps(100) == 2
    assert ctx.reps(20_000, 100) == 200


def test_outcome_line_format():
    o = verify.Outcome(4, "exact second moment", True, {"max_abs_z": 1.2345678, "z": [1, 2]}, 120.0,
                       3.21)
    assert o.line() == "[PASS]  4 exact second moment: max_abs_z=1.23457 (3.2s/120s)"


def test_time_limit_turns_pass_into_fail(monkeypatch):
    monkeypatch.setitem(verify.CRITERIA, 1, ("slow", lambda ctx: (True, {}), -1.0))
    out = verify.run_criterion(1, verify.Context())
    assert out.numeric_pass and not out.passed
    assert verify.run_criterion(1, verify.Context(), time_limits=False).passed


def test_crashing_criterion_is_a_failure(monkeypatch):
    def boom(ctx):
        raise RuntimeError("kaput")
    monkeypatch.setitem(verify.CRITERIA, 2, ("boom", boom, 1.0))
    out = verify.run_criterion(2, verify.Context())
    assert not out.passed and "kaput" in out.values["error"]


def test_tampered_tolerance_fails(monkeypatch):
    # a zero tolerance cannot be met by a Monte Carlo-free criterion with rounding error
    monkeypatch.setitem(verify.CRITERIA, 9, ("hv", lambda ctx: (
        max(abs(verify.est.hv_growth(a, p, q, 2, 12).estimate - p * (a + 1 / q))
            for a, p, q in verify.HV_TRIPLES) <= 0.0, {}), 30.0))
    assert not verify.run_criterion(9, verify.Context()).passed


def test_results_record_has_no_timings():
    outs = verify.run_suite([1, 2], verify.Context())
    rec = verify.results_record(outs)
    text = json.dumps(rec)
    assert "elapsed" not in text and "budget" not in text
    assert set(rec) == {"1", "2"}
