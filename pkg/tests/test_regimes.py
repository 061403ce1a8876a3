import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import lognormal_spec
from mccm.errors import DegenerateModel, NotBoundary, SeriesDiverges
from mccm.regimes import (Regime, biggins_kyprianou, classify_squared_regime, dimension_report,
                          fourier_dimension, hausdorff_dimension, is_nondegenerate, is_salem,
                          pseudo_moment_series, psi, require_boundary, second_moment_series,
                          varrho_varpi)
from mccm.weights import Discrete, LogNormal, ModelSpec, TwoPoint


def df_lognormal(a):
    """Oracle: 1 - a below the kink at a = 1/2, 2 (1 - sqrt(a/2))^2 above."""
    return 1.0 - a if a <= 0.5 else 2.0 * (1.0 - math.sqrt(a / 2.0)) ** 2


@pytest.mark.parametrize("b", [2, 3, 10])
@pytest.mark.parametrize("a", [0.04, 0.25, 0.5, 0.7, 1.0, 1.5, 1.96])
def test_lognormal_fourier_dimension(a, b):
    assert fourier_dimension(lognormal_spec(a, b)) == pytest.approx(df_lognormal(a), abs=1e-12)


@pytest.mark.parametrize("a", [0.1, 0.6, 1.4])
def test_lognormal_hausdorff_dimension(a):
    assert hausdorff_dimension(lognormal_spec(a, 3)) == pytest.approx(1 - a / 2, abs=1e-14)


def test_cli_example_values():
    assert fourier_dimension(lognormal_spec(0.25, 3)) == pytest.approx(0.75, abs=1e-12)
    spec = ModelSpec(TwoPoint(0.5), 4)
    assert is_salem(spec)
    assert fourier_dimension(spec) == pytest.approx(0.5, abs=1e-12)
    assert hausdorff_dimension(spec) == pytest.approx(0.5, abs=1e-12)


def test_branches_agree_at_kink():
    spec = lognormal_spec(0.5, 2)
    assert classify_squared_regime(spec) is Regime.CRITICAL
    assert fourier_dimension(spec, "moment") == pytest.approx(fourier_dimension(spec, "infimum"),
                                                              abs=1e-12)


def test_infimum_never_exceeds_moment_branch():
    for a in (0.2, 0.8, 1.5):
        spec = lognormal_spec(a, 3)
        assert fourier_dimension(spec, "infimum") >= fourier_dimension(spec, "moment") - 1e-12


def test_degenerate_raises():
    spec = ModelSpec(TwoPoint(0.1), 4)
    assert not is_nondegenerate(spec)
    with pytest.raises(DegenerateModel):
        fourier_dimension(spec)
    with pytest.raises(DegenerateModel):
        dimension_report(spec)


def test_unknown_branch():
    with pytest.raises(ValueError):
        fourier_dimension(lognormal_spec(0.2, 2), "median")


def test_regimes_discrete():
    assert classify_squared_regime(ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 2)) is Regime.SUB
    assert classify_squared_regime(ModelSpec(Discrete([(3.0, 0.2), (0.5, 0.8)]), 3)) is Regime.SUPER


@pytest.mark.parametrize("b", [2, 3, 10])
@pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 1.9])
def test_boundary_transform_lognormal(a, b):
    spec = lognormal_spec(a, b)
    tr = biggins_kyprianou(spec)
    assert tr.beta == pytest.approx(spec.weight.sigma / math.sqrt(2 * math.log(b)), abs=1e-10)
    # psi(1) = 0 and psi'(1) = 0 define the boundary case
    assert psi(tr, 1.0) == pytest.approx(0.0, abs=1e-12)
    h = 1e-6
    assert (psi(tr, 1 + h) - psi(tr, 1 - h)) / (2 * h) == pytest.approx(0.0, abs=1e-7)


def test_boundary_transform_absent_for_two_point():
    spec = ModelSpec(TwoPoint(0.4), 3)
    assert biggins_kyprianou(spec) is None
    with pytest.raises(NotBoundary):
        require_boundary(spec)


def test_boundary_transform_absent_when_top_atom_heavy():
    # b P(W = max) = 2 * 0.5 = 1
    assert biggins_kyprianou(ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 2)) is None


@pytest.mark.parametrize("a,b", [(0.8, 2), (1.0, 3), (1.6, 10)])
def test_super_dimension_equals_psi_formula(a, b):
    spec = lognormal_spec(a, b)
    tr = biggins_kyprianou(spec)
    assert fourier_dimension(spec) == pytest.approx(2 * psi(tr, tr.beta) / math.log(b), abs=1e-9)


def test_super_dimension_discrete_psi_formula():
    spec = ModelSpec(Discrete([(3.0, 0.2), (0.5, 0.8)]), 3)
    tr = biggins_kyprianou(spec)
    assert fourier_dimension(spec) == pytest.approx(2 * psi(tr, tr.beta) / math.log(3), abs=1e-9)


def test_psi_rejects_negative():
    tr = biggins_kyprianou(lognormal_spec(1.0, 2))
    with pytest.raises(ValueError):
        psi(tr, -0.1)


def test_salem_detection():
    assert is_salem(ModelSpec(TwoPoint(0.6), 2))
    assert not is_salem(lognormal_spec(0.3, 2))
    assert not is_salem(ModelSpec(Discrete([(2.0, 0.25), (1.0, 0.25), (0.5, 0.5)]), 2))


def series_bruteforce(spec, s, depth):
    """Oracle: sum over levels with the sinc computed from complex exponentials."""
    b = spec.b
    m2 = spec.weight.moment(2.0)
    tot = 0.0
    for m in range(1, depth + 1):
        x = 2 * math.pi * s / b ** m
        e = np.exp(1j * x) - 1
        tot += (m2 / b) ** (m - 1) * abs(e / x) ** 2
    return (m2 - 1) / b * tot


@pytest.mark.parametrize("s", [1, 2, 3, 7, 16, 27])
def test_second_moment_series_finite_depth(s):
    spec = lognormal_spec(0.3, 3)
    assert second_moment_series(spec, s, 8) == pytest.approx(series_bruteforce(spec, s, 8),
                                                             rel=1e-10, abs=1e-16)


def test_second_moment_series_limit():
    spec = lognormal_spec(0.3, 3)
    assert second_moment_series(spec, 5) == pytest.approx(series_bruteforce(spec, 5, 200), rel=1e-12)


def test_second_moment_series_diverges():
    with pytest.raises(SeriesDiverges):
        second_moment_series(lognormal_spec(1.2, 2), 1)


def test_second_moment_badic_scaling():
    spec = lognormal_spec(0.3, 2)
    r = spec.weight.moment(2.0) / 2
    for n in (1, 3, 5):
        lhs = second_moment_series(spec, 2 ** n, 12)
        assert lhs == pytest.approx(r ** n * second_moment_series(spec, 1, 12 - n), rel=1e-12)


def test_pseudo_moment_vanishes_off_divisibility():
    spec = lognormal_spec(0.3, 3)
    assert pseudo_moment_series(spec, 1, 8) == 0
    spec2 = lognormal_spec(0.3, 2)
    assert abs(pseudo_moment_series(spec2, 1, 8)) > 0


def test_varpi_b2():
    spec = lognormal_spec(0.3, 2)
    varrho, varpi = varrho_varpi(spec)
    m2 = spec.weight.moment(2.0)
    assert varpi == pytest.approx(-2 * (m2 - 1) / math.pi ** 2)
    assert varpi == pytest.approx(pseudo_moment_series(spec, 1, 30).real, rel=1e-12)
    assert varrho > abs(varpi)


def test_dimension_report_record():
    rec = dimension_report(lognormal_spec(0.25, 3)).to_record()
    assert rec["d_f"] == pytest.approx(0.75)
    assert rec["regime"] == "SquaredSub"
    assert rec["nondegenerate"] is True


@settings(max_examples=60, deadline=None)
@given(st.floats(0.02, 1.98), st.sampled_from([2, 3, 5, 10]))
def test_dimension_order(a, b):
    spec = lognormal_spec(a, b)
    d_f, d_h = fourier_dimension(spec), hausdorff_dimension(spec)
    assert 0.0 <= d_f <= d_h + 1e-12 <= 1.0 + 1e-12
    assert d_f == pytest.approx(df_lognormal(a), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.55, 0.95), st.sampled_from([2, 3, 4, 10]))
def test_two_point_salem_property(x, b):
    spec = ModelSpec(TwoPoint(x), b)
    if not is_nondegenerate(spec):
        return
    assert fourier_dimension(spec) == pytest.approx(hausdorff_dimension(spec), abs=1e-12)
