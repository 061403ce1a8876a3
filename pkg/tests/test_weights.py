import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mccm.errors import ConstantWeight, MeanNotOne, ModelError, NegativeAtom, ZeroMoment
from mccm.weights import (Discrete, LogNormal, ModelSpec, TwoPoint, check_conditions,
                          heap_index, is_lattice, kernel_params, mean_w_log_w, merged_atoms,
                          model_from_dict, moment, sample, squared_entropy, structure_fn,
                          validate)


def lognormal_moment_quad(sigma, t):
    f = lambda z: math.exp(t * (sigma * z - sigma ** 2 / 2)) * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    return integrate.quad(f, -40, 40, limit=200)[0]


@pytest.mark.parametrize("sigma,t", [(0.3, 2.0), (0.8, 1.5), (1.2, 0.5), (0.5, 3.0)])
def test_lognormal_moment_matches_quadrature(sigma, t):
    assert LogNormal(sigma).moment(t) == pytest.approx(lognormal_moment_quad(sigma, t), rel=1e-9)


def test_lognormal_moment_log_is_derivative():
    w = LogNormal(0.7)
    for t in (0.5, 1.0, 2.0):
        h = 1e-6
        num = (w.moment(t + h) - w.moment(t - h)) / (2 * h)
        assert w.moment_log(t) == pytest.approx(num, rel=1e-7)


def test_twopoint_closed_forms():
    w = TwoPoint(0.25)
    assert w.moment(2.0) == pytest.approx(4.0)
    assert mean_w_log_w(w) == pytest.approx(math.log(4.0))
    assert w.moment(0.0) == 1.0


def test_discrete_moments_by_hand():
    w = Discrete([(1.5, 0.5), (0.5, 0.5)])
    assert w.moment(2.0) == pytest.approx(0.5 * 2.25 + 0.5 * 0.25)
    assert mean_w_log_w(w) == pytest.approx(0.75 * math.log(1.5) + 0.25 * math.log(0.5))


def test_log_moment_stable_for_large_t():
    w = Discrete([(4.0, 0.125), (0.0, 0.375), (1.0, 0.5)])
    assert w.log_moment(400.0) == pytest.approx(math.log(0.125) + 400 * math.log(4.0))


def test_zero_atom_conventions():
    w = Discrete([(4.0, 0.125), (0.0, 0.375), (1.0, 0.5)])
    assert w.moment(0.0) == pytest.approx(1.0)
    assert math.isfinite(w.moment_log(1.0))


@pytest.mark.parametrize("bad,err", [
    (LogNormal(0.0), ConstantWeight),
    (TwoPoint(1.0), ConstantWeight),
    (TwoPoint(0.0), ModelError),
    (Discrete([(2.0, 0.5), (0.5, 0.5)]), MeanNotOne),
    (Discrete([(-1.0, 0.5), (3.0, 0.5)]), NegativeAtom),
    (Discrete([(1.0, 1.0)]), ConstantWeight),
    (Discrete([(1.5, 0.5), (0.5, 0.4)]), ModelError),
])
def test_validate_rejects(bad, err):
    with pytest.raises(err):
        validate(bad)


def test_spec_requires_integer_base():
    with pytest.raises(ModelError):
        ModelSpec(LogNormal(0.3), 1)


def test_structure_fn_at_one_is_zero():
    spec = ModelSpec(LogNormal(0.6), 3)
    phi, dphi = structure_fn(spec, 1.0)
    assert phi == pytest.approx(0.0, abs=1e-15)
    assert dphi == pytest.approx(mean_w_log_w(spec.weight) - math.log(3))


def test_structure_fn_zero_moment():
    spec = ModelSpec(Discrete([(0.0, 1.0)]), 2)
    with pytest.raises(ZeroMoment):
        structure_fn(spec, 2.0)


def test_check_conditions():
    spec = ModelSpec(TwoPoint(0.5), 2)  # W in {0, 2}: E[W log W] = log 2
    assert check_conditions(spec, 2.0)["nondegenerate"] is False
    spec = ModelSpec(LogNormal(0.3), 2)
    c = check_conditions(spec, 2.0)
    assert c["nondegenerate"] and c["lp_bounded"]


def test_squared_entropy_lognormal():
    # W2 = W^2/E[W^2] is log-normal with sigma' = 2 sigma: E[W2 log W2] = 2 sigma^2
    assert squared_entropy(LogNormal(0.4)) == pytest.approx(2 * 0.16)


def test_merged_atoms_and_lattice():
    w = Discrete([(2.0, 0.25), (1.0, 0.25), (0.5, 0.5)])
    vals, probs = merged_atoms(w)
    assert list(vals) == [0.5, 1.0, 2.0]
    assert is_lattice(w)
    assert not is_lattice(Discrete([(math.e, 0.1), (2.0, 0.1), (0.6980, 0.8)]))
    assert merged_atoms(LogNormal(0.3)) is None


def test_heap_index():
    assert heap_index([], 3) == 1
    assert heap_index([2], 3) == 5
    assert heap_index([1, 0], 2) == 6
    with pytest.raises(ValueError):
        heap_index([3], 3)


def test_sample_is_pure_function():
    w = LogNormal(0.5)
    a = sample(w, [1, 0, 1], seed=11, b=2)
    assert a == sample(w, heap_index([1, 0, 1], 2), seed=11)
    assert a != sample(w, [1, 0, 1], seed=12, b=2)
    assert a != sample(w, [1, 0, 1], seed=11, b=2, salt=3)


def test_sample_discrete_hits_atoms():
    w = Discrete([(1.5, 0.5), (0.5, 0.5)])
    vals = {sample(w, h, seed=3) for h in range(1, 200)}
    assert vals == {0.5, 1.5}


def test_model_from_dict_round_trip():
    for w in (LogNormal(0.3), TwoPoint(0.4), Discrete([(1.5, 0.5), (0.5, 0.5)])):
        assert model_from_dict(w.to_dict()) == w
    with pytest.raises(ModelError):
        model_from_dict({"kind": "cauchy"})


def test_moment_rejects_negative_t():
    with pytest.raises(ValueError):
        moment(LogNormal(0.3), -1.0)


@given(st.floats(0.05, 0.95), st.floats(0.1, 3.0))
def test_twopoint_mean_one_and_moment(x, t):
    w = TwoPoint(x)
    validate(w)
    assert w.moment(1.0) == pytest.approx(1.0)
    vals, probs = w.atoms()
    assert float(np.sum(probs * np.where(vals > 0, vals, 0.0) ** t)) == pytest.approx(w.moment(t))


@given(st.floats(0.01, 0.99), st.floats(1.01, 5.0))
def test_discrete_moment_convex_in_t(p, hi):
    lo = (1.0 - p * hi) / (1.0 - p)
    if lo < 0:
        return
    w = Discrete([(hi, p), (lo, 1 - p)])
    validate(w)
    ts = np.linspace(0.2, 3.0, 9)
    lm = np.array([w.log_moment(t) for t in ts])
    assert np.all(np.diff(lm, 2) >= -1e-9)
    assert w.log_moment(1.0) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50)
@given(st.floats(0.05, 2.0), st.floats(0.1, 4.0))
def test_lognormal_log_moment_deriv(sigma, t):
    w = LogNormal(sigma)
    h = 1e-5
    num = (w.log_moment(t + h) - w.log_moment(t - h)) / (2 * h)
    assert w.log_moment_deriv(t) == pytest.approx(num, rel=1e-6, abs=1e-9)


def test_kernel_params_cdf_ends_at_one():
    kind, sigma, values, cdf = kernel_params(Discrete([(1.5, 0.3), (0.5, 0.3), (1.0, 0.4)]))
    assert cdf[-1] == 1.0 and np.all(np.diff(cdf) > 0)
