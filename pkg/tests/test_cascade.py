import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import lognormal_spec
from mccm.cascade import (UNIT, BadicProduct, Lebesgue, Mixture, brw_values,
                          derivative_martingale, leaf_log_products, partition_function,
                          read_field_dump, refine, sample_field, squared_mass, total_mass,
                          write_field, write_field_csv)
from mccm.errors import DepthTooLarge, ModelError, NotBoundary
from mccm.regimes import biggins_kyprianou
from mccm.weights import Discrete, LogNormal, ModelSpec, TwoPoint, sample


def brute_force_masses(spec, depth, seed):
    """Oracle: product of node weights along each path, node by node."""
    b = spec.b
    out = np.empty(b ** depth)
    for k in range(b ** depth):
        digits = [(k // b ** (depth - 1 - j)) % b for j in range(depth)]
        prod = 1.0
        for m in range(1, depth + 1):
            prod *= sample(spec.weight, digits[:m], seed, b=b)
        out[k] = prod * float(b) ** (-depth)
    return out


@pytest.mark.parametrize("spec", [lognormal_spec(0.3, 2), ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 3),
                                  ModelSpec(TwoPoint(0.6), 2)])
def test_field_matches_node_by_node_product(spec):
    f = sample_field(spec, 4, seed=9)
    assert np.allclose(f.masses, brute_force_masses(spec, 4, 9), rtol=1e-13, atol=0)


def test_same_seed_same_field():
    spec = lognormal_spec(0.4, 3)
    assert np.array_equal(sample_field(spec, 6, 5).masses, sample_field(spec, 6, 5).masses)
    assert not np.array_equal(sample_field(spec, 6, 5).masses, sample_field(spec, 6, 6).masses)


def test_depth_cap():
    with pytest.raises(DepthTooLarge):
        sample_field(lognormal_spec(0.3, 3), 40, 1)
    with pytest.raises(ValueError):
        sample_field(lognormal_spec(0.3, 3), -1, 1)


def test_unit_weight_gives_lebesgue():
    f = sample_field(lognormal_spec(0.3, 2), 5, 1, weight=UNIT)
    assert np.allclose(f.masses, 1 / 32)


def test_level_block_sums():
    f = sample_field(lognormal_spec(0.3, 2), 6, 2)
    assert f.level(0)[0] == pytest.approx(total_mass(f))
    assert np.allclose(f.level(3), f.masses.reshape(8, 8).sum(axis=1))
    with pytest.raises(ValueError):
        f.level(7)


def test_refine_reuses_ancestors():
    spec = lognormal_spec(0.3, 2)
    f = sample_field(spec, 4, 3)
    g = refine(f, 3)
    prods = np.exp(leaf_log_products(spec, 7, 3)).reshape(16, 8)
    coarse = np.exp(leaf_log_products(spec, 4, 3))
    # refined[uv] = field[u] b^-extra prod of the new weights
    new = prods / coarse[:, None]
    assert np.allclose(g.masses.reshape(16, 8), f.masses[:, None] * new / 8, rtol=1e-12)
    assert refine(f, 0) is f
    with pytest.raises(ValueError):
        refine(f, -1)


def test_refine_block_sums_under_unit_weight():
    spec = lognormal_spec(0.3, 3)
    f = sample_field(spec, 3, 1, weight=UNIT)
    g = sample_field(spec, 5, 1, weight=UNIT)
    assert np.allclose(g.level(3), f.masses)


def test_log_space_path_agrees():
    spec = lognormal_spec(0.3, 2)
    f = sample_field(spec, 10, 4)
    logs = leaf_log_products(spec, 10, 4)
    assert np.allclose(np.log(f.masses), logs - 10 * math.log(2), rtol=0, atol=1e-12)


def test_deep_b10_uses_log_space_without_underflow():
    spec = lognormal_spec(0.3, 10)
    f = sample_field(spec, 7, 1)
    assert np.all(f.masses > 0) and np.isfinite(f.masses).all()


def test_prefix_and_tail():
    spec = lognormal_spec(0.3, 2)
    depth, pd, salt = 5, 2, 3
    f = sample_field(spec, depth, 5, tail_salt=salt, prefix_depth=pd)
    want = np.empty(2 ** depth)
    for k in range(2 ** depth):
        digits = [(k >> (depth - 1 - j)) & 1 for j in range(depth)]
        prod = 1.0
        for m in range(1, depth + 1):
            prod *= sample(spec.weight, digits[:m], 5, b=2, salt=0 if m <= pd else salt)
        want[k] = prod / 2 ** depth
    assert np.allclose(f.masses, want, rtol=1e-13)
    other = sample_field(spec, depth, 5, tail_salt=salt + 1, prefix_depth=pd)
    assert not np.allclose(f.masses, other.masses)


def test_base_measure_product():
    base = BadicProduct([0.3, 0.7])
    f = sample_field(lognormal_spec(0.3, 2), 5, 1, base, weight=UNIT)
    assert np.allclose(f.masses, base.level_masses(5))
    assert base.lp_dim(2.0) == pytest.approx(math.log(0.09 + 0.49) / (-math.log(2)))
    with pytest.raises(ModelError):
        BadicProduct([0.5, 0.6])
    with pytest.raises(ModelError):
        sample_field(lognormal_spec(0.3, 3), 3, 1, base)


def test_mixture_base():
    m = Mixture([Lebesgue(2), BadicProduct([0.2, 0.8])], [0.5, 0.5])
    assert m.level_masses(3).sum() == pytest.approx(1.0)
    assert m.cylinder_mass(1, 1) == pytest.approx(0.5 * 0.5 + 0.5 * 0.8)


def test_squared_mass_definition():
    spec = lognormal_spec(0.3, 3)
    f = sample_field(spec, 5, 2)
    m2 = spec.weight.moment(2.0)
    prods = f.masses * 3 ** 5
    assert squared_mass(f) == pytest.approx(np.sum(prods ** 2) / (3 ** 5 * m2 ** 5), rel=1e-12)


def test_brw_and_derivative_martingale():
    spec = lognormal_spec(1.0, 2)
    tr = biggins_kyprianou(spec)
    f = sample_field(spec, 8, 3)
    v = brw_values(f, tr)
    logp = np.log(f.masses * 2 ** 8)
    assert np.allclose(v, -tr.t_star * logp + 8 * tr.log_norm)
    assert derivative_martingale(f, tr) == pytest.approx(np.sum(v * np.exp(-v)))
    assert partition_function(f, tr, 1.0) == pytest.approx(np.sum(np.exp(-v)))
    with pytest.raises(ValueError):
        partition_function(f, tr, 0.0)
    with pytest.raises(NotBoundary):
        brw_values(f, None)


def test_brw_zero_weights_are_infinite():
    spec = ModelSpec(Discrete([(4.0, 0.125), (0.0, 0.375), (1.0, 0.5)]), 4)
    tr = biggins_kyprianou(spec)
    f = sample_field(spec, 4, 1)
    v = brw_values(f, tr)
    assert np.array_equal(np.isinf(v), f.masses == 0.0) and np.isinf(v).any()
    fin = np.isfinite(v)
    assert derivative_martingale(f, tr) == pytest.approx(np.sum(v[fin] * np.exp(-v[fin])))


def test_field_dump_round_trip(tmp_path):
    f = sample_field(lognormal_spec(0.3, 3), 4, 17)
    path = tmp_path / "f.bin"
    write_field(path, f)
    b, depth, seed, tag, masses = read_field_dump(path)
    assert (b, depth, seed, tag) == (3, 4, 17, "lebesgue")
    assert np.array_equal(masses, f.masses)
    write_field_csv(tmp_path / "f.csv", f)
    data = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=2)
    assert np.array_equal(data[:, 1], f.masses)


def test_field_dump_bad_magic(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"\0" * 64)
    with pytest.raises(ValueError):
        read_field_dump(path)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([2, 3, 4]), st.integers(1, 6))
def test_total_mass_is_sum_of_levels(seed, b, depth):
    f = sample_field(lognormal_spec(0.3, b), depth, seed)
    for m in range(depth + 1):
        assert f.level(m).sum() == pytest.approx(total_mass(f), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_mass_martingale_mean(seed):
    # E[total mass] = 1 at every depth; a batch mean sits within a loose band
    spec = lognormal_spec(0.2, 2)
    tot = [total_mass(sample_field(spec, 6, seed * 1000 + k)) for k in range(200)]
    assert abs(np.mean(tot) - 1.0) < 0.15
