#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `lattice_fbm.holder_spaces`."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from ..lattice_fbm import holder_spaces as hs


def test_default_exponents():
    holder = hs.default_exponents(0.75)
    assert holder.beta == pytest.approx(0.5 + 0.25 / 3)
    assert holder.beta_prime == pytest.approx(0.5 + 0.5 / 3)
    assert 1 - holder.beta_prime < holder.alpha < holder.beta
    assert holder.beta + holder.beta_prime > 1
    with pytest.raises(ValueError, match='hurst'):
        hs.default_exponents(0.5)


def test_holder_chain_rejected():
    with pytest.raises(ValueError, match='alpha must lie'):
        hs.HolderConfig(beta=0.6, beta_prime=0.7, alpha=0.2)
    with pytest.raises(ValueError, match='beta must exceed'):
        hs.HolderConfig(beta=0.5, beta_prime=0.7, alpha=0.4)
    with pytest.raises(ValueError, match='smaller than hurst'):
        hs.default_exponents(0.75).check_hurst(0.6)
    with pytest.raises(ValueError, match='nonnegative'):
        hs.default_exponents(0.75).with_rho(-1.0)


def test_sampled_path_grid():
    path = hs.SampledPath.from_function(lambda t: [t, 2 * t], 0.0, 1.0, 0.25)
    assert path.n_points == 5
    assert path.window == 2
    assert path.t_end == pytest.approx(1.0)
    np.testing.assert_allclose(path.value_at(0.5), [0.5, 1.0])
    assert path.restrict(0.25, 0.75).n_points == 3
    with pytest.raises(ValueError, match='not a grid point'):
        path.index_of(0.3)
    with pytest.raises(ValueError, match='outside'):
        path.index_of(1.25)
    with pytest.raises(ValueError, match='non-finite'):
        hs.SampledPath(0.0, 0.1, [0.0, np.nan])
    with pytest.raises(ValueError, match='different grids'):
        path + path.shifted(1.0)


def test_linear_path_norms():
    path = hs.SampledPath.from_function(lambda t: t, 0.0, 1.0, 0.01)
    assert hs.sup_norm_weighted(path) == pytest.approx(1.0)
    # |t - s| / |t - s|^beta is largest on the longest lag
    assert hs.holder_seminorm_weighted(path, 0.6) == pytest.approx(1.0)
    assert hs.holder_seminorm_weighted(path, 0.6, rho=5.0) < 1.0
    assert hs.holder_norm(path, 0.6) == pytest.approx(2.0)


def test_constant_path_has_zero_seminorm():
    path = hs.SampledPath(0.0, 0.1, np.full((11, 3), 2.0))
    assert hs.holder_seminorm_weighted(path, 0.7, rho=1.0) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 20.0))
def test_norm_equivalence(seed, rho):
    rng = np.random.default_rng(seed)
    path = hs.SampledPath(0.0, 1.0 / 64, np.cumsum(rng.normal(size=(65, 3)), axis=0) / 8)
    low, weighted, unweighted = hs.norm_equivalence(path, 0.6, rho)
    assert low <= weighted * (1 + 1e-12)
    assert weighted <= unweighted * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 10.0))
def test_product_estimate(seed, rho):
    rng = np.random.default_rng(seed)
    l_path = hs.SampledPath(0.0, 1.0 / 32, np.cumsum(rng.normal(size=33)) / 6)
    g_path = hs.SampledPath(0.0, 1.0 / 32, np.cumsum(rng.normal(size=(33, 4)), axis=0) / 6)
    lhs, rhs = hs.product_estimate(l_path, g_path, 0.65, rho)
    assert lhs <= rhs * (1 + 1e-12)


def test_product_estimate_needs_scalar_multiplier():
    path = hs.SampledPath(0.0, 0.1, np.ones((5, 2)))
    with pytest.raises(ValueError, match='scalar'):
        hs.product_estimate(path, path, 0.6, 0.0)


def test_k_rho_beta_function_at_zero_weight():
    a, b = -0.4, 0.3
    expected = special.beta(a + 1, b + 1)
    assert hs.k_rho(0.0, a, b, 1.0) == pytest.approx(expected, rel=1e-6)
    assert hs.k_rho(0.0, a, b, 2.0) == pytest.approx(2.0 ** (a + b + 1) * expected, rel=1e-6)


def test_k_rho_closed_form_without_singularities():
    rho = 10.0
    assert hs.k_rho(rho, 0.0, 0.0, 1.0) == pytest.approx(-np.expm1(-rho) / rho, rel=1e-6)


def test_k_rho_decreases():
    values = [hs.k_rho(rho, -0.4, 0.0, 1.0) for rho in (0.0, 1.0, 10.0, 100.0, 1000.0)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))
    # large rho: k scales like rho^-(a + b + 1)
    assert values[-1] * 1000.0 ** 0.6 == pytest.approx(values[-2] * 100.0 ** 0.6, rel=1e-3)


def test_k_rho_domain():
    with pytest.raises(ValueError, match='a must exceed'):
        hs.k_rho(1.0, -1.0, 0.0, 1.0)
    with pytest.raises(ValueError, match='rho'):
        hs.k_rho(-1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError, match='T must be positive'):
        hs.k_rho(1.0, 0.0, 0.0, 0.0)


def test_holder_constant_c_beta():
    beta = 0.6
    c = hs.holder_constant_c_beta(beta)
    x = np.logspace(-4, 3, 500)
    assert c >= np.max(-np.expm1(-x) / x ** beta) * (1 - 1e-9)
    assert 0 < c < 1
    with pytest.raises(ValueError):
        hs.holder_constant_c_beta(1.0)
