import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from leedissip.errors import ConfigurationError
from leedissip.model import FormFactor, ModelParams, default_k_max, form_factor, make_grid, omega


@pytest.mark.parametrize("k, mu, expected", [(0.0, 1.0, 1.0), (3.0, 4.0, 5.0),
                                             (1.0, 1.0, math.sqrt(2.0))])
def test_omega_examples(k, mu, expected):
    p = ModelParams(mu=mu, form_factor=FormFactor.sharp(10.0))
    assert omega(k, p) == pytest.approx(expected, rel=1e-15)


@given(st.floats(0, 1e3), st.floats(1e-3, 1e2))
def test_omega_at_least_mass(k, mu):
    p = ModelParams(mu=mu, form_factor=FormFactor.sharp(mu + 1.0))
    w = omega(k, p)
    assert w >= mu and w >= k


def test_form_factor_examples():
    sharp = ModelParams(form_factor=FormFactor.sharp(5.0))
    lor = ModelParams(form_factor=FormFactor.lorentzian(5.0))
    assert form_factor(2.0, sharp) == 1.0
    assert form_factor(6.0, sharp) == 0.0
    assert form_factor(5.0, lor) == 0.5


@given(st.floats(0, 100), st.floats(1.5, 50))
def test_form_factors_bounded(w, cutoff):
    for ff in (FormFactor.sharp(cutoff), FormFactor.lorentzian(cutoff)):
        assert 0.0 <= ff(w) <= 1.0


@given(st.floats(0.1, 20), st.floats(1.5, 10))
def test_lorentzian_derivative_matches_difference(w, cutoff):
    ff = FormFactor.lorentzian(cutoff)
    h = 1e-6
    assert ff.derivative(w) == pytest.approx((ff(w + h) - ff(w - h)) / (2 * h), abs=1e-8)


@pytest.mark.parametrize("bad", [dict(mu=0.0), dict(m_N=-1.0), dict(lambda0=-0.1),
                                 dict(form_factor=FormFactor.sharp(0.5))])
def test_params_rejected(bad):
    with pytest.raises(ConfigurationError):
        ModelParams(**bad)


def test_midpoint_grid_two_modes():
    # sharp cutoff at 2 so that k_max = 2 still covers it
    p = ModelParams(form_factor=FormFactor.sharp(2.0))
    g = make_grid(p, 2, 2.0)
    assert_allclose(g.k_values, [0.5, 1.5])
    assert g.dk == 1.0
    assert_allclose(g.weights, g.k_values**2 / (2 * math.pi**2), rtol=1e-15)


def test_grid_integrates_gaussian():
    g = make_grid(ModelParams(form_factor=FormFactor.lorentzian(5.0)), 512, 8.0)
    exact = (1 / (2 * math.pi**2)) * (math.sqrt(math.pi) / 4)
    assert g.integrate(np.exp(-g.k_values**2)) == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("n", [1, 0, -3])
def test_grid_needs_two_modes(n):
    with pytest.raises(ConfigurationError):
        make_grid(ModelParams(), n)


def test_grid_must_cover_sharp_cutoff():
    with pytest.raises(ConfigurationError):
        make_grid(ModelParams(), 64, 2.0)


def test_default_grid_ends_at_cutoff(bench):
    g = make_grid(bench, 100)
    assert g.k_max == pytest.approx(default_k_max(bench))
    assert g.omega_max == pytest.approx(bench.form_factor.cutoff)
    assert g.omega_min == bench.mu


@given(st.integers(2, 300))
def test_grid_is_readonly_and_positive(n):
    g = make_grid(ModelParams(), n)
    assert np.all(g.weights > 0) and np.all(np.diff(g.k_values) > 0)
    with pytest.raises(ValueError):
        g.weights[0] = 1.0
    assert_allclose(g.d_omega, g.dk * g.k_values / g.omegas)
