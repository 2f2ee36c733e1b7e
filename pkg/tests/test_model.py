"""Model-layer tests: coefficients, state validation, and both RHS forms."""

import numpy as np
import pytest

from komega1d import (
    Field,
    Grid,
    Params,
    State,
    ToyState,
    build_state,
    diffusivity,
    mirror,
    parse_config,
    rhs_beta_form,
    rhs_k_form,
    rhs_toy,
    turbulence_quantities,
)


def _blowup_state(n: int) -> State:
    return build_state(parse_config(f"scenario = blowup\nn_points = {n}"))


def _generic_state(n: int) -> State:
    return build_state(parse_config(f"scenario = generic\nn_points = {n}"))


@pytest.mark.parametrize("name", ["nu", "alpha1", "alpha2", "alpha3", "alpha4", "ell_constant"])
def test_params_reject_nonpositive(name):
    with pytest.raises(ValueError, match=name):
        Params(**{name: 0.0})
    with pytest.raises(ValueError, match=name):
        Params(**{name: -1.0})


def test_state_requires_positive_omega():
    g = Grid(16)
    z = Field(g, np.zeros(16))
    w = np.ones(16)
    w[5] = 0.0
    with pytest.raises(ValueError):
        State(0.0, z, Field(g, w), Field(g, np.ones(16)))


def test_state_requires_shared_grid():
    a, b = Grid(16), Grid(32)
    with pytest.raises(ValueError):
        State(
            0.0,
            Field(a, np.zeros(16)),
            Field(a, np.ones(16)),
            Field(b, np.ones(32)),
        )


def test_diffusivity_and_turbulence_quantities():
    g = Grid(32)
    w = 2.0 + np.cos(g.nodes)
    b = 1.0 + 0.5 * np.sin(g.nodes)
    s = State(0.0, Field(g, np.zeros(32)), Field(g, w), Field(g, b))
    p = Params(ell_constant=0.7)
    np.testing.assert_allclose(diffusivity(s).values, b * b / w, rtol=1e-15)
    eps, ell = turbulence_quantities(s, p)
    np.testing.assert_allclose(eps.values, b * b * w, rtol=1e-15)
    np.testing.assert_allclose(ell.values, 0.7 * b / w, rtol=1e-15)


def test_constant_state_reduces_to_pointwise_ode():
    """With no gradients every transport term drops out exactly."""
    g = Grid(16)
    w0, b0 = 3.0, 2.0
    s = State(
        0.0,
        Field(g, np.zeros(16)),
        Field(g, np.full(16, w0)),
        Field(g, np.full(16, b0)),
    )
    p = Params(alpha2=1.5)
    du, dw, db = rhs_beta_form(s, p)
    np.testing.assert_array_equal(du.values, 0.0)
    np.testing.assert_array_equal(dw.values, -1.5 * w0 * w0)
    np.testing.assert_array_equal(db.values, -0.5 * b0 * w0)
    du2, dw2, dk = rhs_k_form(s, p)
    np.testing.assert_array_equal(du2.values, 0.0)
    np.testing.assert_array_equal(dw2.values, -1.5 * w0 * w0)
    np.testing.assert_array_equal(dk.values, -(b0 * b0) * w0)


@pytest.mark.parametrize("form", [rhs_beta_form, rhs_k_form])
def test_rhs_preserves_symmetry_class(form):
    """u odd with omega, beta even must map to (odd, even, even) tendencies."""
    s = _blowup_state(64)
    du, dw, dx = form(s, Params())
    np.testing.assert_array_equal(mirror(du).values, -du.values)
    np.testing.assert_array_equal(mirror(dw).values, dw.values)
    np.testing.assert_array_equal(mirror(dx).values, dx.values)


def test_k_form_consistent_with_beta_form():
    """dk and 2 beta dbeta are the same continuum quantity; their discrete
    gap must shrink at second order on smooth positive data."""
    gaps = []
    for n in (64, 128, 256):
        s = _generic_state(n)
        _, _, db = rhs_beta_form(s, Params())
        _, _, dk = rhs_k_form(s, Params())
        gaps.append(np.max(np.abs(dk.values - 2.0 * s.beta.values * db.values)))
    rate1 = np.log2(gaps[0] / gaps[1])
    rate2 = np.log2(gaps[1] / gaps[2])
    assert 1.8 <= rate1 <= 2.2, gaps
    assert 1.8 <= rate2 <= 2.2, gaps


def test_k_form_vacuum_node_is_exactly_stationary():
    """At a k = 0 node of the blow-up data every k-tendency term vanishes:
    harmonic faces kill the flux, u(0) = 0 kills advection, and both the
    reaction and production carry a factor k."""
    s = _blowup_state(128)
    j0 = s.grid.zero_index
    assert s.beta.values[j0] == 0.0
    du, dw, dk = rhs_k_form(s, Params())
    assert dk.values[j0] == 0.0
    assert np.isfinite(du.values).all()
    assert np.isfinite(dw.values).all()
    assert np.isfinite(dk.values).all()


def test_beta_form_finite_at_vacuum():
    s = _blowup_state(128)
    for f in rhs_beta_form(s, Params()):
        assert np.isfinite(f.values).all()


def test_rhs_toy_parity_and_stationarity():
    g = Grid(64)
    u = np.sin(g.nodes)
    u[0] = 0.0
    u[g.zero_index] = 0.0
    u[1:g.zero_index] = -u[g.zero_index + 1:][::-1]
    gam = 1.0 - np.cos(g.nodes)
    gam[1:g.zero_index] = gam[g.zero_index + 1:][::-1]
    s = ToyState(0.0, Field(g, u), Field(g, gam))
    du, dg = rhs_toy(s, Params())
    np.testing.assert_array_equal(mirror(du).values, -du.values)
    np.testing.assert_array_equal(mirror(dg).values, dg.values)
    flat = ToyState(0.0, Field(g, np.zeros(64)), Field(g, np.ones(64)))
    du0, dg0 = rhs_toy(flat, Params())
    np.testing.assert_array_equal(du0.values, 0.0)
    np.testing.assert_array_equal(dg0.values, 0.0)
