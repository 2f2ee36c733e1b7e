"""Grid and Field invariants and the discrete calculus built on them."""

import math

import numpy as np
import pytest

from komega1d import (
    Field,
    Grid,
    deriv1,
    deriv2,
    extrema,
    flux_div,
    mirror,
    norm,
    quadrature,
    sobolev_h2_sq,
)


def test_node_layout():
    g = Grid(8)
    assert g.spacing == pytest.approx(math.pi / 4)
    assert g.zero_index == 4
    assert g.nodes[0] == pytest.approx(-math.pi)
    assert g.nodes[g.zero_index] == 0.0
    # x = +pi is the periodic image of the first node, not a node itself
    assert g.nodes[-1] == pytest.approx(math.pi - g.spacing)
    assert np.all(np.diff(g.nodes) > 0)


@pytest.mark.parametrize("bad", [7, 6, 0, -8, 2.5, True])
def test_grid_rejects_bad_sizes(bad):
    with pytest.raises(ValueError):
        Grid(bad)


def test_field_validates_shape_and_finiteness():
    g = Grid(16)
    with pytest.raises(ValueError, match="shape"):
        Field(g, np.zeros(8))
    bad = np.zeros(16)
    bad[3] = np.nan
    with pytest.raises(ValueError, match="finite"):
        Field(g, bad)
    inf = np.zeros(16)
    inf[0] = np.inf
    with pytest.raises(ValueError, match="finite"):
        Field(g, inf)


@pytest.mark.parametrize("n", [32, 64, 128])
def test_derivatives_second_order(n):
    g = Grid(n)
    f = Field(g, np.sin(g.nodes))
    e1 = np.max(np.abs(deriv1(f).values - np.cos(g.nodes)))
    e2 = np.max(np.abs(deriv2(f).values + np.sin(g.nodes)))
    h2 = g.spacing ** 2
    # centered stencils on sin: leading error h^2/6 and h^2/12
    assert e1 == pytest.approx(h2 / 6, rel=0.05)
    assert e2 == pytest.approx(h2 / 12, rel=0.05)


def test_derivative_commutes_with_translation():
    g = Grid(64)
    vals = np.exp(np.sin(g.nodes))
    shifted = np.roll(vals, 5)
    d_then_shift = np.roll(deriv1(Field(g, vals)).values, 5)
    shift_then_d = deriv1(Field(g, shifted)).values
    np.testing.assert_array_equal(d_then_shift, shift_then_d)


def test_quadrature_exact_on_low_modes():
    g = Grid(32)
    assert quadrature(Field(g, np.ones(32))) == pytest.approx(2 * math.pi, abs=1e-14)
    assert quadrature(Field(g, np.cos(g.nodes))) == pytest.approx(0.0, abs=1e-13)
    # sin^2 = (1 - cos 2x)/2 is below Nyquist, so the rule is exact
    assert quadrature(Field(g, np.sin(g.nodes) ** 2)) == pytest.approx(math.pi, abs=1e-13)


def test_flux_div_matches_stencil_and_conserves():
    g = Grid(32)
    rng = np.random.default_rng(7)
    c = Field(g, 1.0 + 0.3 * np.cos(g.nodes))
    f = Field(g, rng.standard_normal(32))
    out = flux_div(c, f).values
    cv, fv = c.values, f.values
    cface = 0.5 * (cv + np.roll(cv, -1))
    flux = cface * (np.roll(fv, -1) - fv)
    expect = (flux - np.roll(flux, 1)) / g.spacing ** 2
    np.testing.assert_allclose(out, expect, rtol=0, atol=1e-13)
    assert abs(quadrature(flux_div(c, f))) <= 1e-12


def test_flux_div_conserves_with_degenerate_coefficient():
    g = Grid(64)
    c = Field(g, np.maximum(np.cos(g.nodes), 0.0))  # vanishes on half the torus
    f = Field(g, np.sin(3 * g.nodes))
    assert abs(quadrature(flux_div(c, f))) <= 1e-12


def test_norms():
    g = Grid(128)
    f = Field(g, np.sin(g.nodes))
    assert norm(f, math.inf) == pytest.approx(1.0, abs=1e-3)
    assert norm(f, 2) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    # ||sin||_4^4 = 3*pi/4
    assert norm(f, 4) ** 4 == pytest.approx(3 * math.pi / 4, rel=1e-12)
    assert norm(f, 1) == pytest.approx(4.0, rel=1e-3)


def test_sobolev_h2_sq():
    g = Grid(256)
    f = Field(g, np.sin(g.nodes))
    # ||f||^2 + ||f''||^2 with f'' = -sin up to O(h^2)
    assert sobolev_h2_sq(f) == pytest.approx(2 * math.pi, rel=1e-3)


# Fixed deterministic corpus of zero-mean fields for inequality checks.
_CORPUS = [
    lambda x: np.sin(x),
    lambda x: np.cos(2 * x),
    lambda x: np.sin(x) + 0.5 * np.cos(3 * x),
    lambda x: np.sin(2 * x) - 0.25 * np.sin(5 * x),
    lambda x: np.cos(x) + 0.1 * np.sin(7 * x),
]


@pytest.mark.parametrize("make", _CORPUS)
def test_gradient_l4_interpolation_inequality(make):
    """||f'||_4^2 <= 3 ||f||_inf ||f''||_2.

    Follows from integrating (f')^4 by parts twice and Hoelder; discretely
    it holds up to the O(h^2) defect of the stencil identity, which the
    relative slack absorbs at this resolution.
    """
    g = Grid(128)
    f = Field(g, make(g.nodes))
    lhs = norm(deriv1(f), 4) ** 2
    rhs = 3.0 * norm(f, math.inf) * norm(deriv2(f), 2)
    assert lhs <= rhs * (1.0 + 1e-6)


def test_extrema_tie_break():
    g = Grid(8)
    v = np.array([3.0, 1.0, 2.0, 1.0, 3.0, 0.5, 0.5, 2.0])
    vmin, imin, vmax, imax = extrema(Field(g, v))
    assert (vmin, imin) == (0.5, 5)
    assert (vmax, imax) == (3.0, 0)


def test_mirror_is_exact_involution():
    g = Grid(64)
    rng = np.random.default_rng(3)
    f = Field(g, rng.standard_normal(64))
    m = mirror(f)
    np.testing.assert_array_equal(mirror(m).values, f.values)
    # self-paired nodes stay put
    assert m.values[0] == f.values[0]
    assert m.values[g.zero_index] == f.values[g.zero_index]
    # an exactly odd field mirrors to its exact negation bit for bit
    v = rng.standard_normal(64)
    v[0] = 0.0
    v[32] = 0.0
    v[1:32] = -v[33:][::-1]
    odd = Field(g, v)
    np.testing.assert_array_equal(mirror(odd).values, -odd.values)
