"""Closed-form oracle tests with frozen expected values.

Every expected number here was computed independently (by hand or with
a symbolic tool) and is written as a literal on purpose: these tests must
not share code with the implementation they check.
"""

import math

import numpy as np
import pytest

from komega1d import (
    OdeEnvelope,
    Params,
    lambda_exact,
    mu_exact,
    riccati_bound,
    riccati_solve,
    uniform_exact,
)


def test_lambda_exact_frozen_values():
    # lambda0/(lambda0*alpha2*t + 1) at hand-picked points
    assert lambda_exact(OdeEnvelope(1.0, 0.0, 2.0), 1.0) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert lambda_exact(OdeEnvelope(2.0, 0.0, 1.0), 0.5) == pytest.approx(1.0, abs=1e-15)
    assert lambda_exact(OdeEnvelope(3.0, 0.0, 0.5), 4.0) == pytest.approx(
        0.42857142857142855, abs=1e-15
    )
    assert lambda_exact(OdeEnvelope(1.0, 0.0, 1.0), 0.0) == 1.0


def test_mu_exact_frozen_values():
    # mu0/(lambda0*alpha2*t + 1)^(1/alpha2)
    assert mu_exact(OdeEnvelope(1.0, 1.0, 2.0), 1.0) == pytest.approx(
        0.5773502691896258, abs=1e-15
    )
    assert mu_exact(OdeEnvelope(1.0, 1.0, 1.0), 1.0) == pytest.approx(0.5, abs=1e-15)
    # alpha2 = 1/2 makes the decay quadratic: 1/(1 + t/2)^2 at t = 2 is 1/4
    assert mu_exact(OdeEnvelope(1.0, 1.0, 0.5), 2.0) == pytest.approx(0.25, abs=1e-15)
    # vectorized evaluation
    out = mu_exact(OdeEnvelope(1.0, 1.0, 1.0), np.array([0.0, 1.0, 3.0]))
    np.testing.assert_allclose(out, [1.0, 0.5, 0.25], rtol=1e-14)


def test_uniform_exact_matches_components():
    p = Params(alpha2=2.0)
    u, lam, mu = uniform_exact(0.3, 1.0, 1.0, p, 1.0)
    assert u == 0.3
    assert lam == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert mu == pytest.approx(0.5773502691896258, abs=1e-15)


def test_ode_envelope_validation():
    OdeEnvelope(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        OdeEnvelope(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        OdeEnvelope(1.0, -1e-3, 1.0)
    with pytest.raises(ValueError):
        OdeEnvelope(1.0, 1.0, 0.0)


def test_riccati_bound_values_and_domain():
    assert riccati_bound(-1.0, 0.0) == -1.0
    assert riccati_bound(-1.0, 0.5) == pytest.approx(-2.0, abs=1e-15)
    assert riccati_bound(-2.0, 0.25) == pytest.approx(-4.0, abs=1e-15)
    out = riccati_bound(-1.0, np.array([0.0, 0.9]))
    np.testing.assert_allclose(out, [-1.0, -10.0], rtol=1e-12)
    with pytest.raises(ValueError):
        riccati_bound(1.0, 0.1)
    with pytest.raises(ValueError):
        riccati_bound(-1.0, 1.0)  # divergence time itself
    with pytest.raises(ValueError):
        riccati_bound(-1.0, -0.1)
    with pytest.raises(ValueError):
        riccati_bound(-2.0, np.array([0.1, 0.6]))  # horizon is 1/2


def test_riccati_solve_matches_bound_when_forcing_vanishes():
    t = np.linspace(0.0, 0.8, 801)
    xi = riccati_solve(-1.0, t, np.zeros_like(t))
    np.testing.assert_allclose(xi, riccati_bound(-1.0, t), rtol=1e-9)


def test_riccati_solve_with_constant_forcing():
    # xi' = -xi^2 + a*xi with a = 1, xi0 = -1 has the closed form
    # xi(t) = -e^t / (2 - e^t), valid until e^t = 2.
    t = np.linspace(0.0, 0.5, 501)
    xi = riccati_solve(-1.0, t, np.ones_like(t))
    exact = -np.exp(t) / (2.0 - np.exp(t))
    np.testing.assert_allclose(xi, exact, rtol=1e-8)


def test_riccati_solve_halts_after_divergence():
    t = np.linspace(0.0, 0.2, 2001)
    xi = riccati_solve(-10.0, t, np.zeros_like(t))
    # the bound diverges at t = 0.1; past it the solver reports NaN
    assert np.isnan(xi[-1])
    assert np.isfinite(xi[t < 0.099]).all()


def test_riccati_solve_input_validation():
    t = np.array([0.0, 0.1, 0.2])
    a = np.zeros(3)
    with pytest.raises(ValueError):
        riccati_solve(-1.0, t, np.zeros(4))
    with pytest.raises(ValueError):
        riccati_solve(-1.0, np.array([0.0, 0.2, 0.1]), a)
    with pytest.raises(ValueError):
        riccati_solve(-1.0, np.array([]), np.array([]))
    with pytest.raises(ValueError):
        riccati_solve(-1.0, t, np.array([0.0, math.nan, 0.0]))
    with pytest.raises(ValueError):
        riccati_solve(-1.0, t, np.array([0.0, -1.0, 0.0]))
