"""Model right-hand sides: the two-equation system and its toy reduction.

The state carries the mean velocity u, the turbulent frequency omega
(strictly positive), and beta = sqrt(k), the square root of the turbulent
kinetic energy; beta is the variable whose Lipschitz bounds control the
degenerate diffusion, so it is what states expose and diagnostics audit.
In beta variables the semi-discrete system reads

    du/dt     = -d_x(u^2/2)            + nu     * div(c d_x u)
    domega/dt = -u d_x omega           + alpha1 * div(c d_x omega) - alpha2 omega^2
    dbeta/dt  = -u d_x beta            + alpha3 * div(c d_x beta)  - beta omega / 2
                + (alpha4/2) (beta/omega) (d_x u)^2
                + alpha3 (beta/omega) (d_x beta)^2

with the shared eddy viscosity c = beta^2/omega.  All derivatives are the
centered stencils from :mod:`komega1d.grid`, and the divergence is the
conservative face form, so the discrete mean of u is conserved exactly by
the advection flux and up to roundoff overall.

``rhs_k_form`` evolves k = beta^2 directly:

    dk/dt = -u d_x k + alpha3 * div(c d_x k) - k omega + alpha4 c (d_x u)^2

In the continuum the two formulations are algebraically identical (chain
rule: the beta production alpha3 (beta/omega)(d_x beta)^2 plus beta's
divergence term recombine into the single conservative flux in k), and the
discrete forms agree to O(h^2) wherever beta is smooth.  They are not
interchangeable near a vacuum node, though.  Central differencing of the
(d_x beta)^2 production sees the O(1) jump of an under-resolved front as a
gradient of size beta/h, so the node bordering a vacuum picks up a spurious
tendency ~ alpha3 beta^3/(omega h^2): a finite-time local runaway with no
continuum counterpart.  The k form has no pointwise gradient production at
all -- its alpha3 content is one conservative flux with nonnegative face
coefficients -- so it inherits a discrete maximum principle and degrades
gracefully on steep fronts.  The time stepper therefore advances
(u, omega, k); ``rhs_beta_form`` is kept as the reference formulation for
operator-level cross-checks, with every term discretized exactly as
written (central stencils, arithmetic face averages).

Face averaging: u and omega diffuse with arithmetically averaged faces.
k's own diffusion uses the harmonic average (``_faces_degenerate``), which
agrees with the arithmetic one to O(h^2) where the coefficient is positive
and smooth but vanishes on faces touching a k = 0 node, so a vacuum node
is exactly invariant, as in the continuum.  ``rhs_toy`` is the two-field
caricature (u, gamma) with unit coefficients that shares the velocity
coupling but drops the frequency equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, _d1, _faces, _flux_div_faces

__all__ = [
    "Params",
    "State",
    "ToyState",
    "diffusivity",
    "rhs_beta_form",
    "rhs_k_form",
    "rhs_toy",
    "turbulence_quantities",
]


@dataclass
class Params:
    """Model coefficients; every one must be strictly positive."""

    nu: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    alpha4: float = 1.0
    ell_constant: float = 1.0

    def __post_init__(self) -> None:
        for name in ("nu", "alpha1", "alpha2", "alpha3", "alpha4", "ell_constant"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and np.isfinite(value)):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
            if value <= 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
            setattr(self, name, float(value))


@dataclass
class State:
    """Model state (u, omega, beta) on a common grid at one instant.

    omega must be strictly positive node-wise; construction enforces it.
    beta is allowed to be slightly negative during a run (the time stepper
    polices it against its beta_tol), so no sign check happens here.
    """

    time: float
    u: Field
    omega: Field
    beta: Field

    def __post_init__(self) -> None:
        if not (self.u.grid.n_points == self.omega.grid.n_points == self.beta.grid.n_points):
            raise ValueError("u, omega, beta must share one grid")
        if float(np.min(self.omega.values)) <= 0.0:
            raise ValueError(
                "omega must be strictly positive node-wise "
                f"(minimum {float(np.min(self.omega.values)):.6e})"
            )
        self.time = float(self.time)

    @property
    def grid(self) -> Grid:
        return self.u.grid


@dataclass
class ToyState:
    """Toy-model state (u, gamma) on a common grid."""

    time: float
    u: Field
    gamma: Field

    def __post_init__(self) -> None:
        if self.u.grid.n_points != self.gamma.grid.n_points:
            raise ValueError("u and gamma must share one grid")
        self.time = float(self.time)

    @property
    def grid(self) -> Grid:
        return self.u.grid


def diffusivity(state: State) -> Field:
    """Eddy viscosity beta^2/omega; vanishes exactly where beta does."""
    return Field(state.grid, state.beta.values ** 2 / state.omega.values)


# ---------------------------------------------------------------------------
# Array-level right-hand sides (shared by the public wrappers and the
# time stepper, which works on raw arrays for speed).
# ---------------------------------------------------------------------------

def _faces_degenerate(c: np.ndarray) -> np.ndarray:
    """Harmonic-mean face coefficients for the degenerate self-diffusion.

    For a nonnegative coefficient the harmonic mean agrees with the
    arithmetic mean to O(h^2) wherever the coefficient is smooth and
    positive, but it vanishes on any face touching a zero node.  That makes
    a vacuum node (k = 0) exactly invariant under its own diffusion, the
    way the continuum equation is: with the arithmetic mean, the face
    leaks an O(h^4) seed into the vacuum that shear production then
    amplifies exponentially, and the gradient blow-up mechanism aborts.
    """
    right = np.roll(c, -1)
    total = c + right
    return np.where(total > 0.0, 2.0 * c * right / np.maximum(total, 1e-300), 0.0)


def _rhs_arrays(u, w, b, h, p):
    c = b * b / w
    cface = _faces(c)
    d1u = _d1(u, h)
    shear = d1u * d1u
    b_over_w = b / w

    du = -_d1(0.5 * u * u, h) + p.nu * _flux_div_faces(cface, u, h)
    dw = (
        -u * _d1(w, h)
        + p.alpha1 * _flux_div_faces(cface, w, h)
        - p.alpha2 * w * w
    )
    d1b = _d1(b, h)
    db = (
        -u * d1b
        + p.alpha3 * _flux_div_faces(cface, b, h)
        - 0.5 * b * w
        + (0.5 * p.alpha4) * b_over_w * shear
        + p.alpha3 * b_over_w * (d1b * d1b)
    )
    return du, dw, db


def _rhs_k_arrays(u, w, k, h, p):
    """Tendencies of (u, omega, k); the form the time stepper integrates.

    The coefficient positions clamp k at zero so a roundoff undershoot
    cannot flip the sign of a diffusive flux or of the shear production;
    transport and the -k*omega sink act on the raw values (a negative k
    relaxes back toward zero under the sink).
    """
    c = np.maximum(k, 0.0) / w
    cface = _faces(c)
    d1u = _d1(u, h)

    du = -_d1(0.5 * u * u, h) + p.nu * _flux_div_faces(cface, u, h)
    dw = (
        -u * _d1(w, h)
        + p.alpha1 * _flux_div_faces(cface, w, h)
        - p.alpha2 * w * w
    )
    dk = (
        -u * _d1(k, h)
        + p.alpha3 * _flux_div_faces(_faces_degenerate(c), k, h)
        - k * w
        + p.alpha4 * c * (d1u * d1u)
    )
    return du, dw, dk


def _rhs_toy_arrays(u, g, h):
    d1u = _d1(u, h)
    gface = _faces(g)
    du = -_d1(0.5 * u * u, h) + _flux_div_faces(gface, u, h)
    dg = -u * _d1(g, h) + _flux_div_faces(gface, g, h) + g * (d1u * d1u)
    return du, dg


# ---------------------------------------------------------------------------
# Public wrappers.
# ---------------------------------------------------------------------------

def rhs_beta_form(state: State, params: Params) -> tuple[Field, Field, Field]:
    """Tendencies (du, domega, dbeta) of the beta-form system."""
    g = state.grid
    du, dw, db = _rhs_arrays(
        state.u.values, state.omega.values, state.beta.values, g.spacing, params
    )
    return Field(g, du), Field(g, dw), Field(g, db)


def rhs_k_form(state: State, params: Params) -> tuple[Field, Field, Field]:
    """Tendencies (du, domega, dk) with k = beta^2 evolved directly.

    This is the formulation the time stepper integrates.  dk agrees with
    2*beta*dbeta from :func:`rhs_beta_form` to O(h^2) wherever beta is
    smooth: the identity is exact in the continuum, where
    d_x(c d_x k) = 2 beta d_x(c d_x beta) + 2 (beta^2/omega)(d_x beta)^2
    for c = k/omega, and discretely the face averages differ at second
    order.  See the module docstring for why the forms are not
    interchangeable next to a vacuum node.
    """
    g = state.grid
    b = state.beta.values
    du, dw, dk = _rhs_k_arrays(
        state.u.values, state.omega.values, b * b, g.spacing, params
    )
    return Field(g, du), Field(g, dw), Field(g, dk)


def rhs_toy(state: ToyState, params: Params) -> tuple[Field, Field]:
    """Tendencies (du, dgamma) of the toy system (unit coefficients).

    ``params`` is accepted for signature uniformity but unused: the toy
    model fixes every coefficient to one.
    """
    del params
    g = state.grid
    du, dg = _rhs_toy_arrays(state.u.values, state.gamma.values, g.spacing)
    return Field(g, du), Field(g, dg)


def turbulence_quantities(state: State, params: Params) -> tuple[Field, Field]:
    """Derived fields (dissipation rate, mixing length).

    epsilon = beta^2 * omega = k * omega and ell = ell_constant * beta/omega.
    """
    g = state.grid
    b = state.beta.values
    w = state.omega.values
    eps = Field(g, b * b * w)
    ell = Field(g, params.ell_constant * b / w)
    return eps, ell
