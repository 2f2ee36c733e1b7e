"""Periodic grid and second-order finite-difference operations.

The domain is the torus [-pi, pi) sampled at n equispaced nodes.  Everything
downstream (model right-hand sides, time stepping, diagnostics) is built from
the stencils defined here: centered first and second differences, a
conservative flux divergence with arithmetic-mean face coefficients, and
rectangle-rule reductions.

Two deliberate choices deserve a note:

* Nodes are placed at ``x_j = (j - n/2) * h`` rather than the algebraically
  equal ``-pi + j*h``.  Both describe the same points, but the first form
  pairs them so that ``nodes[n/2 + m] == -nodes[n/2 - m]`` holds bit-exactly,
  which lets parity-preservation checks assert equality instead of closeness.
* Reductions (quadrature, norms) sum strictly left to right via
  ``np.cumsum``, so that repeated runs produce bit-identical numbers
  regardless of how numpy's pairwise ``sum`` happens to group terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "TWO_PI",
    "Grid",
    "Field",
    "deriv1",
    "deriv2",
    "flux_div",
    "quadrature",
    "norm",
    "sobolev_h2_sq",
    "extrema",
    "mirror",
]


@dataclass
class Grid:
    """Uniform periodic grid on the torus [-pi, pi).

    Parameters
    ----------
    n_points : int
        Number of nodes.  Must be even, so that x = 0 is a node and the
        mirror map j -> n - j is an involution on indices, and at least 8,
        so that the stencils and refinement studies are meaningful.

    Attributes
    ----------
    spacing : float
        Node spacing h = 2*pi/n.
    zero_index : int
        Index of the node at x = 0 (exactly n/2).
    nodes : numpy.ndarray
        Node coordinates x_j = (j - n/2) * h.
    """

    n_points: int
    spacing: float = field(init=False)
    zero_index: int = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ValueError(f"n_points must be an integer, got {n!r}")
        if n < 8 or n % 2:
            raise ValueError(f"n_points must be even and >= 8, got {n}")
        self.n_points = int(n)
        self.spacing = TWO_PI / self.n_points
        self.zero_index = self.n_points // 2
        self.nodes = (np.arange(self.n_points) - self.zero_index) * self.spacing


@dataclass
class Field:
    """Scalar grid function with finite values.

    Construction validates the shape against the grid and rejects NaN/inf
    once; the arithmetic done on ``values`` afterwards is plain numpy.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"field shape {v.shape} does not match grid with "
                f"{self.grid.n_points} nodes"
            )
        if not np.isfinite(v).all():
            raise ValueError("field values must be finite")
        self.values = v


# ---------------------------------------------------------------------------
# Array-level kernels.  These are the single source of truth for the stencils;
# the model and the diagnostics import them to stay scheme-consistent with
# the public operations below.
# ---------------------------------------------------------------------------

def _lsum(v: np.ndarray) -> float:
    # Strict left-to-right accumulation at C speed.
    return float(np.cumsum(v)[-1])


def _d1(v: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * h)


def _d2(v: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / (h * h)


def _faces(c: np.ndarray) -> np.ndarray:
    # c_{j+1/2} = (c_j + c_{j+1}) / 2, stored at index j.
    return 0.5 * (c + np.roll(c, -1))


def _flux_div_faces(cface: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    # [c_{j+1/2}(v_{j+1}-v_j) - c_{j-1/2}(v_j-v_{j-1})] / h^2.  The flux
    # F_{j+1/2} = cface_j * (v_{j+1}-v_j) telescopes under summation, which
    # is what makes the discrete integral of any flux divergence vanish.
    flux = cface * (np.roll(v, -1) - v)
    return (flux - np.roll(flux, 1)) / (h * h)


def _flux_div(c: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    return _flux_div_faces(_faces(c), v, h)


def _mirror(v: np.ndarray) -> np.ndarray:
    # (Mv)_j = v_{(n-j) mod n}, the reflection x -> -x on node values.
    return np.roll(v[::-1], 1)


def _require_same_grid(a: Field, b: Field) -> None:
    if a.grid.n_points != b.grid.n_points:
        raise ValueError(
            f"fields live on different grids ({a.grid.n_points} vs "
            f"{b.grid.n_points} nodes)"
        )


# ---------------------------------------------------------------------------
# Public operations on fields.
# ---------------------------------------------------------------------------

def deriv1(f: Field) -> Field:
    """Centered first derivative, (f_{j+1} - f_{j-1}) / (2h)."""
    return Field(f.grid, _d1(f.values, f.grid.spacing))


def deriv2(f: Field) -> Field:
    """Centered second derivative, (f_{j+1} - 2 f_j + f_{j-1}) / h^2."""
    return Field(f.grid, _d2(f.values, f.grid.spacing))


def flux_div(coef: Field, f: Field) -> Field:
    """Conservative divergence of coef * d_x f with arithmetic-mean faces.

    Returns the field whose j-th value is

        [c_{j+1/2}(f_{j+1}-f_j) - c_{j-1/2}(f_j-f_{j-1})] / h^2,

    with c_{j+1/2} = (c_j + c_{j+1})/2.  ``quadrature`` of the result
    vanishes up to roundoff for any coefficient, degenerate or not.
    """
    _require_same_grid(coef, f)
    return Field(f.grid, _flux_div(coef.values, f.values, f.grid.spacing))


def quadrature(f: Field) -> float:
    """Rectangle rule h * sum(f), exact for trig polynomials below Nyquist."""
    return f.grid.spacing * _lsum(f.values)


def norm(f: Field, p: float) -> float:
    """Discrete L^p norm for p in {1, 2, 3, 4} or the sup norm for p = inf.

    For finite p this is (h * sum |f|^p)^(1/p); reductions are
    left-to-right for determinism.
    """
    v = f.values
    if p == math.inf:
        return float(np.max(np.abs(v)))
    if p not in (1, 2, 3, 4):
        raise ValueError(f"norm order must be 1, 2, 3, 4 or inf, got {p!r}")
    p = int(p)
    if p == 1:
        s = _lsum(np.abs(v))
    elif p == 2:
        s = _lsum(v * v)
    else:
        s = _lsum(np.abs(v) ** p)
    return (f.grid.spacing * s) ** (1.0 / p)


def sobolev_h2_sq(f: Field) -> float:
    """Squared discrete H^2-type norm, ||f||_2^2 + ||deriv2 f||_2^2."""
    n0 = norm(f, 2)
    n2 = norm(deriv2(f), 2)
    return n0 * n0 + n2 * n2


def extrema(f: Field) -> tuple[float, int, float, int]:
    """Return (min, argmin, max, argmax) with smallest-index tie-break."""
    v = f.values
    imin = int(np.argmin(v))
    imax = int(np.argmax(v))
    return float(v[imin]), imin, float(v[imax]), imax


def mirror(f: Field) -> Field:
    """Reflected field, (Mf)(x_j) = f(-x_j); exact on this node layout."""
    return Field(f.grid, _mirror(f.values))
