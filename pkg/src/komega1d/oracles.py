"""Closed-form references the simulations are audited against.

Three independent sources of truth live here:

* the explicit decay of spatially uniform data, where the PDE system
  degenerates to ODEs solvable by separation of variables;
* the envelope functions lambda(t) and mu(t) bounding omega and k under the
  maximum principle;
* the scalar Riccati equation xi' = -xi^2 + a(t) xi obeyed by the velocity
  gradient at the symmetry node, together with its a == 0 comparison
  solution, which upper-bounds xi whenever a >= 0 and xi0 < 0 and diverges
  at t = 1/|xi0|.

None of these call the PDE code; that independence is the point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Params

__all__ = [
    "OdeEnvelope",
    "lambda_exact",
    "mu_exact",
    "uniform_exact",
    "riccati_bound",
    "riccati_solve",
    "RICCATI_HALT",
]

# riccati_solve stops once |xi| crosses this; later samples are NaN.
RICCATI_HALT = 1e9


@dataclass
class OdeEnvelope:
    """Initial data for the envelope ODEs.

    lambda0 seeds lambda' = -alpha2 lambda^2 (an omega bound; use the
    initial max or min of omega as appropriate), mu0 seeds mu' = -lambda mu
    (the lower k envelope, fed by the upper lambda).
    """

    lambda0: float
    mu0: float
    alpha2: float

    def __post_init__(self) -> None:
        if not self.lambda0 > 0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")
        if self.mu0 < 0:
            raise ValueError(f"mu0 must be nonnegative, got {self.mu0}")
        if not self.alpha2 > 0:
            raise ValueError(f"alpha2 must be positive, got {self.alpha2}")


def lambda_exact(env: OdeEnvelope, t):
    """lambda(t) = lambda0 / (lambda0 alpha2 t + 1), separation of variables."""
    t = np.asarray(t, dtype=float)
    out = env.lambda0 / (env.lambda0 * env.alpha2 * t + 1.0)
    return float(out) if out.ndim == 0 else out


def mu_exact(env: OdeEnvelope, t):
    """mu(t) = mu0 / (lambda0 alpha2 t + 1)^(1/alpha2).

    Integrating mu'/mu = -lambda with lambda from :func:`lambda_exact`
    gives log mu = -log(lambda0 alpha2 t + 1)/alpha2 plus a constant.
    """
    t = np.asarray(t, dtype=float)
    out = env.mu0 / (env.lambda0 * env.alpha2 * t + 1.0) ** (1.0 / env.alpha2)
    return float(out) if out.ndim == 0 else out


def uniform_exact(
    u0: float, omega0: float, k0: float, p: Params, t
) -> tuple[float, float, float]:
    """Exact (u, omega, k) at time t for spatially uniform initial data.

    With no gradients every transport term drops and the system reduces to
    u' = 0, omega' = -alpha2 omega^2, k' = -k omega, hence u stays put,
    omega follows lambda_exact seeded at omega0, and k follows mu_exact.
    """
    if not omega0 > 0:
        raise ValueError(f"omega0 must be positive, got {omega0}")
    if k0 < 0:
        raise ValueError(f"k0 must be nonnegative, got {k0}")
    env = OdeEnvelope(lambda0=omega0, mu0=k0, alpha2=p.alpha2)
    return float(u0), lambda_exact(env, t), mu_exact(env, t)


def riccati_bound(xi0: float, t):
    """Comparison solution xi0 / (1 + xi0 t) of xi' = -xi^2, for xi0 < 0.

    Any solution of xi' = -xi^2 + a xi with a >= 0 and the same (negative)
    initial value stays below this curve, which diverges to -inf as
    t -> 1/|xi0|.  Requesting t at or beyond the divergence time is a
    domain error rather than a number.
    """
    if not xi0 < 0:
        raise ValueError(f"riccati_bound needs xi0 < 0, got {xi0}")
    t_arr = np.asarray(t, dtype=float)
    horizon = 1.0 / abs(xi0)
    if np.any(t_arr >= horizon):
        raise ValueError(
            f"riccati_bound is only defined for t < 1/|xi0| = {horizon:.17g}"
        )
    if np.any(t_arr < 0):
        raise ValueError("riccati_bound is only defined for t >= 0")
    out = xi0 / (1.0 + xi0 * t_arr)
    return float(out) if out.ndim == 0 else out


def riccati_solve(xi0: float, t_samples, a_samples) -> np.ndarray:
    """Integrate xi' = -xi^2 + a(t) xi through the given sample grid.

    Classical RK4 with one step per sample interval; a(t) is evaluated by
    linear interpolation between samples (so the half-step stage uses the
    interval midpoint value).  Integration halts once |xi| reaches
    RICCATI_HALT; remaining entries are NaN.  Returns xi at t_samples,
    with xi[0] = xi0.

    a_samples must be nonnegative: the audited comparison principle is
    stated for a >= 0, and feeding it anything else would silently change
    what is being tested.
    """
    t = np.asarray(t_samples, dtype=float)
    a = np.asarray(a_samples, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ValueError("t_samples must be a nonempty 1-D array")
    if a.shape != t.shape:
        raise ValueError(
            f"a_samples shape {a.shape} does not match t_samples shape {t.shape}"
        )
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("t_samples must be strictly increasing")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(a)):
        raise ValueError("t_samples and a_samples must be finite")
    if np.any(a < 0):
        raise ValueError("a_samples must be nonnegative")

    xi = np.full(t.shape, np.nan)
    xi[0] = float(xi0)
    x = float(xi0)
    for i in range(t.size - 1):
        dt = t[i + 1] - t[i]
        a0 = a[i]
        am = 0.5 * (a[i] + a[i + 1])
        a1 = a[i + 1]

        def f(val, acoef):
            return -val * val + acoef * val

        k1 = f(x, a0)
        k2 = f(x + 0.5 * dt * k1, am)
        k3 = f(x + 0.5 * dt * k2, am)
        k4 = f(x + dt * k3, a1)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(x) or abs(x) >= RICCATI_HALT:
            break
        xi[i + 1] = x
    return xi
