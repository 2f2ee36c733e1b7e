"""SSP-RK3 time stepping with adaptive steps and failure detection.

The integrator advances the conservative energy form: the marched arrays
are (u, omega, k) with k = beta^2, using ``model._rhs_k_arrays``.  States
handed to observers and returned in reports carry beta = sqrt(max(k, 0))
as usual; the clamp only ever removes roundoff-scale undershoots, because
a genuinely negative k trips a detector first.  Marching k rather than
beta is what keeps a vacuum node honest: k's diffusion is a single
conservative flux with a discrete maximum principle, while the beta-form
production (d_x beta)^2, centrally differenced, misreads the one-cell jump
at a vacuum boundary as an O(1/h) gradient and ignites a spurious local
runaway (see the model module docstring).

The integrator never clamps fields beyond that materialization.  A run
ends in exactly one of three states:

* ``completed``       -- reached t_final;
* ``blowup_detected`` -- the velocity gradient crossed the configured
  threshold, or the stable step collapsed below dt_min while the gradient
  had grown monotonically over the trailing 100 steps;
* ``scheme_failure``  -- non-finite values, omega under its floor, k
  meaningfully negative, or a step collapse without sustained gradient
  growth.

The distinction matters: the blow-up experiments treat detector firing as
the measured event, so a dying run must say why it died.

The step is the Shu-Osher form of third-order strong-stability-preserving
Runge-Kutta:

    s1 = y + dt f(y)
    s2 = 3/4 y + 1/4 (s1 + dt f(s1))
    y+ = 1/3 y + 2/3 (s2 + dt f(s2))

Each stage is a forward-Euler step, so monotonicity properties that hold
for forward Euler under the advertised CFL numbers carry over.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .grid import Field, _d1, _mirror
from .model import Params, State, ToyState, _rhs_k_arrays, _rhs_toy_arrays

__all__ = [
    "COMPLETED",
    "BLOWUP_DETECTED",
    "SCHEME_FAILURE",
    "StepControl",
    "RunReport",
    "stable_dt",
    "stable_dt_toy",
    "step",
    "step_toy",
    "integrate",
    "integrate_toy",
    "integrate_pair",
]

COMPLETED = "completed"
BLOWUP_DETECTED = "blowup_detected"
SCHEME_FAILURE = "scheme_failure"

# Floors guarding the CFL denominators against division by zero on
# quiescent states (u identically zero, beta identically zero).
_SPEED_FLOOR = 1e-14
_COEF_FLOOR = 1e-14

# A stable step is "monotone growth" evidence for the blow-up verdict only
# if the gradient rose over this many trailing accepted steps.
_GROWTH_WINDOW = 100


@dataclass
class StepControl:
    """Step-size policy and detector thresholds.

    cfl_diffusive is normalized so that 1.0 is the forward-Euler
    monotonicity limit dt = h^2 / (2 max c); values in (0, 1] keep each
    SSP stage inside that limit.
    """

    cfl_advective: float = 0.4
    cfl_diffusive: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 1e-4
    blowup_grad_threshold: float = 1e6
    omega_floor: float = 1e-10
    beta_tol: float = 1e-8

    def __post_init__(self) -> None:
        for name in (
            "cfl_advective",
            "cfl_diffusive",
            "dt_min",
            "dt_max",
            "blowup_grad_threshold",
            "omega_floor",
            "beta_tol",
        ):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
            setattr(self, name, float(value))
        if not self.dt_min < self.dt_max:
            raise ValueError(
                f"dt_min must be smaller than dt_max "
                f"(got dt_min={self.dt_min}, dt_max={self.dt_max})"
            )
        if self.cfl_advective > 1.0 or self.cfl_diffusive > 1.0:
            raise ValueError("CFL numbers above 1.0 exceed the monotone-step limit")


@dataclass
class RunReport:
    """Outcome of one integration."""

    status: str
    t_end: float
    reason: str
    final_state: object
    steps_taken: int


def stable_dt(state: State, params: Params, control: StepControl) -> float:
    """Largest admissible step from CFL limits and dt_max.

    Advective limit cfl_advective * h / max(||u||_inf, floor); diffusive
    limit cfl_diffusive * h^2 / (2 * max_coef) with max_coef the largest
    diffusion multiple max(nu, alpha1, alpha3) * max(beta^2/omega), floored
    away from zero.
    """
    h = state.grid.spacing
    umax = max(float(np.max(np.abs(state.u.values))), _SPEED_FLOOR)
    dt_adv = control.cfl_advective * h / umax
    b = state.beta.values
    cmax = float(np.max(b * b / state.omega.values))
    coef = max(params.nu, params.alpha1, params.alpha3) * cmax
    dt_diff = control.cfl_diffusive * h * h / (2.0 * max(coef, _COEF_FLOOR))
    return min(dt_adv, dt_diff, control.dt_max)


def stable_dt_toy(state: ToyState, params: Params, control: StepControl) -> float:
    """Toy-model analogue of :func:`stable_dt` (diffusivity is gamma itself)."""
    del params
    h = state.grid.spacing
    umax = max(float(np.max(np.abs(state.u.values))), _SPEED_FLOOR)
    dt_adv = control.cfl_advective * h / umax
    cmax = max(float(np.max(state.gamma.values)), _COEF_FLOOR)
    dt_diff = control.cfl_diffusive * h * h / (2.0 * cmax)
    return min(dt_adv, dt_diff, control.dt_max)


def _advance_k(u, w, k, h, p, dt):
    du, dw, dk = _rhs_k_arrays(u, w, k, h, p)
    u1 = u + dt * du
    w1 = w + dt * dw
    k1 = k + dt * dk
    du, dw, dk = _rhs_k_arrays(u1, w1, k1, h, p)
    u2 = 0.75 * u + 0.25 * (u1 + dt * du)
    w2 = 0.75 * w + 0.25 * (w1 + dt * dw)
    k2 = 0.75 * k + 0.25 * (k1 + dt * dk)
    du, dw, dk = _rhs_k_arrays(u2, w2, k2, h, p)
    third = 1.0 / 3.0
    return (
        third * u + (2.0 * third) * (u2 + dt * du),
        third * w + (2.0 * third) * (w2 + dt * dw),
        third * k + (2.0 * third) * (k2 + dt * dk),
    )


def _advance_toy(u, g, h, dt):
    du, dg = _rhs_toy_arrays(u, g, h)
    u1 = u + dt * du
    g1 = g + dt * dg
    du, dg = _rhs_toy_arrays(u1, g1, h)
    u2 = 0.75 * u + 0.25 * (u1 + dt * du)
    g2 = 0.75 * g + 0.25 * (g1 + dt * dg)
    du, dg = _rhs_toy_arrays(u2, g2, h)
    third = 1.0 / 3.0
    return third * u + (2.0 * third) * (u2 + dt * du), third * g + (2.0 * third) * (g2 + dt * dg)


def step(state: State, params: Params, dt: float) -> State:
    """One SSP-RK3 step of size dt.  No detectors; see :func:`integrate`."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    g = state.grid
    b = state.beta.values
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u, w, k = _advance_k(
            state.u.values, state.omega.values, b * b, g.spacing, params, dt
        )
    return State(
        state.time + dt,
        Field(g, u),
        Field(g, w),
        Field(g, np.sqrt(np.maximum(k, 0.0))),
    )


def step_toy(state: ToyState, params: Params, dt: float) -> ToyState:
    """One SSP-RK3 step of the toy system."""
    del params
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    g = state.grid
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u, gam = _advance_toy(state.u.values, state.gamma.values, g.spacing, dt)
    return ToyState(state.time + dt, Field(g, u), Field(g, gam))


def _signed_grad_extremum(d1u: np.ndarray) -> tuple[float, float, int]:
    """(|d_x u| max, its signed value, node index), smallest index on ties."""
    j = int(np.argmax(np.abs(d1u)))
    return float(abs(d1u[j])), float(d1u[j]), j


def _collapse_report(t, dt_stable, control, grad_hist, state, steps):
    grew = (
        len(grad_hist) == _GROWTH_WINDOW
        and all(b >= a for a, b in zip(grad_hist, list(grad_hist)[1:]))
        and grad_hist[-1] > grad_hist[0]
    )
    if grew:
        return RunReport(
            BLOWUP_DETECTED,
            t,
            f"stable dt {dt_stable:.6e} fell below dt_min {control.dt_min:.6e} "
            f"after monotone gradient growth over the trailing {_GROWTH_WINDOW} steps "
            f"(|d_x u| reached {grad_hist[-1]:.6g})",
            state,
            steps,
        )
    return RunReport(
        SCHEME_FAILURE,
        t,
        f"stable dt {dt_stable:.6e} fell below dt_min {control.dt_min:.6e} "
        "without sustained gradient growth",
        state,
        steps,
    )


def integrate(
    state: State,
    params: Params,
    control: StepControl,
    t_final: float,
    observer=None,
    symmetry_projection: bool = False,
) -> RunReport:
    """March the system from ``state.time`` to ``t_final``.

    After every accepted step the detectors run in this order: finiteness,
    gradient threshold, omega floor, beta tolerance.  The observer, if any,
    is called as ``observer(state, dt)`` for each accepted state (the
    initial state is not re-announced; callers that need a t=0 record take
    it from ``state`` directly).  The final partial step is clipped to land
    exactly on t_final; the dt_min collapse detector looks at the unclipped
    stable step, so a tiny landing step is not a failure.

    With ``symmetry_projection`` (off by default) each accepted state is
    projected onto the odd-u / even-omega / even-beta subspace before the
    detectors see it; useful for separating roundoff symmetry drift from
    genuine dynamics.
    """
    if t_final <= state.time:
        return RunReport(
            COMPLETED,
            state.time,
            "t_final does not exceed the initial time; nothing to do",
            state,
            0,
        )

    g = state.grid
    h = g.spacing
    t = state.time
    cur = state
    u = state.u.values
    w = state.omega.values
    b = state.beta.values
    k = b * b
    steps = 0
    grad_hist: deque = deque(maxlen=_GROWTH_WINDOW)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while True:
            dt_stable = stable_dt(cur, params, control)
            if dt_stable < control.dt_min:
                return _collapse_report(t, dt_stable, control, grad_hist, cur, steps)
            remaining = t_final - t
            clipped = dt_stable >= remaining
            dt = remaining if clipped else dt_stable

            nu, nw, nk = _advance_k(u, w, k, h, params, dt)
            if symmetry_projection:
                nu = 0.5 * (nu - _mirror(nu))
                nw = 0.5 * (nw + _mirror(nw))
                nk = 0.5 * (nk + _mirror(nk))
            t_new = t_final if clipped else t + dt

            if not (
                np.isfinite(nu).all() and np.isfinite(nw).all() and np.isfinite(nk).all()
            ):
                return RunReport(
                    SCHEME_FAILURE,
                    t,
                    f"non-finite values produced advancing from t = {t:.17g}",
                    cur,
                    steps,
                )

            d1u = _d1(nu, h)
            gmax, gsigned, gnode = _signed_grad_extremum(d1u)
            wmin = float(np.min(nw))
            kmin = float(np.min(nk))
            # k = (beta + delta)^2 with |delta| <= beta_tol can undershoot
            # zero by at most beta_tol * (2 sup beta + beta_tol); anything
            # deeper is a genuine scheme failure, not tolerated roundoff.
            bsup = float(np.sqrt(max(float(np.max(nk)), 0.0)))
            ktol = control.beta_tol * (2.0 * bsup + control.beta_tol)
            admissible = wmin >= control.omega_floor and kmin >= -ktol

            if gmax > control.blowup_grad_threshold:
                # Blow-up verdict wins over admissibility bookkeeping; if the
                # same step also wrecked admissibility, report the last good
                # state instead of an inadmissible one.
                if admissible:
                    nb = np.sqrt(np.maximum(nk, 0.0))
                    final = State(t_new, Field(g, nu), Field(g, nw), Field(g, nb))
                    steps += 1
                    grad_hist.append(gmax)
                    if observer is not None:
                        observer(final, dt)
                else:
                    final = cur
                    t_new = t
                return RunReport(
                    BLOWUP_DETECTED,
                    t_new,
                    f"velocity gradient magnitude {gmax:.6g} exceeded "
                    f"blowup_grad_threshold {control.blowup_grad_threshold:.6g}; "
                    f"signed extremum {gsigned:.6g} at x = {g.nodes[gnode]:.6g} "
                    f"(node {gnode})",
                    final,
                    steps,
                )
            if wmin < control.omega_floor:
                return RunReport(
                    SCHEME_FAILURE,
                    t,
                    f"omega minimum {wmin:.6e} fell below omega_floor = "
                    f"{control.omega_floor:.6e} advancing to t = {t_new:.17g}",
                    cur,
                    steps,
                )
            if kmin < -ktol:
                return RunReport(
                    SCHEME_FAILURE,
                    t,
                    f"k minimum {kmin:.6e} fell below the beta_tol-equivalent "
                    f"tolerance {-ktol:.6e} advancing to t = {t_new:.17g}",
                    cur,
                    steps,
                )

            u, w, k = nu, nw, nk
            b = np.sqrt(np.maximum(k, 0.0))
            t = t_new
            cur = State(t, Field(g, u), Field(g, w), Field(g, b))
            steps += 1
            grad_hist.append(gmax)
            if observer is not None:
                observer(cur, dt)
            if clipped:
                return RunReport(
                    COMPLETED, t, f"reached t_final = {t_final:.17g}", cur, steps
                )


def integrate_toy(
    state: ToyState,
    params: Params,
    control: StepControl,
    t_final: float,
    observer=None,
    symmetry_projection: bool = False,
) -> RunReport:
    """Toy-model analogue of :func:`integrate`.

    gamma plays beta's role in the admissibility check (min gamma must stay
    above -beta_tol); there is no omega and hence no floor check.
    """
    if t_final <= state.time:
        return RunReport(
            COMPLETED,
            state.time,
            "t_final does not exceed the initial time; nothing to do",
            state,
            0,
        )

    g = state.grid
    h = g.spacing
    t = state.time
    cur = state
    u = state.u.values
    gam = state.gamma.values
    steps = 0
    grad_hist: deque = deque(maxlen=_GROWTH_WINDOW)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while True:
            dt_stable = stable_dt_toy(cur, params, control)
            if dt_stable < control.dt_min:
                return _collapse_report(t, dt_stable, control, grad_hist, cur, steps)
            remaining = t_final - t
            clipped = dt_stable >= remaining
            dt = remaining if clipped else dt_stable

            nu, ng = _advance_toy(u, gam, h, dt)
            if symmetry_projection:
                nu = 0.5 * (nu - _mirror(nu))
                ng = 0.5 * (ng + _mirror(ng))
            t_new = t_final if clipped else t + dt

            if not (np.isfinite(nu).all() and np.isfinite(ng).all()):
                return RunReport(
                    SCHEME_FAILURE,
                    t,
                    f"non-finite values produced advancing from t = {t:.17g}",
                    cur,
                    steps,
                )
            d1u = _d1(nu, h)
            gmax, gsigned, gnode = _signed_grad_extremum(d1u)
            gmin = float(np.min(ng))
            if gmax > control.blowup_grad_threshold and gmin >= -control.beta_tol:
                final = ToyState(t_new, Field(g, nu), Field(g, ng))
                steps += 1
                if observer is not None:
                    observer(final, dt)
                return RunReport(
                    BLOWUP_DETECTED,
                    t_new,
                    f"velocity gradient magnitude {gmax:.6g} exceeded "
                    f"blowup_grad_threshold {control.blowup_grad_threshold:.6g}; "
                    f"signed extremum {gsigned:.6g} at x = {g.nodes[gnode]:.6g} "
                    f"(node {gnode})",
                    final,
                    steps,
                )
            if gmin < -control.beta_tol:
                return RunReport(
                    SCHEME_FAILURE,
                    t,
                    f"gamma minimum {gmin:.6e} fell below -beta_tol = "
                    f"{-control.beta_tol:.6e} advancing to t = {t_new:.17g}",
                    cur,
                    steps,
                )

            u, gam = nu, ng
            t = t_new
            cur = ToyState(t, Field(g, u), Field(g, gam))
            steps += 1
            grad_hist.append(gmax)
            if observer is not None:
                observer(cur, dt)
            if clipped:
                return RunReport(
                    COMPLETED, t, f"reached t_final = {t_final:.17g}", cur, steps
                )


def integrate_pair(
    state_a: State,
    state_b: State,
    params: Params,
    control: StepControl,
    t_final: float,
    observer=None,
) -> tuple[RunReport, RunReport]:
    """Advance two states in lockstep with a shared step size.

    Used by the stability studies: both members take dt = min of their
    stable steps, so their trajectories stay sampled at identical times and
    pairwise diagnostics need no interpolation.  The observer is called as
    ``observer(state_a, state_b, dt)``.  If either member trips a detector,
    both runs end at the last common time; each report carries its own
    status.
    """
    if state_a.grid.n_points != state_b.grid.n_points:
        raise ValueError("paired states must share one grid")
    if state_a.time != state_b.time:
        raise ValueError("paired states must start at the same time")

    # The loop below is integrate() with two copies of the state advanced
    # per iteration under the shared step.
    g = state_a.grid
    h = g.spacing
    t = state_a.time
    if t_final <= t:
        r = RunReport(COMPLETED, t, "t_final does not exceed the initial time; nothing to do", state_a, 0)
        s = RunReport(COMPLETED, t, r.reason, state_b, 0)
        return r, s

    ua, wa = state_a.u.values, state_a.omega.values
    ub, wb = state_b.u.values, state_b.omega.values
    ka = state_a.beta.values ** 2
    kb = state_b.beta.values ** 2
    cur_a, cur_b = state_a, state_b
    steps = 0
    hist_a: deque = deque(maxlen=_GROWTH_WINDOW)
    hist_b: deque = deque(maxlen=_GROWTH_WINDOW)

    def reports(status_a, status_b, reason_a, reason_b, t_end):
        return (
            RunReport(status_a, t_end, reason_a, cur_a, steps),
            RunReport(status_b, t_end, reason_b, cur_b, steps),
        )

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while True:
            dt_a = stable_dt(cur_a, params, control)
            dt_b = stable_dt(cur_b, params, control)
            dt_stable = min(dt_a, dt_b)
            if dt_stable < control.dt_min:
                ra = _collapse_report(t, dt_stable, control, hist_a, cur_a, steps)
                rb = _collapse_report(t, dt_stable, control, hist_b, cur_b, steps)
                return ra, rb
            remaining = t_final - t
            clipped = dt_stable >= remaining
            dt = remaining if clipped else dt_stable

            na = _advance_k(ua, wa, ka, h, params, dt)
            nb_ = _advance_k(ub, wb, kb, h, params, dt)
            t_new = t_final if clipped else t + dt

            def bad(arrs):
                return not all(np.isfinite(a).all() for a in arrs)

            def inadmissible(arrs):
                kmin = float(np.min(arrs[2]))
                bsup = float(np.sqrt(max(float(np.max(arrs[2])), 0.0)))
                ktol = control.beta_tol * (2.0 * bsup + control.beta_tol)
                return float(np.min(arrs[1])) < control.omega_floor or kmin < -ktol

            if bad(na) or bad(nb_) or inadmissible(na) or inadmissible(nb_):
                which = "first member" if (bad(na) or inadmissible(na)) else "second member"
                reason = (
                    f"{which} lost admissibility advancing to t = {t_new:.17g} "
                    "(non-finite values, omega under its floor, or k below the "
                    "beta_tol-equivalent tolerance)"
                )
                return reports(SCHEME_FAILURE, SCHEME_FAILURE, reason, reason, t)

            ga = _signed_grad_extremum(_d1(na[0], h))
            gb = _signed_grad_extremum(_d1(nb_[0], h))
            ua, wa, ka = na
            ub, wb, kb = nb_
            t = t_new
            cur_a = State(
                t, Field(g, ua), Field(g, wa), Field(g, np.sqrt(np.maximum(ka, 0.0)))
            )
            cur_b = State(
                t, Field(g, ub), Field(g, wb), Field(g, np.sqrt(np.maximum(kb, 0.0)))
            )
            steps += 1
            hist_a.append(ga[0])
            hist_b.append(gb[0])
            if observer is not None:
                observer(cur_a, cur_b, dt)
            if ga[0] > control.blowup_grad_threshold or gb[0] > control.blowup_grad_threshold:
                reason = (
                    f"velocity gradient magnitude exceeded blowup_grad_threshold "
                    f"{control.blowup_grad_threshold:.6g} "
                    f"(first member {ga[0]:.6g}, second member {gb[0]:.6g})"
                )
                sa = BLOWUP_DETECTED if ga[0] > control.blowup_grad_threshold else COMPLETED
                sb = BLOWUP_DETECTED if gb[0] > control.blowup_grad_threshold else COMPLETED
                return reports(sa, sb, reason, reason, t)
            if clipped:
                reason = f"reached t_final = {t_final:.17g}"
                return reports(COMPLETED, COMPLETED, reason, reason, t)
