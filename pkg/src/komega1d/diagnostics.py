"""Per-step and pairwise trajectory auditing.

Everything analytically provable about a trajectory is reduced to numbers
here: decay envelopes, the energy and mass budgets, the continuation
integrand, the Riccati panel at the symmetry node, parity drift, and the
pairwise stability weights.  The audit only reports; judgement lives in the
test suite and the scenario summaries.

Scheme-consistent accounting
----------------------------
The two running residuals deserve an explanation, because a naive reading
produces numbers dominated by spatial discretization error instead of by
the time quadrature they are meant to expose.

For the semi-discrete scheme the exact energy balance is

    d/dt h*sum(u^2) = A(t) - 2 nu Q(t),

    A(t) = -2 h * sum(u * D1(u^2/2)),          (discrete advection work)
    Q(t) = sum(c_face * (u_{j+1}-u_j)^2) / h,  (face-form dissipation)

where D1 is the centered difference and c_face the arithmetic-mean face
viscosity -- both exactly the operators the right-hand side uses.  A(t) is
the discrete image of the integral of u d_x(u^2/2), which vanishes in the
continuum but is O(h^2) on the grid; Q(t) follows from discrete summation
by parts and is exact, not approximate.  energy_residual_u integrates this
balance with the trapezoid rule and subtracts; what is left is purely the
O(dt^2) time-quadrature defect, so it halves by 4x when the step halves.
mass_residual_k does the same for d/dt h*sum(beta^2) with the five terms of
the beta equation (advection work, face dissipation, the sink integral of
k*omega, the alpha4 shear production, and the alpha3 gradient production;
the last two of these cancel the face/centered mismatch in the continuum
but are kept separate here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .grid import TWO_PI, _d1, _d2, _faces, _lsum, _mirror, sobolev_h2_sq
from .model import Params, State, ToyState
from .oracles import OdeEnvelope, lambda_exact, mu_exact

__all__ = [
    "DiagnosticsRow",
    "ToyDiagnosticsRow",
    "StabilityRow",
    "ROW_FIELDS",
    "TOY_ROW_FIELDS",
    "STABILITY_FIELDS",
    "AuditAccumulators",
    "audit_step",
    "TrajectoryAuditor",
    "ToyAuditor",
    "audit_pair",
    "PairAuditor",
    "lifespan_lower_bound",
]


@dataclass
class DiagnosticsRow:
    """One audited instant of a (u, omega, beta) run.

    Field order is the CSV column order and is frozen; downstream tooling
    may rely on it.
    """

    t: float
    dt: float
    omega_min: float
    omega_max: float
    k_min: float
    k_max: float
    beta_min: float
    l2_u_sq: float
    l1_k: float
    l2_omega_sq: float
    l2_beta_sq: float
    e0: float
    e2: float
    e_total: float
    a_cont: float
    cont_integrand: float
    xi: float
    a_ricc: float
    eps_diss_int: float
    mean_u: float
    energy_residual_u: float
    mass_residual_k: float
    envelope_violation: float
    odd_even_drift: float


@dataclass
class ToyDiagnosticsRow:
    """One audited instant of a toy (u, gamma) run; own frozen schema."""

    t: float
    dt: float
    gamma_min: float
    gamma_max: float
    l2_u_sq: float
    l1_gamma: float
    mean_u: float
    energy_residual_u: float
    odd_even_drift: float


@dataclass
class StabilityRow:
    """One audited instant of a twin-run comparison."""

    t: float
    e_stab: float
    theta1: float
    theta2: float
    theta3: float
    gronwall_ratio: float


ROW_FIELDS = tuple(f.name for f in fields(DiagnosticsRow))
TOY_ROW_FIELDS = tuple(f.name for f in fields(ToyDiagnosticsRow))
STABILITY_FIELDS = tuple(f.name for f in fields(StabilityRow))


@dataclass
class AuditAccumulators:
    """Mutable running state shared by successive audit_step calls.

    Owned by exactly one run; seeded from the initial state by
    :class:`TrajectoryAuditor` (or by hand for direct audit_step use).
    """

    l2_u0_sq: float
    l1_k0: float
    omega_upper: OdeEnvelope
    omega_lower: OdeEnvelope
    k_lower: OdeEnvelope
    t0: float
    energy_flux_int: float = 0.0
    mass_flux_int: float = 0.0
    cont_int: float = 0.0
    prev_energy_rate: float = 0.0
    prev_mass_rate: float = 0.0
    prev_cont: float = 0.0
    prev_time: float = 0.0
    omega_l3_cubed: float = 0.0
    omega_l3_cubed_max: float = 0.0
    started: bool = False


def _energy_mass_rates(u, w, b, h, p):
    """(energy rate, mass rate, instantaneous k*omega integral).

    Both rates are scheme-consistent: they are the exact time derivatives
    of the discrete quadratures under the semi-discrete k-form system the
    stepper integrates, so the audited residuals contain time-quadrature
    error only.  For the energy, the advective term is kept explicitly
    (it telescopes to roundoff, not to zero, because u d_x(u^2/2) is not
    a perfect difference node-wise).  For the mass d/dt integral(k), the
    conservative diffusion telescopes to zero identically and is omitted;
    what remains is transport, shear production, and the -k*omega sink.
    """
    k = b * b
    c = k / w
    cface = _faces(c)
    d1u = _d1(u, h)
    du_face = np.roll(u, -1) - u

    adv_u = -2.0 * h * _lsum(u * _d1(0.5 * u * u, h))
    q_u = _lsum(cface * du_face * du_face) / h
    energy_rate = adv_u - 2.0 * p.nu * q_u

    kw_int = h * _lsum(k * w)
    transport = -h * _lsum(u * _d1(k, h))
    production = p.alpha4 * h * _lsum(c * (d1u * d1u))
    mass_rate = transport + production - kw_int
    return energy_rate, mass_rate, kw_int


def audit_step(prev: State | None, s: State, p: Params, acc: AuditAccumulators) -> DiagnosticsRow:
    """Audit one accepted state; pass prev=None for the initial record.

    Updates the accumulators in place (trapezoidal integrals of the energy
    and mass rates and of the continuation integrand) and returns the
    complete row.
    """
    g = s.grid
    h = g.spacing
    j0 = g.zero_index
    t = s.time
    dt = 0.0 if prev is None else t - prev.time
    u = s.u.values
    w = s.omega.values
    b = s.beta.values
    k = b * b

    omega_min = float(np.min(w))
    omega_max = float(np.max(w))
    k_min = float(np.min(k))
    k_max = float(np.max(k))
    beta_min = float(np.min(b))

    l2_u_sq = h * _lsum(u * u)
    l2_omega_sq = h * _lsum(w * w)
    # One reduction serves both columns: k = beta^2 node-wise makes the L1
    # norm of k and the squared L2 norm of beta the same sum, bit for bit.
    l2_beta_sq = h * _lsum(k)
    l1_k = l2_beta_sq

    d2u = _d2(u, h)
    d2w = _d2(w, h)
    d2b = _d2(b, h)
    e0 = l2_u_sq + l2_omega_sq + l2_beta_sq
    e2 = h * _lsum(d2u * d2u) + h * _lsum(d2w * d2w) + h * _lsum(d2b * d2b)
    e_total = e0 + e2

    d1u = _d1(u, h)
    grad_bundle = max(
        float(np.max(np.abs(d1u))),
        float(np.max(np.abs(_d1(w, h)))),
        float(np.max(np.abs(_d1(b, h)))),
    )
    cont_integrand = (1.0 + k_max) * grad_bundle * grad_bundle
    a_cont = (1.0 + t) ** 3 * (1.0 + k_max) * (1.0 + grad_bundle * grad_bundle)

    xi = (u[(j0 + 1) % g.n_points] - u[j0 - 1]) / (2.0 * h)
    a_ricc = (k[(j0 + 1) % g.n_points] - 2.0 * k[j0] + k[j0 - 1]) / (h * h) / w[j0]

    energy_rate, mass_rate, kw_int = _energy_mass_rates(u, w, b, h, p)
    if acc.started:
        half = 0.5 * dt
        acc.energy_flux_int += half * (acc.prev_energy_rate + energy_rate)
        acc.mass_flux_int += half * (acc.prev_mass_rate + mass_rate)
        acc.cont_int += half * (acc.prev_cont + cont_integrand)
    acc.prev_energy_rate = energy_rate
    acc.prev_mass_rate = mass_rate
    acc.prev_cont = cont_integrand
    acc.prev_time = t
    acc.omega_l3_cubed = h * _lsum(np.abs(w) ** 3)
    acc.omega_l3_cubed_max = max(acc.omega_l3_cubed_max, acc.omega_l3_cubed)
    acc.started = True

    energy_residual_u = l2_u_sq - acc.l2_u0_sq - acc.energy_flux_int
    mass_residual_k = l1_k - acc.l1_k0 - acc.mass_flux_int

    elapsed = t - acc.t0
    upper = lambda_exact(acc.omega_upper, elapsed)
    lower = lambda_exact(acc.omega_lower, elapsed)
    k_floor = mu_exact(acc.k_lower, elapsed)
    envelope_violation = max(omega_max - upper, lower - omega_min, k_floor - k_min)

    odd_even_drift = 0.5 * max(
        float(np.max(np.abs(u + _mirror(u)))),
        float(np.max(np.abs(w - _mirror(w)))),
        float(np.max(np.abs(b - _mirror(b)))),
    )

    return DiagnosticsRow(
        t=t,
        dt=dt,
        omega_min=omega_min,
        omega_max=omega_max,
        k_min=k_min,
        k_max=k_max,
        beta_min=beta_min,
        l2_u_sq=l2_u_sq,
        l1_k=l1_k,
        l2_omega_sq=l2_omega_sq,
        l2_beta_sq=l2_beta_sq,
        e0=e0,
        e2=e2,
        e_total=e_total,
        a_cont=a_cont,
        cont_integrand=cont_integrand,
        xi=float(xi),
        a_ricc=float(a_ricc),
        eps_diss_int=kw_int,
        mean_u=h * _lsum(u) / TWO_PI,
        energy_residual_u=energy_residual_u,
        mass_residual_k=mass_residual_k,
        envelope_violation=envelope_violation,
        odd_even_drift=odd_even_drift,
    )


class TrajectoryAuditor:
    """Observer adapter: seeds accumulators from the initial state, emits a
    t=0 row immediately, then one row per accepted step.

    Parameters
    ----------
    state0 : State
        Initial state; envelope seeds (initial omega extrema, initial k
        minimum) and the residual baselines come from here.
    params : Params
        Model coefficients (alpha2 seeds the envelope decay).
    sink : callable, optional
        Called with each DiagnosticsRow as it is produced.
    keep_rows : bool
        Retain every row in ``self.rows``.  Off by default; long runs emit
        hundreds of thousands of rows and the scenario writers stream them
        to disk instead.
    """

    def __init__(self, state0: State, params: Params, sink=None, keep_rows: bool = False):
        w0 = state0.omega.values
        b0 = state0.beta.values
        k0 = b0 * b0
        h = state0.grid.spacing
        a2 = params.alpha2
        omega_max0 = float(np.max(w0))
        omega_min0 = float(np.min(w0))
        k_min0 = float(np.min(k0))
        self.acc = AuditAccumulators(
            l2_u0_sq=h * _lsum(state0.u.values ** 2),
            l1_k0=h * _lsum(k0),
            omega_upper=OdeEnvelope(lambda0=omega_max0, mu0=0.0, alpha2=a2),
            omega_lower=OdeEnvelope(lambda0=omega_min0, mu0=0.0, alpha2=a2),
            # The k floor decays under the fastest omega, i.e. the upper envelope.
            k_lower=OdeEnvelope(lambda0=omega_max0, mu0=k_min0, alpha2=a2),
            t0=state0.time,
        )
        self.params = params
        self.sink = sink
        self.keep_rows = keep_rows
        self.rows: list[DiagnosticsRow] = []
        self.last_row: DiagnosticsRow | None = None
        self._prev = state0
        self._emit(None, state0)

    def _emit(self, prev: State | None, s: State) -> None:
        row = audit_step(prev, s, self.params, self.acc)
        self.last_row = row
        if self.keep_rows:
            self.rows.append(row)
        if self.sink is not None:
            self.sink(row)

    def observe(self, state: State, dt: float) -> None:
        del dt  # the row derives it from the state times
        self._emit(self._prev, state)
        self._prev = state

    @property
    def cont_integral(self) -> float:
        """Accumulated integral of cont_integrand (trapezoid)."""
        return self.acc.cont_int

    @property
    def omega_l3_cubed(self) -> float:
        """Cubed L3 norm of omega at the last audited state."""
        return self.acc.omega_l3_cubed


class ToyAuditor:
    """Reduced auditor for toy runs; mirrors TrajectoryAuditor's shape."""

    def __init__(self, state0: ToyState, sink=None, keep_rows: bool = False):
        h = state0.grid.spacing
        u0 = state0.u.values
        self.h = h
        self.l2_u0_sq = h * _lsum(u0 * u0)
        self.sink = sink
        self.keep_rows = keep_rows
        self.rows: list[ToyDiagnosticsRow] = []
        self.last_row: ToyDiagnosticsRow | None = None
        self._prev_rate = 0.0
        self._flux_int = 0.0
        self._started = False
        self._emit(state0, 0.0)

    def _emit(self, s: ToyState, dt: float) -> None:
        h = self.h
        u = s.u.values
        gam = s.gamma.values
        gface = _faces(gam)
        du_face = np.roll(u, -1) - u
        adv = -2.0 * h * _lsum(u * _d1(0.5 * u * u, h))
        rate = adv - 2.0 * _lsum(gface * du_face * du_face) / h
        if self._started:
            self._flux_int += 0.5 * dt * (self._prev_rate + rate)
        self._prev_rate = rate
        self._started = True
        l2_u_sq = h * _lsum(u * u)
        row = ToyDiagnosticsRow(
            t=s.time,
            dt=dt,
            gamma_min=float(np.min(gam)),
            gamma_max=float(np.max(gam)),
            l2_u_sq=l2_u_sq,
            l1_gamma=h * _lsum(np.abs(gam)),
            mean_u=h * _lsum(u) / TWO_PI,
            energy_residual_u=l2_u_sq - self.l2_u0_sq - self._flux_int,
            odd_even_drift=0.5 * max(
                float(np.max(np.abs(u + _mirror(u)))),
                float(np.max(np.abs(gam - _mirror(gam)))),
            ),
        )
        self.last_row = row
        if self.keep_rows:
            self.rows.append(row)
        if self.sink is not None:
            self.sink(row)

    def observe(self, state: ToyState, dt: float) -> None:
        self._emit(state, dt)


def _pair_quantities(s1: State, s2: State, p: Params) -> tuple[float, float, float, float]:
    """(e_stab, theta1, theta2, theta3) for two states at one time.

    The weights follow the pairwise stability estimate: with
    m_u, m_w, m_q the largest gradient sup-norms (of u in both runs, omega
    in both runs, and the u/beta bundle), the shared weight block is

        W = ||beta1/(sqrt(omega1) omega2)||_inf^2 + ||sqrt(omega1)/omega2||_inf^2
            + ||1/omega2||_inf

    and theta1 = m_u + m_u^2 W, theta2 = m_u + m_w^2 W, while theta3 swaps
    in the u/beta gradient bundle, adds ||(beta1, beta2)||_inf, and extends
    the block with ||(1/omega1, 1/omega2)||_inf and
    ||beta1/(omega1 omega2)||_inf.
    """
    del p
    g = s1.grid
    h = g.spacing
    u1, w1, b1 = s1.u.values, s1.omega.values, s1.beta.values
    u2, w2, b2 = s2.u.values, s2.omega.values, s2.beta.values

    du = u1 - u2
    dw = w1 - w2
    db = b1 - b2
    e_stab = h * _lsum(du * du) + h * _lsum(dw * dw) + h * _lsum(db * db)

    m_u = max(float(np.max(np.abs(_d1(u1, h)))), float(np.max(np.abs(_d1(u2, h)))))
    m_w = max(float(np.max(np.abs(_d1(w1, h)))), float(np.max(np.abs(_d1(w2, h)))))
    m_q = max(m_u, float(np.max(np.abs(_d1(b1, h)))), float(np.max(np.abs(_d1(b2, h)))))
    m_beta = max(float(np.max(np.abs(b1))), float(np.max(np.abs(b2))))

    w_a = float(np.max(b1 * b1 / (w1 * w2 * w2)))
    w_b = float(np.max(w1 / (w2 * w2)))
    w_c = float(np.max(1.0 / w2))
    w_d = max(float(np.max(1.0 / w1)), w_c)
    w_e = float(np.max(np.abs(b1) / (w1 * w2)))

    block = w_a + w_b + w_c
    theta1 = m_u + m_u * m_u * block
    theta2 = m_u + m_w * m_w * block
    theta3 = m_q + m_beta + m_q * m_q * (w_a + w_b + w_d + w_e)
    return e_stab, theta1, theta2, theta3


def audit_pair(
    s1: State,
    s2: State,
    p: Params,
    K_fit: float,
    e0: float | None = None,
    theta_int: float = 0.0,
) -> StabilityRow:
    """Audit one instant of a twin-run pair.

    e0 and theta_int carry the history needed by the Gronwall ratio
    (initial energy and the accumulated integral of theta1+theta2+theta3);
    when both are left at their defaults the ratio degenerates to 1 for a
    nontrivial pair and to 0 for identical states.  :class:`PairAuditor`
    maintains them across a run.
    """
    if s1.grid.n_points != s2.grid.n_points:
        raise ValueError("audit_pair needs both states on one grid")
    if s1.time != s2.time:
        raise ValueError(
            f"audit_pair needs simultaneous states (got t={s1.time!r} and t={s2.time!r})"
        )
    e_stab, th1, th2, th3 = _pair_quantities(s1, s2, p)
    base = e_stab if e0 is None else e0
    if base == 0.0:
        ratio = 0.0 if e_stab == 0.0 else math.inf
    else:
        ratio = e_stab / (base * math.exp(K_fit * theta_int))
    return StabilityRow(
        t=s1.time, e_stab=e_stab, theta1=th1, theta2=th2, theta3=th3,
        gronwall_ratio=ratio,
    )


class PairAuditor:
    """Observer adapter for lockstep twin runs.

    Collects the pairwise energy and weights per step and the trapezoidal
    integral of theta1+theta2+theta3.  Rows can be regenerated for any K
    after the fact, which is how the fitted-K audit works: fit on the
    collected series, then check gronwall_ratio <= 1 along the whole run.
    """

    def __init__(self, s1: State, s2: State, params: Params):
        self.params = params
        self.t: list[float] = []
        self.e: list[float] = []
        self.th1: list[float] = []
        self.th2: list[float] = []
        self.th3: list[float] = []
        self.theta_int: list[float] = []
        self._observe_quantities(s1, s2)

    def _observe_quantities(self, s1: State, s2: State) -> None:
        e_stab, th1, th2, th3 = _pair_quantities(s1, s2, self.params)
        if self.t:
            dt = s1.time - self.t[-1]
            prev_sum = self.th1[-1] + self.th2[-1] + self.th3[-1]
            cur_sum = th1 + th2 + th3
            acc = self.theta_int[-1] + 0.5 * dt * (prev_sum + cur_sum)
        else:
            acc = 0.0
        self.t.append(s1.time)
        self.e.append(e_stab)
        self.th1.append(th1)
        self.th2.append(th2)
        self.th3.append(th3)
        self.theta_int.append(acc)

    def observe(self, s1: State, s2: State, dt: float) -> None:
        del dt
        self._observe_quantities(s1, s2)

    def fit_k(self) -> float:
        """Smallest K making gronwall_ratio <= 1 along this run.

        K = max over steps of log(E(t)/E(0)) / integral(theta), taken over
        steps where the energy actually exceeded its start and the integral
        is meaningfully positive.  Returns 0.0 for runs that never grow.
        """
        e0 = self.e[0]
        if e0 <= 0.0:
            return 0.0
        best = 0.0
        for e_val, thint in zip(self.e, self.theta_int):
            if thint > 1e-14 and e_val > e0:
                best = max(best, math.log(e_val / e0) / thint)
        return best

    def rows(self, K: float) -> list[StabilityRow]:
        e0 = self.e[0]
        out = []
        for t, e_val, th1, th2, th3, thint in zip(
            self.t, self.e, self.th1, self.th2, self.th3, self.theta_int
        ):
            if e0 == 0.0:
                ratio = 0.0 if e_val == 0.0 else math.inf
            else:
                ratio = e_val / (e0 * math.exp(K * thint))
            out.append(
                StabilityRow(
                    t=t, e_stab=e_val, theta1=th1, theta2=th2, theta3=th3,
                    gronwall_ratio=ratio,
                )
            )
        return out


def lifespan_lower_bound(s0: State, p: Params, c_cal: float = 1e-2) -> float:
    """Guaranteed-existence horizon min(1, c_cal / max(1, E(0))^2).

    E(0) is the initial H^2-type energy (the e_total diagnostic).  The
    calibration constant is configurable because only the functional form
    is pinned down; runs that end before this bound are flagged by the
    scenario summaries, not failed.
    """
    del p
    e0 = sobolev_h2_sq(s0.u) + sobolev_h2_sq(s0.omega) + sobolev_h2_sq(s0.beta)
    return min(1.0, c_cal / max(1.0, e0) ** 2)
