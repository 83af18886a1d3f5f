"""The three observables: Eotvos parameter, gravitational return time, and
interferometer propagation phase.

Everything here runs on top of the canonical-chart dynamics.  The return-time
problem is posed in nondimensional 1/r units (GM = m = 1) where the only
remaining parameter is the uncertainty scale u; the propagation-phase
operations integrate (p x' + p_s s' - H)/hbar along trajectories, which at
plane-wave order is the classical action integral.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, simpson
from scipy.integrate import IntegrationWarning

from .errors import (
    ConfigurationError,
    NoReturnError,
    QuadratureError,
    SingularityAbort,
)
from .dynamics import (
    IntegratorConfig,
    PotentialModel,
    Trajectory,
    effective_hamiltonian_canonical,
    integrate_canonical,
    newtonian_potential,
)
from .moments import CanonicalState, HbarContext, SecondOrderState

__all__ = [
    "EotvosInput",
    "anomalous_acceleration",
    "eotvos_estimate",
    "width_bound_from_eta",
    "ReturnTimeProblem",
    "ReturnTimeRow",
    "return_time",
    "return_time_curve",
    "PathSegment",
    "PhasePath",
    "phase_line_integral",
    "propagation_phase_plane_wave",
    "propagation_phase_second_order",
    "MachZehnderConfig",
    "MachZehnderResult",
    "mach_zehnder_phase",
]

# Terrestrial defaults: field strength ~10 m/s^2 and field-strength curvature
# ~1e-12 / (m s^2).
DEFAULT_G = 10.0
DEFAULT_D2G = 1e-12


@dataclass(frozen=True)
class EotvosInput:
    """Field strength g, its second spatial derivative, and the packet variance."""

    g: float = DEFAULT_G
    d2g: float = DEFAULT_D2G
    dxx: float = 1.0

    def __post_init__(self):
        if not (self.g > 0.0):
            raise ConfigurationError(f"g must be positive, got {self.g!r}")
        if self.dxx < 0.0:
            raise ConfigurationError("Dxx must be nonnegative")


def anomalous_acceleration(pot: PotentialModel, state: SecondOrderState) -> float:
    """|x_mean'' + g(<x>)| = (1/2) |d^2 g/dx^2| Dxx at the packet center.

    The deviation of the centroid from local free fall; vanishes for
    potentials up to quadratic.
    """
    pot.require_domain(state.x_mean)
    return 0.5 * abs(float(pot.d3phi(state.x_mean))) * state.dxx


def eotvos_estimate(inp: EotvosInput) -> float:
    """Eotvos parameter eta = (1/2) g^-1 |d^2 g/dx^2| Dxx.

    Linear in Dxx and homogeneous of degree -1 in g.  With the terrestrial
    defaults this spans 0.5e-33 (atomic-scale width) to 0.5e-13 (meter-scale
    width).
    """
    return 0.5 * abs(inp.d2g) * inp.dxx / inp.g


def width_bound_from_eta(g: float, d2g: float, eta_max: float) -> float:
    """Largest packet width s compatible with an Eotvos resolution eta_max."""
    if d2g <= 0.0:
        raise ConfigurationError("width bound needs d2g > 0")
    if eta_max < 0.0:
        raise ConfigurationError("eta_max must be nonnegative")
    return math.sqrt(2.0 * g * eta_max / d2g)


@dataclass(frozen=True)
class ReturnTimeProblem:
    """Out-and-back launch in nondimensional 1/r gravity.

    ``epsilon`` is the classical energy p^2/2 - 1/r at launch; the particle
    starts at r0 moving outward with p0 = sqrt(2 (epsilon + 1/r0)).  ``u`` is
    the dimensionless uncertainty scale; u = 0 with s0 = 0 is the classical
    point particle, u = 0 with s0 > 0 keeps the (mass-independent) tidal
    coupling only.  When ``s0`` is None and u > 0 the initial width defaults
    to the balance scale (u r0^3 / 2)^(1/4) at which the uncertainty and
    tidal width forces have equal magnitude.
    """

    epsilon: float
    u: float = 0.0
    s0: float | None = None
    ps0: float = 0.0
    r0: float = 1.0

    def __post_init__(self):
        if self.u < 0.0:
            raise ConfigurationError("u must be nonnegative")
        if self.r0 <= 0.0:
            raise ConfigurationError("launch radius must be positive")
        if self.epsilon + 1.0 / self.r0 < 0.0:
            raise ConfigurationError(
                f"epsilon={self.epsilon!r} gives an imaginary launch momentum"
            )
        if self.s0 is not None and self.s0 < 0.0:
            raise ConfigurationError("s0 must be nonnegative")
        if self.u > 0.0 and self.s0 is not None and self.s0 == 0.0:
            raise ConfigurationError("u > 0 requires a positive initial width")

    @property
    def initial_width(self) -> float:
        if self.s0 is not None:
            return self.s0
        if self.u == 0.0:
            return 0.0
        return (self.u * self.r0**3 / 2.0) ** 0.25

    @property
    def launch_momentum(self) -> float:
        return math.sqrt(2.0 * (self.epsilon + 1.0 / self.r0))

    @property
    def initial_state(self) -> CanonicalState:
        s0 = self.initial_width
        ps0 = self.ps0 if s0 > 0.0 else 0.0
        u = self.u if s0 > 0.0 else self.u
        return CanonicalState(self.r0, self.launch_momentum, s0, ps0, u)


def _kepler_horizon(epsilon: float) -> float:
    # Generous multiple of the classical out-and-back estimate.
    if epsilon < -1e-3:
        return 40.0 * (-2.0 * epsilon) ** -1.5 + 10.0
    return 1000.0


def return_time(
    problem: ReturnTimeProblem,
    cfg: IntegratorConfig | None = None,
    *,
    t_max: float | None = None,
    guard_factor: float = 100.0,
    n_samples: int = 800,
) -> tuple:
    """First downward crossing of the launch radius, with the trajectory.

    The crossing is located by sign-change bracketing plus root refinement on
    the dense output.  If the particle passes ``guard_factor * r0`` moving
    outward with positive effective energy the run is classified as escaped
    (:class:`NoReturnError`); a width or domain guard hit raises
    :class:`SingularityAbort` with the partial trajectory attached.
    """
    cfg = cfg or IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)
    pot = newtonian_potential(1.0)
    initial = problem.initial_state
    if t_max is None:
        t_max = _kepler_horizon(problem.epsilon)

    r0 = problem.r0

    def return_event(t, y):
        return y[0] - r0

    return_event.terminal = True
    return_event.direction = -1.0

    def escape_event(t, y):
        return y[0] - guard_factor * r0

    escape_event.terminal = True
    escape_event.direction = 1.0

    traj = integrate_canonical(
        initial,
        pot,
        1.0,
        (0.0, t_max),
        cfg,
        events=(return_event, escape_event),
        n_samples=n_samples,
    )
    if traj.status == "singular":
        raise SingularityAbort(
            f"return-time integration aborted: {traj.message}", trajectory=traj
        )
    if traj.event_times and traj.event_times[0]:
        return traj.event_times[0][-1], traj
    if traj.event_times and len(traj.event_times) > 1 and traj.event_times[1]:
        energy = effective_hamiltonian_canonical(traj.final, pot, 1.0)
        if energy > 0.0:
            raise NoReturnError(
                f"escaped past {guard_factor} r0 with positive energy {energy:.3e}",
                status="escape",
                trajectory=traj,
            )
        raise ConfigurationError(
            "bound orbit exceeded the escape guard; increase guard_factor"
        )
    raise NoReturnError(
        f"no return within t_max = {t_max!r}", status="no-return", trajectory=traj
    )


@dataclass(frozen=True)
class ReturnTimeRow:
    epsilon: float
    u: float
    t_return: float
    status: str


def return_time_curve(
    epsilon_grid: Sequence[float],
    u_list: Sequence[float],
    *,
    s0: float | None = None,
    ps0: float = 0.0,
    r0: float = 1.0,
    cfg: IntegratorConfig | None = None,
) -> list:
    """Return-time table over an energy grid for each uncertainty scale.

    Rows past the escape threshold are reported with status "no-return"
    rather than raised; singularity aborts propagate.  ``s0 = None`` selects
    the per-u balance-scale initial width.
    """
    rows = []
    for u in u_list:
        for eps in epsilon_grid:
            problem = ReturnTimeProblem(float(eps), float(u), s0=s0, ps0=ps0, r0=r0)
            try:
                t_ret, _ = return_time(problem, cfg)
                rows.append(ReturnTimeRow(float(eps), float(u), t_ret, "ok"))
            except NoReturnError as err:
                rows.append(ReturnTimeRow(float(eps), float(u), math.nan, err.status))
    return rows


@dataclass(frozen=True)
class PathSegment:
    """Parametrized spacetime curve tau -> (x(tau), t(tau)) with derivatives."""

    x_of: Callable
    t_of: Callable
    dx_dtau: Callable
    dt_dtau: Callable
    tau_span: tuple
    kind: str = "custom"

    @classmethod
    def vertical(cls, t_fixed: float, x_from: float, x_to: float) -> "PathSegment":
        """Fixed-time segment; tau is the position itself."""
        return cls(
            x_of=lambda tau: tau,
            t_of=lambda tau: t_fixed,
            dx_dtau=lambda tau: 1.0,
            dt_dtau=lambda tau: 0.0,
            tau_span=(x_from, x_to),
            kind="fixed_time_vertical",
        )

    @classmethod
    def timelike(
        cls,
        x_of: Callable,
        dx_dt: Callable,
        t_from: float,
        t_to: float,
        kind: str = "com_trajectory",
    ) -> "PathSegment":
        """Segment parametrized by time."""
        return cls(
            x_of=x_of,
            t_of=lambda tau: tau,
            dx_dtau=dx_dt,
            dt_dtau=lambda tau: 1.0,
            tau_span=(t_from, t_to),
            kind=kind,
        )

    @classmethod
    def from_trajectory(cls, traj: Trajectory, t_from: float, t_to: float) -> "PathSegment":
        """Center-of-mass segment of an integrated trajectory."""
        return cls.timelike(
            x_of=lambda tau: float(traj.evaluate(tau)[0].squeeze()),
            dx_dt=lambda tau: float(traj.evaluate(tau)[1].squeeze()) / traj.mass,
            t_from=t_from,
            t_to=t_to,
        )

    @property
    def start(self) -> tuple:
        tau = self.tau_span[0]
        return float(self.x_of(tau)), float(self.t_of(tau))

    @property
    def end(self) -> tuple:
        tau = self.tau_span[1]
        return float(self.x_of(tau)), float(self.t_of(tau))


@dataclass(frozen=True)
class PhasePath:
    """Chain of segments whose endpoints join continuously."""

    segments: tuple
    chain_tol: float = 1e-9

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ConfigurationError("a phase path needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            xe, te = a.end
            xs, ts = b.start
            scale = 1.0 + abs(xe) + abs(te)
            if abs(xe - xs) > self.chain_tol * scale or abs(te - ts) > self.chain_tol * scale:
                raise ConfigurationError(
                    f"segments do not chain: {a.end} -> {b.start}"
                )


def phase_line_integral(
    path: PhasePath,
    partial_x: Callable,
    partial_t: Callable,
    *,
    quad_tol: float = 1e-11,
) -> float:
    """Line integral of d theta = theta_x dx + theta_t dt along a path.

    ``partial_x`` and ``partial_t`` are functions of (x, t).  Adaptive
    quadrature per segment; when the mixed-partials condition holds the
    result is independent of the path between fixed endpoints and vanishes on
    closed loops.
    """
    total = 0.0
    for seg in path.segments:

        def integrand(tau, seg=seg):
            x = seg.x_of(tau)
            t = seg.t_of(tau)
            return partial_x(x, t) * seg.dx_dtau(tau) + partial_t(x, t) * seg.dt_dtau(tau)

        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                val, err = quad(
                    integrand,
                    seg.tau_span[0],
                    seg.tau_span[1],
                    epsabs=quad_tol,
                    epsrel=quad_tol,
                    limit=200,
                )
            except IntegrationWarning as w:
                raise QuadratureError(f"segment quadrature did not converge: {w}") from None
        total += val
    return total


def _phase_grid(traj: Trajectory, t_from, t_to, n_nodes):
    t0 = traj.times[0] if t_from is None else float(t_from)
    t1 = traj.times[-1] if t_to is None else float(t_to)
    sign = 1.0
    if t1 < t0:
        t0, t1 = t1, t0
        sign = -1.0
    ts = np.linspace(t0, t1, n_nodes)
    return ts, sign


def propagation_phase_plane_wave(
    traj: Trajectory,
    pot: PotentialModel,
    mass: float,
    ctx,
    *,
    t_from: float | None = None,
    t_to: float | None = None,
    n_nodes: int = 4097,
) -> float:
    """Plane-wave propagation phase (1/hbar) * integral of (p x' - H) dt.

    H is the classical energy along the mean trajectory, so the integrand is
    numerically the classical Lagrangian; traversing with ``t_from > t_to``
    flips the sign (the phase difference is odd under reversal of the
    endpoints).
    """
    ts, sign = _phase_grid(traj, t_from, t_to, n_nodes)
    y = traj.evaluate(ts)
    x, p = y[0], y[1]
    lagrangian = p * p / (2.0 * mass) - mass * pot.phi(x)
    return sign * float(simpson(lagrangian, x=ts)) / ctx.hbar


def propagation_phase_second_order(
    traj: Trajectory,
    pot: PotentialModel,
    mass: float,
    ctx,
    *,
    width_terms: bool = True,
    t_from: float | None = None,
    t_to: float | None = None,
    n_nodes: int = 4097,
) -> float:
    """Second-order propagation phase (1/hbar) * integral of (p x' + p_s s' - H) dt.

    H is the effective quantum energy, so relative to the plane-wave value the
    width sector contributes (p_s^2/2m - U/(2 m s^2) - m Phi'' s^2 / 2).
    ``width_terms=False`` drops the width sector entirely, reducing to
    :func:`propagation_phase_plane_wave`.
    """
    ts, sign = _phase_grid(traj, t_from, t_to, n_nodes)
    y = traj.evaluate(ts)
    x, p, s, ps = y
    integrand = p * p / (2.0 * mass) - mass * pot.phi(x)
    width_active = traj.u_casimir > 0.0 or bool(np.any(s != 0.0))
    if width_terms and width_active:
        width_energy = ps * ps / (2.0 * mass) - 0.5 * mass * pot.d2phi(x) * s * s
        if traj.u_casimir > 0.0:
            width_energy = width_energy - traj.u_casimir / (2.0 * mass * s * s)
        integrand = integrand + width_energy
    return sign * float(simpson(integrand, x=ts)) / ctx.hbar


@dataclass(frozen=True)
class MachZehnderConfig:
    """Three-pulse interferometer: kicks +-hbar_k at t = 0 and t = T,
    recombination analysis at t = 2T."""

    pulse_spacing: float
    hbar_k: float
    mass: float
    potential: PotentialModel
    initial: CanonicalState
    ctx: HbarContext | None = None

    def __post_init__(self):
        if self.pulse_spacing <= 0.0:
            raise ConfigurationError("pulse spacing T must be positive")
        if self.hbar_k == 0.0:
            raise ConfigurationError("momentum kick must be nonzero")


@dataclass(frozen=True)
class MachZehnderResult:
    """Phase difference and closure geometry of the two arms at t = 2T.

    ``delta_theta`` excludes the laser-imprinted kick phases; it is the
    difference of the arms' propagation phases plus the fixed-time vertical
    closure terms evaluated at the midpoint ``x_reference``.  ``separation``
    is the arm-end distance; ``within_validity`` is False when the closure
    segment extends beyond six packet widths.
    """

    delta_theta: float
    separation: float
    x_reference: float
    arm_phases: tuple
    vertical_phases: tuple
    end_states: tuple
    within_validity: bool
    arm_a_legs: tuple
    arm_b_legs: tuple


def _kick(state: CanonicalState, dp: float) -> CanonicalState:
    return replace(state, p=state.p + dp)


def _propagate_arm(initial, kicks, pot, mass, big_t, cfg, ctx):
    state = _kick(initial, kicks[0])
    leg1 = integrate_canonical(state, pot, mass, (0.0, big_t), cfg)
    if leg1.status != "ok":
        raise SingularityAbort(f"arm leg 1 aborted: {leg1.message}", trajectory=leg1)
    state = _kick(leg1.final, kicks[1])
    leg2 = integrate_canonical(state, pot, mass, (big_t, 2.0 * big_t), cfg)
    if leg2.status != "ok":
        raise SingularityAbort(f"arm leg 2 aborted: {leg2.message}", trajectory=leg2)
    phase = propagation_phase_second_order(
        leg1, pot, mass, ctx
    ) + propagation_phase_second_order(leg2, pot, mass, ctx)
    return phase, (leg1, leg2)


def _vertical_phase(state: CanonicalState, x_to: float, hbar: float) -> float:
    """Closed-form fixed-time integral of theta' = p/hbar + (x-<x>) Dxp/(hbar Dxx).

    On the vertical segment the moments are time independent, so the
    second-order term integrates to Dxp/(2 hbar Dxx) * (x_to - <x>)^2.
    """
    dx = x_to - state.x
    linear = state.p * dx / hbar
    if state.s <= 0.0:
        return linear
    dxp_over_dxx = state.ps / state.s  # Dxp/Dxx = (s ps)/s^2
    return linear + 0.5 * dxp_over_dxx * dx * dx / hbar


def mach_zehnder_phase(
    cfg: MachZehnderConfig, icfg: IntegratorConfig | None = None
) -> MachZehnderResult:
    """Propagate both arms and assemble the recombination phase difference.

    Arm A receives +hbar_k at t = 0 and -hbar_k at t = T; arm B receives the
    complementary kicks (0, +hbar_k).  Each arm's phase is integrated along
    its center-of-mass trajectory (where the x-dependent second-order phase
    term vanishes) and closed by a vertical segment at fixed t = 2T to the
    arm midpoint, where the time-independent moments integrate in closed
    form.  In a uniform field the arms close and the result is the classical
    action difference; a field gradient opens the arms and brings the width
    sector into the phase.
    """
    ctx = cfg.ctx or HbarContext()
    icfg = icfg or IntegratorConfig()
    k = cfg.hbar_k
    phase_a, legs_a = _propagate_arm(
        cfg.initial, (k, -k), cfg.potential, cfg.mass, cfg.pulse_spacing, icfg, ctx
    )
    phase_b, legs_b = _propagate_arm(
        cfg.initial, (0.0, k), cfg.potential, cfg.mass, cfg.pulse_spacing, icfg, ctx
    )
    end_a = legs_a[1].final
    end_b = legs_b[1].final
    separation = end_a.x - end_b.x
    x_ref = 0.5 * (end_a.x + end_b.x)
    vert_a = _vertical_phase(end_a, x_ref, ctx.hbar)
    vert_b = _vertical_phase(end_b, x_ref, ctx.hbar)
    widths = [s for s in (end_a.s, end_b.s) if s > 0.0]
    validity = True
    if widths:
        validity = abs(separation) <= 6.0 * min(widths)
    elif separation != 0.0:
        validity = False
    return MachZehnderResult(
        delta_theta=(phase_a + vert_a) - (phase_b + vert_b),
        separation=separation,
        x_reference=x_ref,
        arm_phases=(phase_a, phase_b),
        vertical_phases=(vert_a, vert_b),
        end_states=(end_a, end_b),
        within_validity=validity,
        arm_a_legs=legs_a,
        arm_b_legs=legs_b,
    )
