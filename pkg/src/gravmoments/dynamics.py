"""Potentials, effective Hamiltonians, equations of motion, and integration.

The second-order effective Hamiltonian for a particle of mass m in a
gravitational potential Phi is

    H = p^2/2m + m*Phi(x) + Dpp/2m + (m/2) Phi''(x) Dxx,

equivalently, in the canonical chart with Casimir U,

    H = p^2/2m + p_s^2/2m + U/(2 m s^2) + m*Phi(x) + (m/2) Phi''(x) s^2.

Its flow couples the packet width to the center of mass only through the
third derivative of Phi, which is why linear and quadratic potentials keep
classical, mass-independent center-of-mass motion while Newtonian 1/r
gravity does not.  Integration is adaptive embedded Runge-Kutta 5(4) by
default (the U/s^3 width force is stiff at small s), with an optional
fixed-step Stoermer-Verlet splitting for long-time conservation studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import (
    ConfigurationError,
    DomainError,
    SingularityError,
)
from .moments import CanonicalState, SecondOrderState

__all__ = [
    "HBAR_SI",
    "G_SI",
    "PotentialModel",
    "free_potential",
    "linear_potential",
    "quadratic_potential",
    "gravity_gradient_potential",
    "newtonian_potential",
    "power_law_potential",
    "IntegratorConfig",
    "Trajectory",
    "MomentTrajectory",
    "effective_hamiltonian",
    "effective_hamiltonian_canonical",
    "eom_rhs_canonical",
    "eom_rhs_moments",
    "integrate_canonical",
    "integrate_moments",
    "closed_form_free",
    "closed_form_linear",
    "ScaleSet",
    "nondimensionalize",
    "redimensionalize",
    "u_parameter",
]

HBAR_SI = 1.054571817e-34  # J s (CODATA)
G_SI = 6.67430e-11  # m^3 kg^-1 s^-2 (CODATA)

# Width/radius guard: stepping below 1e-12 of the problem's length scale
# aborts the integration instead of silently clamping.
SINGULARITY_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class PotentialModel:
    """Gravitational potential per unit mass with analytic derivatives.

    ``phi``..``d3phi`` accept scalars or numpy arrays.  ``x_min`` marks an
    open lower domain boundary (0 for the 1/r family); evaluation at or below
    it is a :class:`DomainError`.
    """

    kind: str
    phi: Callable
    dphi: Callable
    d2phi: Callable
    d3phi: Callable
    units: str = "nondimensional"
    params: dict = field(default_factory=dict)
    x_min: float | None = None

    def __post_init__(self):
        if self.units not in ("SI", "nondimensional"):
            raise ConfigurationError(f"unknown units flag {self.units!r}")

    def require_domain(self, x: float) -> None:
        if self.x_min is not None and x <= self.x_min:
            raise DomainError(
                f"{self.kind} potential is defined only for x > {self.x_min}, got {x!r}"
            )


def free_potential(units: str = "nondimensional") -> PotentialModel:
    """Phi = 0."""
    zero = lambda x: 0.0 * x
    return PotentialModel("free", zero, zero, zero, zero, units=units)


def linear_potential(g: float, units: str = "nondimensional") -> PotentialModel:
    """Uniform field, Phi = g*x."""
    return PotentialModel(
        "linear",
        lambda x: g * x,
        lambda x: g + 0.0 * x,
        lambda x: 0.0 * x,
        lambda x: 0.0 * x,
        units=units,
        params={"g": g},
    )


def quadratic_potential(k: float, units: str = "nondimensional") -> PotentialModel:
    """Constant field gradient, Phi = k*x^2/2 with Phi'' = k."""
    return PotentialModel(
        "quadratic",
        lambda x: 0.5 * k * x * x,
        lambda x: k * x,
        lambda x: k + 0.0 * x,
        lambda x: 0.0 * x,
        units=units,
        params={"k": k},
    )



def gravity_gradient_potential(
    g: float, gradient: float, units: str = "nondimensional"
) -> PotentialModel:
    """Uniform field plus constant field gradient, Phi = g x + gradient x^2/2.

    The interferometer configuration where arms fail to close.
    """
    return PotentialModel(
        "gravity_gradient",
        lambda x: g * x + 0.5 * gradient * x * x,
        lambda x: g + gradient * x,
        lambda x: gradient + 0.0 * x,
        lambda x: 0.0 * x,
        units=units,
        params={"g": g, "gradient": gradient},
    )


def newtonian_potential(gm: float, units: str = "nondimensional") -> PotentialModel:
    """Phi = -GM/x for x > 0."""
    if gm <= 0.0:
        raise ConfigurationError(f"GM must be positive, got {gm!r}")
    return PotentialModel(
        "newtonian",
        lambda x: -gm / x,
        lambda x: gm / x**2,
        lambda x: -2.0 * gm / x**3,
        lambda x: 6.0 * gm / x**4,
        units=units,
        params={"gm": gm},
        x_min=0.0,
    )


def power_law_potential(
    gm: float,
    alpha: float,
    exponent: float,
    r0: float,
    units: str = "nondimensional",
) -> PotentialModel:
    """Newtonian potential with a power-law correction,

        Phi(r) = -(GM/r) * (1 + alpha * (r0/r)^(N-1)),

    defined for r > 0.  The width coupling of 1/r gravity itself acts like
    the case N = 3, alpha = 1, r0 = s.
    """
    if gm <= 0.0 or r0 <= 0.0:
        raise ConfigurationError("GM and r0 must be positive")
    c = gm * alpha * r0 ** (exponent - 1.0)
    n = exponent

    def phi(r):
        return -gm / r - c * r ** (-n)

    def dphi(r):
        return gm / r**2 + c * n * r ** (-n - 1.0)

    def d2phi(r):
        return -2.0 * gm / r**3 - c * n * (n + 1.0) * r ** (-n - 2.0)

    def d3phi(r):
        return 6.0 * gm / r**4 + c * n * (n + 1.0) * (n + 2.0) * r ** (-n - 3.0)

    return PotentialModel(
        "power_law",
        phi,
        dphi,
        d2phi,
        d3phi,
        units=units,
        params={"gm": gm, "alpha": alpha, "exponent": exponent, "r0": r0},
        x_min=0.0,
    )


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and stepping controls for the ODE integrators.

    ``adaptive_rk`` is an embedded Runge-Kutta 5(4) pair with dense output;
    ``fixed_step`` is a Stoermer-Verlet splitting with step ``h_init``
    (events are not supported there, and ``max_steps`` bounds its step
    count).
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    h_init: float | None = None
    h_min: float = 1e-15
    h_max: float = math.inf
    method: str = "adaptive_rk"
    max_steps: int = 5_000_000

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ConfigurationError("tolerances must be positive")
        if self.method not in ("adaptive_rk", "fixed_step"):
            raise ConfigurationError(f"unknown integrator method {self.method!r}")
        if self.h_min <= 0.0:
            raise ConfigurationError("h_min must be positive")
        if self.h_init is not None and not (self.h_min <= self.h_init <= self.h_max):
            raise ConfigurationError("need 0 < h_min <= h_init <= h_max")
        if self.max_steps <= 0:
            raise ConfigurationError("max_steps must be positive")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered canonical-chart samples with conservation diagnostics.

    ``energy_series`` holds the effective Hamiltonian and ``casimir_series``
    the uncertainty volume reconstructed from each sample.  ``status`` is
    "ok", "singular" (guard hit, partial result) or "event" (a terminal user
    event stopped the run); ``event_times`` lists trigger times per user
    event.  CSV export uses 17 significant digits so values round-trip.
    """

    times: np.ndarray
    x: np.ndarray
    p: np.ndarray
    s: np.ndarray
    ps: np.ndarray
    energy_series: np.ndarray
    casimir_series: np.ndarray
    mass: float
    u_casimir: float
    status: str = "ok"
    message: str = ""
    event_times: tuple = ()
    _dense: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.times)
        for name in ("x", "p", "s", "ps", "energy_series", "casimir_series"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length differs from times")
        if n > 1 and not np.all(np.diff(self.times) > 0.0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def samples(self) -> list:
        """The (t, CanonicalState) view of the stored arrays."""
        return [(float(t), self.state_at_index(i)) for i, t in enumerate(self.times)]

    def state_at_index(self, i: int) -> CanonicalState:
        return CanonicalState(
            float(self.x[i]),
            float(self.p[i]),
            float(self.s[i]),
            float(self.ps[i]),
            self.u_casimir,
        )

    @property
    def initial(self) -> CanonicalState:
        return self.state_at_index(0)

    @property
    def final(self) -> CanonicalState:
        return self.state_at_index(len(self.times) - 1)

    def evaluate(self, t) -> np.ndarray:
        """Dense evaluation of (x, p, s, ps) at times t, shape (4, n_times)."""
        if self._dense is None:
            raise ValueError("trajectory carries no dense interpolant")
        y = np.asarray(self._dense(t))
        if y.ndim == 1:
            y = y[:, None]
        return y

    def state_at(self, t: float) -> CanonicalState:
        y = self.evaluate(float(t))
        return CanonicalState(
            float(y[0].squeeze()),
            float(y[1].squeeze()),
            float(y[2].squeeze()),
            float(y[3].squeeze()),
            self.u_casimir,
        )

    def to_csv(self, path) -> None:
        """Write columns t, x, p, s, ps, energy, casimir at 17 significant digits."""
        cols = (
            self.times,
            self.x,
            self.p,
            self.s,
            self.ps,
            self.energy_series,
            self.casimir_series,
        )
        with open(path, "w", newline="") as fh:
            fh.write("t,x,p,s,ps,energy,casimir\n")
            for row in zip(*cols):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


@dataclass(frozen=True, eq=False)
class MomentTrajectory:
    """Moment-chart integration output (used for genuine Casimir-drift checks)."""

    times: np.ndarray
    x_mean: np.ndarray
    p_mean: np.ndarray
    dxx: np.ndarray
    dxp: np.ndarray
    dpp: np.ndarray
    energy_series: np.ndarray
    casimir_series: np.ndarray
    mass: float
    status: str = "ok"

    def state_at_index(self, i: int) -> SecondOrderState:
        return SecondOrderState(
            float(self.x_mean[i]),
            float(self.p_mean[i]),
            float(self.dxx[i]),
            float(self.dxp[i]),
            float(self.dpp[i]),
        )


def effective_hamiltonian(
    state: SecondOrderState, pot: PotentialModel, mass: float
) -> float:
    """Second-order effective energy in the moment chart."""
    pot.require_domain(state.x_mean)
    x = state.x_mean
    return (
        state.p_mean**2 / (2.0 * mass)
        + mass * float(pot.phi(x))
        + state.dpp / (2.0 * mass)
        + 0.5 * mass * float(pot.d2phi(x)) * state.dxx
    )


def effective_hamiltonian_canonical(
    state: CanonicalState, pot: PotentialModel, mass: float
) -> float:
    """Second-order effective energy in the canonical chart.

    Equals :func:`effective_hamiltonian` after the chart map; the width
    sector contributes p_s^2/2m + U/(2 m s^2) + (m/2) Phi'' s^2.
    """
    pot.require_domain(state.x)
    e = state.p**2 / (2.0 * mass) + mass * float(pot.phi(state.x))
    if state.is_point_particle:
        return e
    return (
        e
        + state.ps**2 / (2.0 * mass)
        + state.u_casimir / (2.0 * mass * state.s**2)
        + 0.5 * mass * float(pot.d2phi(state.x)) * state.s**2
    )


def eom_rhs_canonical(
    state: CanonicalState, pot: PotentialModel, mass: float
) -> np.ndarray:
    """Hamiltonian flow d/dt (x, p, s, p_s) in the canonical chart.

    In terms of the field strength g = Phi':

        x' = p/m,   p'  = -m (g + Phi''' s^2 / 2),
        s' = ps/m,  ps' = -m Phi'' s + U/(m s^3).

    For the minimal Gaussian U = hbar^2/4 the width force is the familiar
    hbar^2/(4 m s^3).  Point-particle states keep a frozen width sector.
    """
    pot.require_domain(state.x)
    if state.is_point_particle:
        return np.array(
            [state.p / mass, -mass * float(pot.dphi(state.x)), 0.0, 0.0]
        )
    if state.s <= 0.0:
        raise SingularityError(f"width must be positive, got s={state.s!r}")
    x, s = state.x, state.s
    return np.array(
        [
            state.p / mass,
            -mass * (float(pot.dphi(x)) + 0.5 * float(pot.d3phi(x)) * s * s),
            state.ps / mass,
            -mass * float(pot.d2phi(x)) * s + state.u_casimir / (mass * s**3),
        ]
    )


def eom_rhs_moments(
    state: SecondOrderState, pot: PotentialModel, mass: float
) -> np.ndarray:
    """Bracket-generated flow of the five moment coordinates.

    This is Pi(z) . grad H with the second-order Poisson tensor and the
    effective Hamiltonian; it agrees with :func:`eom_rhs_canonical` under the
    chart map.
    """
    pot.require_domain(state.x_mean)
    x = state.x_mean
    d2 = float(pot.d2phi(x))
    return np.array(
        [
            state.p_mean / mass,
            -mass * (float(pot.dphi(x)) + 0.5 * float(pot.d3phi(x)) * state.dxx),
            2.0 * state.dxp / mass,
            state.dpp / mass - mass * d2 * state.dxx,
            -2.0 * mass * d2 * state.dxp,
        ]
    )


def _canonical_rhs_arrays(pot: PotentialModel, mass: float, u: float, width_active: bool):
    if width_active:

        def rhs(t, y):
            x, p, s, ps = y
            return (
                p / mass,
                -mass * (pot.dphi(x) + 0.5 * pot.d3phi(x) * s * s),
                ps / mass,
                -mass * pot.d2phi(x) * s + u / (mass * s * s * s),
            )

    else:

        def rhs(t, y):
            x, p = y[0], y[1]
            return (p / mass, -mass * pot.dphi(x), 0.0, 0.0)

    return rhs


def _energy_arrays(pot, mass, x, p, s, ps, u, width_active):
    e = p * p / (2.0 * mass) + mass * pot.phi(x)
    if width_active:
        e = (
            e
            + ps * ps / (2.0 * mass)
            + u / (2.0 * mass * s * s)
            + 0.5 * mass * pot.d2phi(x) * s * s
        )
    return e


def _casimir_arrays(s, ps, u, width_active):
    if not width_active:
        return np.zeros_like(s)
    dxx = s * s
    dxp = s * ps
    dpp = ps * ps + u / dxx
    return dxx * dpp - dxp * dxp


def _make_guard_events(initial, pot, width_active, s_floor, x_floor):
    events = []
    kinds = []
    if width_active:
        if s_floor is None:
            s_floor = SINGULARITY_FLOOR_REL * max(abs(initial.x), initial.s, 1e-300)

        def s_guard(t, y, _floor=s_floor):
            return y[2] - _floor

        s_guard.terminal = True
        s_guard.direction = -1.0
        events.append(s_guard)
        kinds.append("width floor")
    if pot.x_min is not None:
        if x_floor is None:
            x_floor = pot.x_min + SINGULARITY_FLOOR_REL * max(abs(initial.x), 1e-300)

        def x_guard(t, y, _floor=x_floor):
            return y[0] - _floor

        x_guard.terminal = True
        x_guard.direction = -1.0
        events.append(x_guard)
        kinds.append("domain floor")
    return events, kinds


def integrate_canonical(
    initial: CanonicalState,
    pot: PotentialModel,
    mass: float,
    t_span: tuple,
    cfg: IntegratorConfig | None = None,
    *,
    events: Sequence[Callable] = (),
    n_samples: int = 800,
    s_floor: float | None = None,
    x_floor: float | None = None,
) -> Trajectory:
    """Integrate the canonical-chart flow over ``t_span``.

    User ``events`` are scipy-style callables ``f(t, y)`` with optional
    ``terminal``/``direction`` attributes; their trigger times are reported in
    ``Trajectory.event_times``.  Width and domain guards are installed
    automatically; hitting one returns the partial trajectory flagged with
    status "singular" rather than raising.
    """
    cfg = cfg or IntegratorConfig()
    pot.require_domain(initial.x)
    t0, tf = float(t_span[0]), float(t_span[1])
    if not (math.isfinite(t0) and math.isfinite(tf)) or tf <= t0:
        raise ConfigurationError(f"bad time span {t_span!r}")
    width_active = not initial.is_point_particle
    u = initial.u_casimir
    y0 = np.array([initial.x, initial.p, initial.s, initial.ps])

    if cfg.method == "fixed_step":
        if events:
            raise ConfigurationError("fixed_step integration does not support events")
        return _integrate_verlet(
            initial, pot, mass, (t0, tf), cfg, n_samples, s_floor, x_floor
        )

    rhs = _canonical_rhs_arrays(pot, mass, u, width_active)
    guard_events, guard_kinds = _make_guard_events(
        initial, pot, width_active, s_floor, x_floor
    )
    user_events = list(events)
    all_events = user_events + guard_events
    t_eval = np.linspace(t0, tf, max(int(n_samples), 2))
    sol = solve_ivp(
        rhs,
        (t0, tf),
        y0,
        method="RK45",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        dense_output=True,
        t_eval=t_eval,
        events=all_events or None,
        max_step=cfg.h_max,
        first_step=cfg.h_init,
    )
    if sol.status == -1:
        raise ConfigurationError(f"integration failed: {sol.message}")

    t_end = None
    if sol.t_events:
        t_end = max((te[-1] for te in sol.t_events if len(te) > 0), default=None)

    status = "ok"
    message = ""
    if sol.status == 1:
        n_user = len(user_events)
        fired_guard = [
            guard_kinds[i]
            for i in range(len(guard_events))
            if len(sol.t_events[n_user + i]) > 0
        ]
        if fired_guard:
            status = "singular"
            message = f"hit {', '.join(fired_guard)} at t={t_end!r}"
        else:
            status = "event"

    ts = sol.t
    ys = sol.y
    # A terminal event truncates t_eval; append the exact stop time.
    if sol.status == 1 and t_end is not None and (len(ts) == 0 or t_end > ts[-1]):
        ts = np.append(ts, t_end)
        ys = np.column_stack([ys, sol.sol(t_end)]) if ys.size else sol.sol(t_end)[:, None]
    if len(ts) == 0:
        ts = np.array([t0])
        ys = y0[:, None]

    x_arr, p_arr, s_arr, ps_arr = ys
    energy = _energy_arrays(pot, mass, x_arr, p_arr, s_arr, ps_arr, u, width_active)
    cas = _casimir_arrays(s_arr, ps_arr, u, width_active)
    return Trajectory(
        times=ts,
        x=x_arr,
        p=p_arr,
        s=s_arr,
        ps=ps_arr,
        energy_series=np.asarray(energy, dtype=float),
        casimir_series=np.asarray(cas, dtype=float),
        mass=mass,
        u_casimir=u,
        status=status,
        message=message,
        event_times=tuple(
            tuple(map(float, sol.t_events[i])) for i in range(len(user_events))
        )
        if sol.t_events
        else (),
        _dense=sol.sol,
    )


def _integrate_verlet(initial, pot, mass, t_span, cfg, n_samples, s_floor, x_floor):
    """Kick-drift-kick Stoermer-Verlet on the separable canonical Hamiltonian."""
    if cfg.h_init is None:
        raise ConfigurationError("fixed_step integration requires h_init")
    t0, tf = t_span
    width_active = not initial.is_point_particle
    u = initial.u_casimir
    if s_floor is None:
        s_floor = SINGULARITY_FLOOR_REL * max(abs(initial.x), initial.s, 1e-300)
    if x_floor is None and pot.x_min is not None:
        x_floor = pot.x_min + SINGULARITY_FLOOR_REL * max(abs(initial.x), 1e-300)

    n_steps = int(math.ceil((tf - t0) / cfg.h_init))
    if n_steps > cfg.max_steps:
        raise ConfigurationError(
            f"{n_steps} steps exceed max_steps={cfg.max_steps}"
        )
    h = (tf - t0) / n_steps
    stride = max(1, n_steps // max(int(n_samples) - 1, 1))

    def force(x, s):
        fx = -mass * (pot.dphi(x) + (0.5 * pot.d3phi(x) * s * s if width_active else 0.0))
        fs = (
            -mass * pot.d2phi(x) * s + u / (mass * s * s * s)
            if width_active
            else 0.0
        )
        return fx, fs

    x, p, s, ps = initial.x, initial.p, initial.s, initial.ps
    rows = [(t0, x, p, s, ps)]
    status, message = "ok", ""
    fx, fs = force(x, s)
    for k in range(1, n_steps + 1):
        p_half = p + 0.5 * h * fx
        ps_half = ps + 0.5 * h * fs
        x = x + h * p_half / mass
        s = s + h * ps_half / mass
        if width_active and s <= s_floor:
            status, message = "singular", f"width floor at step {k}"
            break
        if x_floor is not None and x <= x_floor:
            status, message = "singular", f"domain floor at step {k}"
            break
        fx, fs = force(x, s)
        p = p_half + 0.5 * h * fx
        ps = ps_half + 0.5 * h * fs
        if k % stride == 0 or k == n_steps:
            rows.append((t0 + k * h, x, p, s, ps))

    arr = np.array(rows, dtype=float).T
    ts, x_arr, p_arr, s_arr, ps_arr = arr
    energy = _energy_arrays(pot, mass, x_arr, p_arr, s_arr, ps_arr, u, width_active)
    cas = _casimir_arrays(s_arr, ps_arr, u, width_active)
    dense = None
    if len(ts) >= 2:
        spline = CubicSpline(ts, np.vstack([x_arr, p_arr, s_arr, ps_arr]), axis=1)
        dense = lambda t: spline(t)
    return Trajectory(
        times=ts,
        x=x_arr,
        p=p_arr,
        s=s_arr,
        ps=ps_arr,
        energy_series=np.asarray(energy, dtype=float),
        casimir_series=np.asarray(cas, dtype=float),
        mass=mass,
        u_casimir=u,
        status=status,
        message=message,
        _dense=dense,
    )


def integrate_moments(
    initial: SecondOrderState,
    pot: PotentialModel,
    mass: float,
    t_span: tuple,
    cfg: IntegratorConfig | None = None,
    *,
    n_samples: int = 800,
) -> MomentTrajectory:
    """Integrate the five-coordinate moment-chart flow directly.

    Unlike the canonical chart, where U is a parameter, the moment chart
    conserves the Casimir only dynamically, so ``casimir_series`` here is a
    genuine integrator-quality diagnostic.
    """
    cfg = cfg or IntegratorConfig()
    if cfg.method != "adaptive_rk":
        raise ConfigurationError("integrate_moments supports adaptive_rk only")
    pot.require_domain(initial.x_mean)
    t0, tf = float(t_span[0]), float(t_span[1])

    def rhs(t, z):
        x, p, dxx, dxp, dpp = z
        d2 = pot.d2phi(x)
        return (
            p / mass,
            -mass * (pot.dphi(x) + 0.5 * pot.d3phi(x) * dxx),
            2.0 * dxp / mass,
            dpp / mass - mass * d2 * dxx,
            -2.0 * mass * d2 * dxp,
        )

    z0 = np.array([initial.x_mean, initial.p_mean, initial.dxx, initial.dxp, initial.dpp])
    sol = solve_ivp(
        rhs,
        (t0, tf),
        z0,
        method="RK45",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        t_eval=np.linspace(t0, tf, max(int(n_samples), 2)),
        max_step=cfg.h_max,
        first_step=cfg.h_init,
    )
    if sol.status != 0:
        raise ConfigurationError(f"moment integration failed: {sol.message}")
    x, p, dxx, dxp, dpp = sol.y
    energy = (
        p * p / (2.0 * mass)
        + mass * pot.phi(x)
        + dpp / (2.0 * mass)
        + 0.5 * mass * pot.d2phi(x) * dxx
    )
    cas = dxx * dpp - dxp * dxp
    return MomentTrajectory(
        times=sol.t,
        x_mean=x,
        p_mean=p,
        dxx=dxx,
        dxp=dxp,
        dpp=dpp,
        energy_series=np.asarray(energy, dtype=float),
        casimir_series=np.asarray(cas, dtype=float),
        mass=mass,
    )


def closed_form_free(initial: SecondOrderState, mass: float, t: float) -> SecondOrderState:
    """Exact free-particle moment solution, polynomial in t.

    Dxx(t) = Dxx0 + 2 Dxp0 t/m + Dpp0 t^2/m^2, Dxp(t) = Dxp0 + Dpp0 t/m,
    Dpp constant; the centroid moves classically.
    """
    tau = t / mass
    return SecondOrderState(
        initial.x_mean + initial.p_mean * tau,
        initial.p_mean,
        initial.dxx + 2.0 * initial.dxp * tau + initial.dpp * tau * tau,
        initial.dxp + initial.dpp * tau,
        initial.dpp,
    )


def closed_form_linear(
    initial: SecondOrderState, mass: float, g: float, t: float
) -> SecondOrderState:
    """Moment solution in a uniform field: free fluctuations, falling centroid."""
    free = closed_form_free(initial, mass, t)
    return replace(
        free,
        x_mean=free.x_mean - 0.5 * g * t * t,
        p_mean=free.p_mean - mass * g * t,
    )


@dataclass(frozen=True)
class ScaleSet:
    """Characteristic scales for nondimensionalizing the 1/r problem.

    t_c = sqrt(r_c^3 / GM), p_c = mass * r_c / t_c, e_c = GM * mass / r_c.
    """

    r_c: float
    t_c: float
    p_c: float
    e_c: float
    gm: float
    mass: float

    def __post_init__(self):
        for name in ("r_c", "t_c", "p_c", "e_c", "gm", "mass"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"{name} must be positive")
        if abs(self.t_c**2 * self.gm - self.r_c**3) > 1e-12 * self.r_c**3:
            raise ConfigurationError("t_c inconsistent with r_c and GM")

    @classmethod
    def for_body(cls, gm: float, r_c: float, mass: float) -> "ScaleSet":
        t_c = math.sqrt(r_c**3 / gm)
        return cls(
            r_c=r_c,
            t_c=t_c,
            p_c=mass * r_c / t_c,
            e_c=gm * mass / r_c,
            gm=gm,
            mass=mass,
        )


def nondimensionalize(state: CanonicalState, scales: ScaleSet) -> CanonicalState:
    """Rescale an SI canonical state so that GM = m = 1."""
    rp = scales.r_c * scales.p_c
    return CanonicalState(
        state.x / scales.r_c,
        state.p / scales.p_c,
        state.s / scales.r_c,
        state.ps / scales.p_c,
        state.u_casimir / (rp * rp),
    )


def redimensionalize(state: CanonicalState, scales: ScaleSet) -> CanonicalState:
    """Inverse of :func:`nondimensionalize`."""
    rp = scales.r_c * scales.p_c
    return CanonicalState(
        state.x * scales.r_c,
        state.p * scales.p_c,
        state.s * scales.r_c,
        state.ps * scales.p_c,
        state.u_casimir * rp * rp,
    )


def u_parameter(
    mass: float,
    big_mass: float,
    r_c: float,
    hbar: float = HBAR_SI,
    g_newton: float = G_SI,
) -> float:
    """Dimensionless minimal uncertainty volume u = (hbar^2/4)/(G M m^2 r_c).

    The single mass-dependent constant of the nondimensional 1/r system;
    about 1e-36 for a neutron near the Earth's surface and 1e-86 for a
    10 gram mass.
    """
    if mass <= 0.0 or big_mass <= 0.0 or r_c <= 0.0 or hbar <= 0.0 or g_newton <= 0.0:
        raise ConfigurationError("u_parameter inputs must be positive")
    return (hbar * hbar / 4.0) / (g_newton * big_mass * mass * mass * r_c)
