"""Wave-function data (density and phase) generated from moment data.

The reconstruction expands rho / sqrt(w) in polynomials orthogonal under a
shifted, rescaled Hermite weight

    w(x) = exp(-(x - m)^2 / alpha^2),
    L_n(x) = H_n((x - m)/alpha),    N_n = sqrt(pi) * alpha * 2^n * n!,

so that the expansion coefficients are expectation values of polynomials and
therefore linear in the raw moments:

    rho(x)    = w(x) * sum_n <L_n> L_n(x) / N_n,
    d theta/dx = [w(x) / (hbar rho(x))] * sum_n Re<L_n p> L_n(x) / N_n.

Convention note: alpha is a length; the weight has variance alpha^2/2, so the
packet-matched choice at second order is alpha^2 = 2*Dxx (with m = <x> this
collapses the density onto the plain Gaussian and the phase derivative onto
<p>/hbar + (x - <x>) Dxp/(hbar Dxx)).  By construction, quadrature moments of
the reconstruction reproduce the input moments up to the truncation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite import herm2poly
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .errors import (
    DegenerateStateError,
    NoRepresentingDistributionError,
    PhaseDomainError,
    UncertaintyViolationError,
    UnsupportedOrderError,
)
from .moments import (
    HbarContext,
    RawMomentSequence,
    SecondOrderState,
    casimir,
    hankel_psd_check,
    mixed_sequence_for_state,
    raw_sequence_for_state,
)

__all__ = [
    "HermiteBasis",
    "ReconstructedDensity",
    "PhaseDerivative",
    "ReconstructedState",
    "GaussianWavePacket",
    "reconstruct_density",
    "reconstruct_phase_derivative",
    "reconstruct_state",
    "gaussian_from_moments",
    "global_phase_free",
    "accelerated_frame_transform",
    "free_gaussian_wavefunction",
    "quadrature_nodes",
    "quadrature_moments",
]

# Gauss-Hermite node count per the validated rule: at least 4*(order + 2).
_MIN_NODES = 24


@dataclass(frozen=True)
class HermiteBasis:
    """Shifted/rescaled Hermite system: center m, width parameter alpha, max degree."""

    center: float
    alpha: float
    order: int

    def __post_init__(self):
        if not (self.alpha > 0.0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if self.order < 0:
            raise ValueError("order must be nonnegative")

    @classmethod
    def for_state(cls, state: SecondOrderState, order: int = 2) -> "HermiteBasis":
        """Packet-matched basis: m = <x>, alpha = sqrt(2*Dxx)."""
        if state.dxx <= 0.0:
            raise DegenerateStateError("basis for a state needs Dxx > 0")
        return cls(state.x_mean, math.sqrt(2.0 * state.dxx), order)

    def weight(self, x):
        y = (np.asarray(x, dtype=float) - self.center) / self.alpha
        return np.exp(-y * y)

    def polynomial(self, n: int) -> Polynomial:
        """L_n as a numpy Polynomial in x (monomial coefficients l_{n,k})."""
        herm = np.zeros(n + 1)
        herm[n] = 1.0
        in_y = Polynomial(herm2poly(herm))
        return in_y(Polynomial([-self.center / self.alpha, 1.0 / self.alpha]))

    def norm(self, n: int) -> float:
        """N_n = integral of w * L_n^2."""
        return math.sqrt(math.pi) * self.alpha * 2.0**n * math.factorial(n)

    def orthonormal(self, n: int, x):
        """u_n(x) = sqrt(w) L_n / sqrt(N_n)."""
        return np.sqrt(self.weight(x)) * self.polynomial(n)(np.asarray(x, float)) / math.sqrt(self.norm(n))


def quadrature_nodes(basis: HermiteBasis, n_nodes: int | None = None) -> tuple:
    """Nodes and weights so that integral f(x) w(x) dx ~= sum W_i f(x_i)."""
    if n_nodes is None:
        n_nodes = max(4 * (basis.order + 2), _MIN_NODES)
    y, w = np.polynomial.hermite.hermgauss(n_nodes)
    return basis.center + basis.alpha * y, basis.alpha * w


@dataclass(frozen=True, eq=False)
class ReconstructedDensity:
    """Callable density rho(x) = w(x) * P(x) with its expansion data.

    ``negative_regions`` lists (lo, hi) intervals inside the scanned window
    where the truncation drives rho below zero; they are reported, never
    clipped.
    """

    basis: HermiteBasis
    ln_expectations: np.ndarray
    poly: Polynomial
    negative_regions: tuple = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.basis.weight(x) * self.poly(x)

    @property
    def is_nonnegative(self) -> bool:
        return len(self.negative_regions) == 0

    @property
    def coefficients(self) -> np.ndarray:
        """Orthonormal-basis coefficients c_n = <L_n>/sqrt(N_n)."""
        return np.array(
            [
                self.ln_expectations[n] / math.sqrt(self.basis.norm(n))
                for n in range(self.basis.order + 1)
            ]
        )


def _scan_negative_regions(basis, poly, n_grid=4001):
    """Sign scan of P on the +-6 sigma window of the weight (sigma = alpha/sqrt(2))."""
    sigma = basis.alpha / math.sqrt(2.0)
    lo = basis.center - 6.0 * sigma
    hi = basis.center + 6.0 * sigma
    xs = np.linspace(lo, hi, n_grid)
    vals = poly(xs)
    tol = -1e-12 * max(float(np.max(np.abs(vals))), 1e-300)
    neg = vals < tol
    if not np.any(neg):
        return ()
    regions = []
    i = 0
    while i < n_grid:
        if neg[i]:
            j = i
            while j + 1 < n_grid and neg[j + 1]:
                j += 1
            a = xs[i] if i == 0 else brentq(poly, xs[i - 1], xs[i])
            b = xs[j] if j == n_grid - 1 else brentq(poly, xs[j], xs[j + 1])
            regions.append((float(a), float(b)))
            i = j + 1
        else:
            i += 1
    return tuple(regions)


def reconstruct_density(
    raw: RawMomentSequence,
    basis: HermiteBasis,
    *,
    check_hankel: bool = True,
) -> ReconstructedDensity:
    """Density from raw moments, truncated at ``basis.order``.

    Requires the Hankel positivity check to pass on the moments up to the
    truncation order (otherwise no distribution represents them and
    :class:`NoRepresentingDistributionError` is raised).  Quadrature moments
    of the result reproduce the inputs up to the truncation order.
    """
    order = basis.order
    if raw.order < order:
        raise UnsupportedOrderError(
            f"basis order {order} exceeds supplied moment order {raw.order}"
        )
    if check_hankel and raw.order >= 2:
        ok, min_eig = hankel_psd_check(raw.truncated(max(order, 2)))
        if not ok:
            raise NoRepresentingDistributionError(
                f"Hankel check failed (min eigenvalue {min_eig:.3e}); "
                "no distribution has these moments"
            )
    m = np.asarray(raw.moments[: order + 1], dtype=float)
    ln_exp = np.empty(order + 1)
    poly = Polynomial([0.0])
    for n in range(order + 1):
        ln = basis.polynomial(n)
        coef = np.zeros(order + 1)
        coef[: len(ln.coef)] = ln.coef
        ln_exp[n] = float(coef @ m)
        poly = poly + (ln_exp[n] / basis.norm(n)) * ln
    regions = _scan_negative_regions(basis, poly)
    return ReconstructedDensity(basis, ln_exp, poly, regions)


@dataclass(frozen=True, eq=False)
class PhaseDerivative:
    """Callable d theta/dx built from symmetric mixed moments.

    Since rho = w * P and the phase numerator is w * Q, the weight cancels and
    the phase derivative is the rational function Q/(hbar * P); it is only
    singular where the reconstructed density crosses its floor.
    """

    density: ReconstructedDensity
    lnp_expectations: np.ndarray
    poly: Polynomial
    hbar: float
    rho_floor: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = self.density.poly(x)
        # The weight is strictly positive, so sign(rho) = sign(P); testing P
        # avoids spurious domain errors where the weight underflows to 0.
        if self.rho_floor == 0.0:
            bad = p <= 0.0
        else:
            bad = self.density.basis.weight(x) * p <= self.rho_floor
        if np.any(bad):
            raise PhaseDomainError(
                f"phase derivative evaluated where rho <= {self.rho_floor!r}"
            )
        return self.poly(x) / (self.hbar * p)


def reconstruct_phase_derivative(
    mixed: Sequence[float],
    density: ReconstructedDensity,
    ctx: HbarContext,
    *,
    rho_floor: float = 0.0,
) -> PhaseDerivative:
    """Phase derivative from Re<x^n p>, n = 0..order, against a reconstructed density.

    With first-order data (Re<xp> = <x><p>) and m = <x> this is the plane-wave
    phase <p>/hbar; with second-order data and alpha^2 = 2*Dxx it becomes
    <p>/hbar + (x - <x>) Dxp/(hbar Dxx).
    """
    basis = density.basis
    order = basis.order
    if len(mixed) < order + 1:
        raise UnsupportedOrderError(
            f"need mixed moments up to n = {order}, got {len(mixed) - 1}"
        )
    mx = np.asarray(mixed[: order + 1], dtype=float)
    lnp = np.empty(order + 1)
    poly = Polynomial([0.0])
    for n in range(order + 1):
        ln = basis.polynomial(n)
        coef = np.zeros(order + 1)
        coef[: len(ln.coef)] = ln.coef
        lnp[n] = float(coef @ mx)
        poly = poly + (lnp[n] / basis.norm(n)) * ln
    return PhaseDerivative(density, lnp, poly, ctx.hbar, rho_floor)


@dataclass(frozen=True, eq=False)
class ReconstructedState:
    """Density plus phase derivative plus the (gauge) global phase offset.

    ``theta0`` is not determined by moment data; ``theta0_is_gauge`` stays
    True unless a caller pins it from outside information.
    """

    density: ReconstructedDensity
    phase_derivative: PhaseDerivative
    theta0: float = 0.0
    theta0_is_gauge: bool = True

    @property
    def density_coeffs(self) -> np.ndarray:
        return self.density.coefficients

    @property
    def phase_deriv_coeffs(self) -> np.ndarray:
        return self.phase_derivative.lnp_expectations

    def theta(self, xs) -> np.ndarray:
        """Phase profile on a grid: cumulative integral of theta' from xs[0]."""
        xs = np.asarray(xs, dtype=float)
        dth = self.phase_derivative(xs)
        return self.theta0 + cumulative_trapezoid(dth, xs, initial=0.0)

    def psi(self, xs) -> np.ndarray:
        """sqrt(rho) * exp(i theta) on a grid (theta integrated from xs[0])."""
        xs = np.asarray(xs, dtype=float)
        return np.sqrt(self.density(xs)) * np.exp(1j * self.theta(xs))

    def sample(self, xs) -> np.ndarray:
        """Columns (x, rho, dtheta_dx, theta) as written by the CSV export."""
        xs = np.asarray(xs, dtype=float)
        return np.column_stack([xs, self.density(xs), self.phase_derivative(xs), self.theta(xs)])


def reconstruct_state(
    state: SecondOrderState,
    ctx: HbarContext,
    order: int = 2,
    basis: HermiteBasis | None = None,
) -> ReconstructedState:
    """Full second-order reconstruction pipeline for a moment state."""
    if basis is None:
        basis = HermiteBasis.for_state(state, order)
    raw = raw_sequence_for_state(state, order)
    density = reconstruct_density(raw, basis)
    phase = reconstruct_phase_derivative(
        mixed_sequence_for_state(state, order), density, ctx
    )
    return ReconstructedState(density, phase)


def quadrature_moments(density: ReconstructedDensity, order: int) -> np.ndarray:
    """Raw moments of a reconstructed density by Gauss-Hermite quadrature."""
    xs, ws = quadrature_nodes(density.basis, max(4 * (order + 2), _MIN_NODES))
    p = density.poly(xs)
    return np.array([float(np.sum(ws * p * xs**a)) for a in range(order + 1)])


@dataclass(frozen=True)
class GaussianWavePacket:
    """Gaussian template psi = exp(A x^2 + B x + C) parametrized by moments.

    A = -(a + i alpha_im), B = b + i beta, C = c + i gamma with

        a = 1/(4 Dxx),            b = <x>/(2 Dxx),
        alpha_im = -Dxp/(2 Dxx hbar),  beta = <p>/hbar - Dxp <x>/(Dxx hbar),

    and c fixed by normalization.  ``gamma`` is the undetermined global
    phase.  A pure Gaussian saturates the uncertainty bound; states with
    larger U are reproduced in everything except Dpp and carry
    ``saturates_uncertainty = False``.
    """

    a: float
    b: float
    alpha_im: float
    beta: float
    c: float
    hbar: float
    gamma: float = 0.0
    saturates_uncertainty: bool = True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        expo = (
            -(self.a + 1j * self.alpha_im) * x * x
            + (self.b + 1j * self.beta) * x
            + (self.c + 1j * self.gamma)
        )
        return np.exp(expo)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(2.0 * (-self.a * x * x + self.b * x + self.c))

    def phase(self, x):
        x = np.asarray(x, dtype=float)
        return -self.alpha_im * x * x + self.beta * x + self.gamma

    def phase_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -2.0 * self.alpha_im * x + self.beta


def gaussian_from_moments(
    state: SecondOrderState, ctx: HbarContext
) -> GaussianWavePacket:
    """Gaussian wave packet whose statistics match a second-order state.

    Requires Dxx > 0 and the uncertainty bound at lambda = 1 within the usual
    clamp window.  When U exceeds hbar^2/4 the state is not pure and the
    returned template is flagged (its Dpp is the pure-state value
    (hbar^2/4 + Dxp^2)/Dxx, smaller than the input).
    """
    if state.dxx <= 0.0:
        raise DegenerateStateError("gaussian_from_moments requires Dxx > 0")
    u = casimir(state)
    u_min = ctx.hbar * ctx.hbar / 4.0
    if u < u_min * (1.0 - 1e-9):
        raise UncertaintyViolationError(
            f"uncertainty volume {u!r} below hbar^2/4 = {u_min!r}"
        )
    hbar = ctx.hbar
    a = 1.0 / (4.0 * state.dxx)
    b = state.x_mean / (2.0 * state.dxx)
    alpha_im = -state.dxp / (2.0 * state.dxx * hbar)
    beta = state.p_mean / hbar - state.dxp * state.x_mean / (state.dxx * hbar)
    c = -b * b / (4.0 * a) + 0.25 * math.log(2.0 * a / math.pi)
    return GaussianWavePacket(
        a,
        b,
        alpha_im,
        beta,
        c,
        hbar,
        saturates_uncertainty=u <= u_min * (1.0 + 1e-9),
    )


def global_phase_free(
    t: float, p0: float, mass: float, omega_sigma: float, ctx: HbarContext
) -> float:
    """Global phase of the spreading free packet,

        gamma(t) = -p0^2 t/(2 m hbar) - arctan(omega_sigma t)/2,

    solving d gamma/dt = -p0^2/(2 m hbar) - omega_sigma/(2 (1 + omega_sigma^2 t^2))
    with gamma(0) = 0; for p0 = 0 it tends to -pi/4 at late times.
    """
    if omega_sigma < 0.0:
        raise ValueError("spreading frequency must be nonnegative")
    return -p0 * p0 * t / (2.0 * mass * ctx.hbar) - 0.5 * math.atan(omega_sigma * t)


def accelerated_frame_transform(
    phi: Callable, accel: float, mass: float, ctx: HbarContext
) -> Callable:
    """Map a solution phi(x, t) into a frame with constant acceleration.

        psi(x, t) = phi(x + a t^2/2, t) * exp[-(i m a t/hbar)(x + a t^2/6)].

    With phi a free packet and a = g this produces the uniform-field packet
    up to an x-independent phase.
    """
    hbar = ctx.hbar

    def psi(x, t):
        x = np.asarray(x, dtype=float)
        shift = x + 0.5 * accel * t * t
        factor = np.exp(-1j * mass * accel * t / hbar * (x + accel * t * t / 6.0))
        return phi(shift, t) * factor

    return psi


def free_gaussian_wavefunction(
    x0: float, p0: float, sigma: float, mass: float, ctx: HbarContext
) -> Callable:
    """Closed-form spreading minimal-uncertainty packet psi(x, t).

    Initial width sigma with Dxp(0) = 0 and U = hbar^2/4; the spreading
    frequency is omega = hbar/(2 m sigma^2) and the global phase follows
    :func:`global_phase_free`, so this solves the free wave equation exactly.
    """
    if sigma <= 0.0:
        raise DegenerateStateError("initial width must be positive")
    hbar = ctx.hbar
    omega = hbar / (2.0 * mass * sigma * sigma)

    def psi(x, t):
        x = np.asarray(x, dtype=float)
        spread = 1.0 + (omega * t) ** 2
        center = x0 + p0 * t / mass
        gamma = global_phase_free(t, p0, mass, omega, ctx)
        amp = (2.0 * math.pi * sigma * sigma * spread) ** -0.25
        arg = (
            -((x - center) ** 2) / (4.0 * sigma * sigma * spread) * (1.0 - 1j * omega * t)
            + 1j * p0 * x / hbar
            + 1j * gamma
        )
        return amp * np.exp(arg)

    return psi
