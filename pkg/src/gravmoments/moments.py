"""Second-order quantum moment states and their canonical phase-space chart.

The dynamical state of a semiclassical wave packet at second order is the
five-tuple (<x>, <p>, Dxx, Dxp, Dpp) of means and central fluctuations in
completely symmetric (Weyl) ordering.  The fluctuation block carries a
non-canonical Poisson structure,

    {Dxx, Dxp} = 2 Dxx,   {Dxp, Dpp} = 2 Dpp,   {Dxx, Dpp} = 4 Dxp,

which becomes canonical in the chart

    Dxx = s^2,   Dxp = s * p_s,   Dpp = p_s^2 + U / s^2,

where s is the packet width, p_s its conjugate momentum, and U the conserved
uncertainty volume Dxx*Dpp - Dxp^2 >= hbar^2/4.  This module owns the state
types, raw/central moment algebra, the chart transform, and the validity
checks (uncertainty bound, Hankel positivity, semiclassical hierarchy) used
by the rest of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateStateError,
    UncertaintyViolationError,
    UnsupportedOrderError,
)

__all__ = [
    "HbarContext",
    "SecondOrderState",
    "CanonicalState",
    "RawMomentSequence",
    "casimir",
    "to_canonical",
    "from_canonical",
    "central_from_raw",
    "raw_from_central",
    "hankel_psd_check",
    "hierarchy_check",
    "second_order_central",
    "symmetric_mixed_from_central",
    "mixed_sequence_for_state",
    "raw_sequence_for_state",
    "poisson_tensor",
    "poisson_bracket",
    "UNCERTAINTY_CLAMP_REL",
    "HANKEL_PSD_REL_TOL",
]

# States with uncertainty volume within this relative window below
# lambda*hbar^2/4 are attributed to integrator rounding and clamped to the
# bound; anything lower is rejected.
UNCERTAINTY_CLAMP_REL = 1e-9

# PSD boundary tolerance for Hankel eigenvalues, relative to the matrix norm.
HANKEL_PSD_REL_TOL = 1e-12


def _require_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class HbarContext:
    """Value of hbar (1 in nondimensional work) and the Casimir scale lambda.

    ``lam`` measures the uncertainty volume in units of the minimum
    hbar^2/4; lambda = 1 is exact for Gaussian pure states and is the
    default everywhere.
    """

    hbar: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0.0):
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")
        if not (self.lam >= 1.0):
            raise ValueError(f"lambda must be >= 1, got {self.lam!r}")

    @property
    def u_min(self) -> float:
        """Smallest admissible uncertainty volume lambda*hbar^2/4."""
        return self.lam * self.hbar * self.hbar / 4.0


@dataclass(frozen=True)
class SecondOrderState:
    """Means and second-order central moments of a wave packet.

    Units are whatever the caller works in (SI or nondimensional); the
    uncertainty bound is only checked against an :class:`HbarContext` at the
    chart transform.  ``dxx = dxp = dpp = 0`` is the degenerate point-particle
    state used as the classical baseline.
    """

    x_mean: float
    p_mean: float
    dxx: float
    dxp: float
    dpp: float

    def __post_init__(self):
        for name in ("x_mean", "p_mean", "dxx", "dxp", "dpp"):
            _require_finite(name, getattr(self, name))
        if self.dxx < 0.0 or self.dpp < 0.0:
            raise DegenerateStateError(
                f"variances must be nonnegative, got dxx={self.dxx!r} dpp={self.dpp!r}"
            )
        if (self.dxx == 0.0 or self.dpp == 0.0) and not self.is_point_particle:
            raise DegenerateStateError(
                "zero variance is only allowed for the fully degenerate "
                "point-particle state (dxx = dxp = dpp = 0)"
            )

    @property
    def is_point_particle(self) -> bool:
        return self.dxx == 0.0 and self.dxp == 0.0 and self.dpp == 0.0


@dataclass(frozen=True)
class CanonicalState:
    """State in the canonical chart (x, p, s, p_s) with Casimir U.

    ``s = 0`` is accepted only together with ``ps = 0`` and ``u_casimir = 0``
    (point-particle mode); otherwise the width must be strictly positive.
    """

    x: float
    p: float
    s: float
    ps: float
    u_casimir: float

    def __post_init__(self):
        for name in ("x", "p", "s", "ps", "u_casimir"):
            _require_finite(name, getattr(self, name))
        if self.u_casimir < 0.0:
            raise UncertaintyViolationError(
                f"u_casimir must be nonnegative, got {self.u_casimir!r}"
            )
        if self.s < 0.0:
            raise DegenerateStateError(f"width s must be nonnegative, got {self.s!r}")
        if self.s == 0.0 and not self.is_point_particle:
            raise DegenerateStateError(
                "s = 0 is only allowed in point-particle mode (ps = 0, U = 0)"
            )

    @property
    def is_point_particle(self) -> bool:
        return self.s == 0.0 and self.ps == 0.0 and self.u_casimir == 0.0


@dataclass(frozen=True)
class RawMomentSequence:
    """Raw position moments <x^0> ... <x^N>, optionally with mixed moments.

    ``mixed[n]`` is the Weyl-symmetric raw mixed moment Re<x^n p> for
    n = 0 ... len(mixed)-1.  The zeroth moment must be exactly 1.
    """

    moments: tuple
    mixed: tuple | None = None

    def __post_init__(self):
        moments = tuple(float(v) for v in self.moments)
        object.__setattr__(self, "moments", moments)
        if self.mixed is not None:
            object.__setattr__(self, "mixed", tuple(float(v) for v in self.mixed))
        if len(moments) < 1:
            raise ValueError("at least the zeroth moment is required")
        if moments[0] != 1.0:
            raise ValueError(f"moments[0] must be exactly 1, got {moments[0]!r}")
        for i, v in enumerate(moments):
            _require_finite(f"moments[{i}]", v)

    @property
    def order(self) -> int:
        return len(self.moments) - 1

    def truncated(self, order: int) -> "RawMomentSequence":
        """Copy keeping moments (and mixed moments) up to ``order``."""
        if order > self.order:
            raise UnsupportedOrderError(
                f"sequence holds order {self.order}, requested {order}"
            )
        mixed = None
        if self.mixed is not None:
            mixed = self.mixed[: order + 1]
        return RawMomentSequence(self.moments[: order + 1], mixed)


def casimir(state: SecondOrderState) -> float:
    """Uncertainty volume U = Dxx*Dpp - Dxp^2, conserved by the second-order flow."""
    return state.dxx * state.dpp - state.dxp * state.dxp


def to_canonical(state: SecondOrderState, ctx: HbarContext) -> CanonicalState:
    """Map a moment state to the canonical chart (x, p, s, p_s, U).

    Raises :class:`DegenerateStateError` for dxx <= 0 and
    :class:`UncertaintyViolationError` when U falls below lambda*hbar^2/4 by
    more than the clamp window ``UNCERTAINTY_CLAMP_REL``; values inside the
    window are clamped to the bound (integrator rounding).
    """
    if state.dxx <= 0.0:
        raise DegenerateStateError(
            f"to_canonical requires dxx > 0, got dxx={state.dxx!r}"
        )
    u = casimir(state)
    u_min = ctx.u_min
    if u < u_min * (1.0 - UNCERTAINTY_CLAMP_REL):
        raise UncertaintyViolationError(
            f"uncertainty volume {u!r} below lambda*hbar^2/4 = {u_min!r}"
        )
    u = max(u, u_min)
    s = math.sqrt(state.dxx)
    return CanonicalState(state.x_mean, state.p_mean, s, state.dxp / s, u)


def from_canonical(state: CanonicalState) -> SecondOrderState:
    """Inverse chart map; exact for any valid canonical state."""
    if state.is_point_particle:
        return SecondOrderState(state.x, state.p, 0.0, 0.0, 0.0)
    s = state.s
    return SecondOrderState(
        state.x,
        state.p,
        s * s,
        s * state.ps,
        state.ps * state.ps + state.u_casimir / (s * s),
    )


def central_from_raw(raw: RawMomentSequence) -> list:
    """Central moments D(x^a), a = 2..N, from raw moments by de-centering.

    D(x^a) = sum_i C(a, i) (-<x>)^(a-i) <x^i>.
    """
    m = raw.moments
    if len(m) < 2:
        raise UnsupportedOrderError("need at least the first moment <x>")
    mean = m[1]
    out = []
    for a in range(2, len(m)):
        acc = 0.0
        for i in range(a + 1):
            acc += math.comb(a, i) * (-mean) ** (a - i) * m[i]
        out.append(acc)
    return out


def raw_from_central(mean: float, central: Sequence[float]) -> RawMomentSequence:
    """Raw moments from the mean and central moments D(x^2)..D(x^N).

    Inverse of :func:`central_from_raw`; the round trip is the identity up to
    floating rounding.
    """
    deltas = [1.0, 0.0] + [float(v) for v in central]
    moments = []
    for a in range(len(deltas)):
        acc = 0.0
        for i in range(a + 1):
            acc += math.comb(a, i) * mean ** (a - i) * deltas[i]
        moments.append(acc)
    return RawMomentSequence(tuple(moments))


def hankel_psd_check(raw: RawMomentSequence) -> tuple:
    """Positive-definiteness test for the Hankel matrices of a moment sequence.

    Builds (H_n)_ij = m_(i+j) for every n with 2n <= N and eigendecomposes
    each.  Returns ``(ok, min_eigenvalue)`` where ``ok`` is True when every
    matrix is PSD within ``HANKEL_PSD_REL_TOL * ||H||`` and
    ``min_eigenvalue`` is the smallest eigenvalue seen across all tested n.
    A failed check is a valid False result, not an error.
    """
    if raw.order < 2:
        raise ConfigurationError("hankel_psd_check needs moments up to order >= 2")
    m = np.asarray(raw.moments, dtype=float)
    ok = True
    min_eig = math.inf
    for n in range(raw.order // 2 + 1):
        idx = np.arange(n + 1)
        h = m[idx[:, None] + idx[None, :]]
        eigs = np.linalg.eigvalsh(h)
        low = float(eigs.min())
        min_eig = min(min_eig, low)
        scale = float(np.linalg.norm(h, 2))
        if low < -HANKEL_PSD_REL_TOL * max(scale, 1e-300):
            ok = False
    return ok, min_eig


def second_order_central(state: SecondOrderState) -> dict:
    """The three second-order central moments keyed by (a, b) powers."""
    return {(2, 0): state.dxx, (1, 1): state.dxp, (0, 2): state.dpp}


def hierarchy_check(
    central: Mapping,
    ctx: HbarContext,
    c_max: float,
    *,
    length_scale: float | None = None,
    momentum_scale: float | None = None,
) -> bool:
    """Concrete rendering of the semiclassical hierarchy D(x^a p^b) = O(hbar^((a+b)/2)).

    Checks |D(x^a p^b)| <= c_max * hbar^((a+b)/2) * L^a * P^b for every entry
    of ``central`` (a mapping (a, b) -> value).  L and P are user-supplied
    scale factors; in nondimensional units they are the classical length and
    momentum scales of the problem, in SI units they carry dimensions of
    length resp. momentum per square root of action so that the bound has the
    units of the moment.  The hierarchy is an asymptotic statement, so the
    scales cannot be chosen for the user; omitting them is an error.
    """
    if length_scale is None or momentum_scale is None:
        raise ConfigurationError(
            "hierarchy_check requires explicit length_scale and momentum_scale"
        )
    if length_scale <= 0.0 or momentum_scale <= 0.0:
        raise ConfigurationError("hierarchy scales must be positive")
    for (a, b), value in central.items():
        bound = (
            c_max
            * ctx.hbar ** ((a + b) / 2.0)
            * length_scale**a
            * momentum_scale**b
        )
        if abs(value) > bound:
            return False
    return True


def _central_x(k: int, central: Mapping) -> float:
    if k == 0:
        return 1.0
    if k == 1:
        return 0.0
    try:
        return central[(k, 0)]
    except KeyError:
        raise UnsupportedOrderError(f"central moment D(x^{k}) not supplied") from None


def _central_xp(k: int, central: Mapping) -> float:
    if k == 0:
        return 0.0
    if k == 1:
        try:
            return central[(1, 1)]
        except KeyError:
            raise UnsupportedOrderError("central moment D(xp) not supplied") from None
    if k == 2:
        # D(x^2 p) vanishes for Gaussian states; treat missing data as the
        # Gaussian closure rather than an error at this order.
        return central.get((2, 1), 0.0)
    try:
        return central[(k, 1)]
    except KeyError:
        raise UnsupportedOrderError(
            f"central moment D(x^{k} p) not supplied; orders n > 2 need explicit data"
        ) from None


def symmetric_mixed_from_central(
    n: int, x_mean: float, p_mean: float, central: Mapping
) -> float:
    """Weyl-symmetric raw mixed moment Re<x^n p> from central data and means.

    De-centers via the binomial theorem,

        Re<x^n p> = sum_k C(n, k) <x>^(n-k) [ <p> D(x^k) + D(x^k p) ],

    with D(x^0)=1, D(x)=0, D(x^0 p)=0.  For n = 2 a missing D(x^2 p) entry
    defaults to 0 (Gaussian closure); n > 2 requires explicit higher central
    moments in ``central`` and raises :class:`UnsupportedOrderError` otherwise.
    """
    if n < 0:
        raise ValueError("moment order must be nonnegative")
    total = 0.0
    for k in range(n + 1):
        weight = math.comb(n, k) * x_mean ** (n - k)
        total += weight * (p_mean * _central_x(k, central) + _central_xp(k, central))
    return total


def mixed_sequence_for_state(state: SecondOrderState, order: int = 2) -> tuple:
    """Re<x^n p> for n = 0..order built from a second-order state.

    Restricted to order <= 2; higher orders need moment data beyond the
    second-order state.
    """
    if order > 2:
        raise UnsupportedOrderError(
            "mixed moments beyond n = 2 need explicit higher-order data"
        )
    central = second_order_central(state)
    return tuple(
        symmetric_mixed_from_central(n, state.x_mean, state.p_mean, central)
        for n in range(order + 1)
    )


def raw_sequence_for_state(state: SecondOrderState, order: int = 2) -> RawMomentSequence:
    """Raw moment sequence (with mixed moments) of a second-order state."""
    if order > 2:
        raise UnsupportedOrderError(
            "raw moments beyond order 2 need explicit higher-order data"
        )
    central = [state.dxx] if order >= 2 else []
    raw = raw_from_central(state.x_mean, central)
    return RawMomentSequence(
        raw.moments[: order + 1], mixed_sequence_for_state(state, order)
    )


def poisson_tensor(z) -> np.ndarray:
    """Poisson tensor of the five second-order coordinates (x, p, Dxx, Dxp, Dpp)."""
    x, p, dxx, dxp, dpp = (float(v) for v in z)
    t = np.zeros((5, 5))
    t[0, 1] = 1.0
    t[2, 3] = 2.0 * dxx
    t[3, 4] = 2.0 * dpp
    t[2, 4] = 4.0 * dxp
    return t - t.T


def _gradient_fd(f: Callable, z: np.ndarray, rel_step: float) -> np.ndarray:
    grad = np.empty(z.size)
    for i in range(z.size):
        h = rel_step * max(1.0, abs(z[i]))
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        grad[i] = (f(zp) - f(zm)) / (2.0 * h)
    return grad


def poisson_bracket(f: Callable, g: Callable, z, rel_step: float = 1e-6) -> float:
    """{f, g} at z via the bracket table, gradients by central differences.

    ``f`` and ``g`` map a length-5 array (x, p, Dxx, Dxp, Dpp) to a scalar.
    Exact (up to rounding) for quadratic functions, O(step^2) otherwise.
    """
    z = np.asarray(z, dtype=float)
    df = _gradient_fd(f, z, rel_step)
    dg = _gradient_fd(g, z, rel_step)
    return float(df @ poisson_tensor(z) @ dg)
