"""Shared hypothesis strategies for valid moment states."""

from __future__ import annotations

from hypothesis import strategies as st

from gravmoments import CanonicalState, from_canonical

finite = dict(allow_nan=False, allow_infinity=False)


def bounded(lo, hi):
    return st.floats(min_value=lo, max_value=hi, **finite)


@st.composite
def canonical_states(draw, hbar=1.0, lam_max=5.0):
    """Valid canonical states with U >= hbar^2/4 strictly (no clamp region)."""
    x = draw(bounded(-5.0, 5.0))
    p = draw(bounded(-5.0, 5.0))
    s = draw(bounded(0.3, 3.0))
    ps = draw(bounded(-3.0, 3.0))
    lam = draw(bounded(1.0, lam_max))
    return CanonicalState(x, p, s, ps, lam * hbar * hbar / 4.0)


@st.composite
def second_order_states(draw, hbar=1.0, lam_max=5.0):
    """Valid moment states built through the exact chart map."""
    return from_canonical(draw(canonical_states(hbar=hbar, lam_max=lam_max)))
