import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gravmoments import (
    CanonicalState,
    HbarContext,
    IntegratorConfig,
    ScaleSet,
    SecondOrderState,
    closed_form_free,
    closed_form_linear,
    effective_hamiltonian,
    effective_hamiltonian_canonical,
    eom_rhs_canonical,
    eom_rhs_moments,
    free_potential,
    from_canonical,
    integrate_canonical,
    linear_potential,
    newtonian_potential,
    nondimensionalize,
    power_law_potential,
    quadratic_potential,
    redimensionalize,
    to_canonical,
    u_parameter,
)
from gravmoments.errors import ConfigurationError, DomainError
from gravmoments.moments import poisson_tensor

from .strategies import canonical_states

CTX = HbarContext()

POTENTIALS = [
    free_potential(),
    linear_potential(2.3),
    quadratic_potential(0.7),
    newtonian_potential(1.0),
    power_law_potential(1.0, 0.5, 3.0, 0.2),
]


# ------------------------------------------------------------------ potentials


@pytest.mark.parametrize("pot", POTENTIALS, ids=lambda p: p.kind)
def test_potential_derivatives_consistent(pot):
    # Central differences of each derivative level converge at O(h^2) to the
    # next analytic one.
    rng = np.random.default_rng(7)
    xs = rng.uniform(0.5, 3.0, size=5)
    pairs = [(pot.phi, pot.dphi), (pot.dphi, pot.d2phi), (pot.d2phi, pot.d3phi)]
    for f, df in pairs:
        for x in xs:
            errs = []
            for h in (1e-3, 5e-4):
                fd = (f(x + h) - f(x - h)) / (2.0 * h)
                errs.append(abs(fd - df(x)))
            # Quartic ratio would be 4; allow generous slack, including the
            # exactly-linear cases where both errors are rounding noise.
            if errs[0] > 1e-11:
                assert errs[1] < 0.6 * errs[0]
            assert errs[1] < 1e-5 * max(1.0, abs(df(x)))


def test_newtonian_domain_guard():
    pot = newtonian_potential(1.0)
    with pytest.raises(DomainError):
        pot.require_domain(-1.0)
    with pytest.raises(DomainError):
        effective_hamiltonian_canonical(
            CanonicalState(-1.0, 0.0, 0.1, 0.0, 0.25), pot, 1.0
        )


# ------------------------------------------------------------------ energies


def test_hamiltonian_classical_limit():
    state = SecondOrderState(1.0, 3.0, 0.0, 0.0, 0.0)
    assert effective_hamiltonian(state, free_potential(), 2.0) == pytest.approx(
        9.0 / 4.0
    )


def test_hamiltonian_linear_has_no_curvature_term():
    g = 2.0
    state = SecondOrderState(1.5, 0.5, 1.0, 0.0, 0.25)
    h = effective_hamiltonian(state, linear_potential(g), 1.0)
    assert h == pytest.approx(0.125 + g * 1.5 + 0.125)


def test_hamiltonian_newtonian_canonical_worked_example():
    state = CanonicalState(1.0, 0.5, 0.1, 0.0, 1e-6)
    h = effective_hamiltonian_canonical(state, newtonian_potential(1.0), 1.0)
    assert h == pytest.approx(-0.88495, rel=1e-12)


@given(canonical_states())
def test_hamiltonian_chart_agreement(c):
    pot = quadratic_potential(0.7)
    hc = effective_hamiltonian_canonical(c, pot, 1.3)
    hm = effective_hamiltonian(from_canonical(c), pot, 1.3)
    assert hc == pytest.approx(hm, rel=1e-12)


# ---------------------------------------------------------------------- EOM


def test_eom_canonical_free():
    state = CanonicalState(0.0, 2.0, 1.0, 0.5, 0.25)
    rhs = eom_rhs_canonical(state, free_potential(), 2.0)
    assert rhs == pytest.approx([1.0, 0.0, 0.25, 0.25 / (2.0 * 1.0)])


def test_eom_canonical_linear_width_is_free():
    state = CanonicalState(0.0, 2.0, 1.0, 0.5, 0.25)
    g = 3.0
    rhs_lin = eom_rhs_canonical(state, linear_potential(g), 2.0)
    rhs_free = eom_rhs_canonical(state, free_potential(), 2.0)
    assert rhs_lin[1] == pytest.approx(-2.0 * g)
    assert rhs_lin[2:] == pytest.approx(rhs_free[2:])


def test_eom_canonical_newtonian_worked_example():
    state = CanonicalState(1.0, 0.0, 0.1, 0.0, 1e-6)
    rhs = eom_rhs_canonical(state, newtonian_potential(1.0), 1.0)
    assert rhs[1] == pytest.approx(-1.03)
    assert rhs[3] == pytest.approx(0.201)


def test_eom_moments_free_particle():
    state = SecondOrderState(0.0, 2.0, 1.0, 0.5, 0.3)
    m = 2.0
    rhs = eom_rhs_moments(state, free_potential(), m)
    assert rhs == pytest.approx([1.0, 0.0, 0.5, 0.15, 0.0])


def test_eom_moments_quadratic_momentum_variance():
    k = 0.9
    state = SecondOrderState(0.3, 0.1, 1.0, 0.4, 0.5)
    m = 1.7
    rhs = eom_rhs_moments(state, quadratic_potential(k), m)
    assert rhs[4] == pytest.approx(-2.0 * m * k * state.dxp)


@given(canonical_states())
@settings(max_examples=25)
def test_eom_moments_matches_fd_bracket_flow(c):
    # Oracle: dz/dt = Pi(z) . grad H with the gradient by central differences.
    pot = power_law_potential(1.0, 0.3, 3.0, 0.2)
    mass = 1.4
    state = from_canonical(c)
    if state.x_mean <= 0.5:
        state = SecondOrderState(
            state.x_mean + 6.0, state.p_mean, state.dxx, state.dxp, state.dpp
        )
    z = np.array([state.x_mean, state.p_mean, state.dxx, state.dxp, state.dpp])

    def ham(zz):
        return effective_hamiltonian(
            SecondOrderState(*zz), pot, mass
        )

    grad = np.empty(5)
    for i in range(5):
        h = 1e-6 * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        grad[i] = (ham(zp) - ham(zm)) / (2.0 * h)
    oracle = poisson_tensor(z) @ grad
    rhs = eom_rhs_moments(state, pot, mass)
    for a, b in zip(rhs, oracle):
        assert a == pytest.approx(b, rel=1e-6, abs=1e-8)


@given(canonical_states())
@settings(max_examples=25)
def test_chart_consistency_of_flows(c):
    # Chain rule: d(Dxx)/dt = 2 s s', d(Dxp)/dt = s' ps + s ps',
    # d(Dpp)/dt = 2 ps ps' - 2 U s'/s^3.
    pot = quadratic_potential(0.8)
    mass = 1.1
    dx, dp, ds, dps = eom_rhs_canonical(c, pot, mass)
    mom = eom_rhs_moments(from_canonical(c), pot, mass)
    expected = [
        dx,
        dp,
        2.0 * c.s * ds,
        ds * c.ps + c.s * dps,
        2.0 * c.ps * dps - 2.0 * c.u_casimir * ds / c.s**3,
    ]
    for a, b in zip(mom, expected):
        scale = max(abs(a), abs(b), 1.0)
        assert abs(a - b) < 1e-10 * scale


@given(canonical_states())
@settings(max_examples=25)
def test_canonical_flow_is_hamiltonian(c):
    # p' = -dH/dx and ps' = -dH/ds by central differences.
    pot = newtonian_potential(1.0)
    mass = 1.2
    state = CanonicalState(c.x + 6.0, c.p, c.s, c.ps, c.u_casimir)
    rhs = eom_rhs_canonical(state, pot, mass)

    def h_of_x(x):
        return effective_hamiltonian_canonical(
            CanonicalState(x, state.p, state.s, state.ps, state.u_casimir), pot, mass
        )

    def h_of_s(s):
        return effective_hamiltonian_canonical(
            CanonicalState(state.x, state.p, s, state.ps, state.u_casimir), pot, mass
        )

    hx = 1e-6 * max(1.0, abs(state.x))
    hs = 1e-6 * state.s
    dhdx = (h_of_x(state.x + hx) - h_of_x(state.x - hx)) / (2.0 * hx)
    dhds = (h_of_s(state.s + hs) - h_of_s(state.s - hs)) / (2.0 * hs)
    assert rhs[1] == pytest.approx(-dhdx, rel=1e-6, abs=1e-8)
    assert rhs[3] == pytest.approx(-dhds, rel=1e-6, abs=1e-8)


def test_newtonian_flow_matches_nondimensional_closed_form():
    # The general flow specialized to Phi = -1/r must reproduce
    # r'' = -(1/r^2)(1 + 3 s^2/r^2) and s'' = u/s^3 + 2 s/r^3.
    rng = np.random.default_rng(3)
    pot = newtonian_potential(1.0)
    for _ in range(20):
        r = rng.uniform(0.5, 3.0)
        s = rng.uniform(0.02, 0.3)
        u = rng.uniform(1e-6, 1e-2)
        p = rng.uniform(-1.0, 1.0)
        ps = rng.uniform(-0.5, 0.5)
        rhs = eom_rhs_canonical(CanonicalState(r, p, s, ps, u), pot, 1.0)
        assert rhs[1] == pytest.approx(-(1.0 / r**2) * (1.0 + 3.0 * s**2 / r**2), rel=1e-12)
        assert rhs[3] == pytest.approx(u / s**3 + 2.0 * s / r**3, rel=1e-12)


def test_width_force_balance_scale():
    # At s^4 = u r^3 / 2 the uncertainty and tidal width forces have equal
    # magnitude (both stretch the packet; there is no width fixed point).
    u, r = 1e-4, 1.3
    s = (u * r**3 / 2.0) ** 0.25
    assert u / s**3 == pytest.approx(2.0 * s / r**3, rel=1e-12)
    state = CanonicalState(r, 0.0, s, 0.0, u)
    rhs = eom_rhs_canonical(state, newtonian_potential(1.0), 1.0)
    assert rhs[3] == pytest.approx(2.0 * (u / s**3), rel=1e-12)


# ----------------------------------------------------------------- integrate


def test_integrate_free_vs_closed_form():
    initial = SecondOrderState(0.0, 0.5, 1.0, 0.0, 0.25)
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-14)
    traj = integrate_canonical(
        to_canonical(initial, CTX), free_potential(), 1.0, (0.0, 20.0), cfg
    )
    worst = 0.0
    for i, t in enumerate(traj.times):
        exact = closed_form_free(initial, 1.0, float(t))
        got = from_canonical(traj.state_at_index(i))
        for name in ("x_mean", "p_mean", "dxx", "dxp", "dpp"):
            e, g = getattr(exact, name), getattr(got, name)
            scale = abs(e) if e != 0.0 else 1.0
            worst = max(worst, abs(g - e) / scale)
    assert worst < 1e-8
    assert traj.status == "ok"


def test_integrate_linear_centroid():
    g = 2.0
    initial = SecondOrderState(0.0, 1.0, 0.5, 0.0, 0.5)
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-14)
    traj = integrate_canonical(
        to_canonical(initial, CTX), linear_potential(g), 1.0, (0.0, 5.0), cfg
    )
    for i, t in enumerate(traj.times):
        exact = closed_form_linear(initial, 1.0, g, float(t))
        assert traj.x[i] == pytest.approx(exact.x_mean, rel=1e-8, abs=1e-9)
        assert traj.p[i] == pytest.approx(exact.p_mean, rel=1e-8, abs=1e-9)


def test_integrate_conserves_canonical_casimir_strictly():
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    initial = CanonicalState(1.0, 1.0, 0.05, 0.0, 1e-4)
    for pot in POTENTIALS:
        traj = integrate_canonical(initial, pot, 1.0, (0.0, 2.0), cfg)
        u = traj.casimir_series
        assert np.abs(u - u[0]).max() / abs(u[0]) < 10.0 * cfg.rel_tol


def test_integrate_conserves_energy():
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)
    initial = CanonicalState(1.0, 1.0, 0.05, 0.0, 1e-4)
    traj = integrate_canonical(initial, newtonian_potential(1.0), 1.0, (0.0, 3.0), cfg)
    e = traj.energy_series
    assert np.abs(e - e[0]).max() / abs(e[0]) < 1e-8


def test_fixed_step_verlet_tracks_adaptive():
    initial = CanonicalState(1.0, 1.0, 0.1, 0.0, 1e-4)
    pot = newtonian_potential(1.0)
    ref = integrate_canonical(
        initial, pot, 1.0, (0.0, 2.0), IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    )
    verlet = integrate_canonical(
        initial,
        pot,
        1.0,
        (0.0, 2.0),
        IntegratorConfig(method="fixed_step", h_init=1e-4),
        n_samples=50,
    )
    assert verlet.status == "ok"
    x_ref = ref.evaluate(verlet.times)[0]
    assert np.abs(verlet.x - x_ref).max() < 1e-6
    e = verlet.energy_series
    assert np.abs(e - e[0]).max() / abs(e[0]) < 1e-7


def test_fixed_step_rejects_events():
    ev = lambda t, y: y[0]
    with pytest.raises(ConfigurationError):
        integrate_canonical(
            CanonicalState(1.0, 0.0, 0.1, 0.0, 0.25),
            free_potential(),
            1.0,
            (0.0, 1.0),
            IntegratorConfig(method="fixed_step", h_init=1e-3),
            events=(ev,),
        )


def test_singularity_abort_is_flagged_with_partial_result():
    # u = 0 with a strongly contracting width hits the floor in finite time.
    initial = CanonicalState(0.0, 0.0, 1.0, -2.0, 0.0)
    traj = integrate_canonical(initial, free_potential(), 1.0, (0.0, 2.0))
    assert traj.status == "singular"
    assert "floor" in traj.message
    assert traj.times[-1] < 2.0
    assert len(traj) > 1


def test_point_particle_mode():
    initial = CanonicalState(1.0, 1.0, 0.0, 0.0, 0.0)
    traj = integrate_canonical(
        initial,
        newtonian_potential(1.0),
        1.0,
        (0.0, 2.0),
        IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13),
    )
    assert np.all(traj.s == 0.0)
    assert np.all(traj.casimir_series == 0.0)
    e = traj.energy_series
    assert np.abs(e - e[0]).max() / abs(e[0]) < 1e-9


def test_trajectory_csv_round_trip(tmp_path):
    initial = CanonicalState(1.0, 1.0, 0.1, 0.0, 1e-4)
    traj = integrate_canonical(
        initial, newtonian_potential(1.0), 1.0, (0.0, 1.0), n_samples=20
    )
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,p,s,ps,energy,casimir"
    for line in lines[1:]:
        for text in line.split(","):
            value = float(text)
            assert f"{value:.17g}" == text


# ------------------------------------------------------------- closed forms


def test_closed_form_free_identity_at_zero():
    initial = SecondOrderState(1.0, 2.0, 3.0, 0.5, 0.7)
    assert closed_form_free(initial, 2.0, 0.0) == initial


def test_closed_form_free_spreading_law():
    sigma2 = 0.8
    dpp = 0.3
    m = 1.7
    initial = SecondOrderState(0.0, 0.0, sigma2, 0.0, dpp)
    omega2 = dpp / (m * m * sigma2)
    for t in (0.5, 2.0, 7.0):
        out = closed_form_free(initial, m, t)
        assert out.dxx == pytest.approx(sigma2 * (1.0 + omega2 * t * t), rel=1e-14)
        assert out.dpp == dpp


# --------------------------------------------------------------- unit scales


def test_u_parameter_neutron_earth():
    u = u_parameter(1.675e-27, 5.972e24, 6.371e6)
    assert 1e-37 <= u <= 1e-36


def test_u_parameter_ten_gram_mass():
    u = u_parameter(0.01, 5.972e24, 6.371e6)
    assert 1e-87 <= u <= 1e-85


def test_u_parameter_mass_scaling():
    u1 = u_parameter(1.0, 5.972e24, 6.371e6)
    u2 = u_parameter(2.0, 5.972e24, 6.371e6)
    assert u1 == pytest.approx(4.0 * u2, rel=1e-14)


def test_scaleset_consistency_and_round_trip():
    scales = ScaleSet.for_body(gm=3.986004418e14, r_c=6.371e6, mass=1.675e-27)
    assert scales.t_c == pytest.approx(math.sqrt(scales.r_c**3 / scales.gm), rel=1e-14)
    state = CanonicalState(7.0e6, 1e-24, 1e-3, 1e-28, 2.8e-69)
    nd = nondimensionalize(state, scales)
    back = redimensionalize(nd, scales)
    for name in ("x", "p", "s", "ps", "u_casimir"):
        assert getattr(back, name) == pytest.approx(getattr(state, name), rel=1e-14)


def test_nondimensional_casimir_equals_u_parameter():
    # Scaling the minimal SI uncertainty volume must give u = (hbar^2/4)/(GM m^2 r_c).
    from gravmoments import G_SI, HBAR_SI

    m, big_m, r_c = 1.675e-27, 5.972e24, 6.371e6
    scales = ScaleSet.for_body(G_SI * big_m, r_c, m)
    state = CanonicalState(r_c, 0.0, 1e-6, 0.0, HBAR_SI**2 / 4.0)
    nd = nondimensionalize(state, scales)
    assert nd.u_casimir == pytest.approx(u_parameter(m, big_m, r_c), rel=1e-12)
