import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersive_lab.diagnostics import pseudo_energy_fluid_at
from dispersive_lab.errors import InvalidInputError, PositivityError, StepRejectedError
from dispersive_lab.fluid1d import (
    RegParams,
    bd_entropy,
    confinement_potential,
    evolve,
    fluid_rhs,
    fluid_step,
    initial_state,
    outer_mass_fraction,
    reg_energy_report,
    sawtooth,
    stable_dt,
    write_snapshot,
)
from dispersive_lab.madelung import from_fluid
from dispersive_lab.spectral_nls import Frame
from dispersive_lab.tau_scaling import solve_tau, tau_at

BARE = dict(delta1=0.0, delta2=0.0, eta1=0.0, eta2=0.0)


def bump(grid, width=1.0, background=0.05):
    return np.exp(-grid.axis**2 / (2 * width**2)) + background


def smooth_state(params, n=64, seed=0):
    g = params.grid(n)
    rng = np.random.default_rng(seed)
    y = g.axis
    two_pi = 2 * np.pi / params.ell
    R = bump(g) * (1 + 0.1 * np.cos(two_pi * y + rng.uniform(0, 6)))
    U = 0.2 * np.sin(two_pi * y + rng.uniform(0, 6))
    return initial_state(g, R, U)


# fluid_rhs

def test_rest_state_feels_only_confinement():
    params = RegParams(gamma=2.0, nu=0.1, eps=0.3, alpha=1.0)
    g = params.grid(64)
    traj = solve_tau(1.0, 10.0)
    rho = 0.7
    state = initial_state(g, np.full(g.shape, rho), time=2.0)
    dR, dM = fluid_rhs(state, traj, params)
    tau = tau_at(traj, 2.0)[0]
    assert np.max(np.abs(dR)) < 1e-14
    assert np.max(np.abs(dM + 1.0 / (2 * tau) * sawtooth(g) * rho)) < 1e-13


def test_cold_pressure_pushes_dips_up():
    # a dip in R is refilled: dR_t/dt = -c D(M_t) > 0 at the dip when U = 0
    params = RegParams(gamma=2.0, nu=0.0, eps=0.0, alpha=1.0, delta1=0.0, delta2=0.0, eta1=1e-3, eta2=0.0)
    g = params.grid(128)
    R = 1.0 - 0.9 * np.exp(-g.axis**2)
    traj = solve_tau(1.0, 1.0)
    _, dM = fluid_rhs(initial_state(g, R), traj, params)
    flux_div = np.fft.ifft(1j * g.k_axis * np.fft.fft(dM)).real
    centre = np.argmin(np.abs(g.axis))
    assert -flux_div[centre] > 0
    for Rv in (0.1, 0.5, 0.99):
        k, e1, gm = params.k, params.eta1, params.gamma
        assert gm * Rv ** (gm - 1) + e1 * k * Rv ** (-k - 1) > 0


@pytest.mark.parametrize("mode", [1, 3])
def test_quantum_term_linearization(mode):
    eps, amp = 0.5, 1e-4
    params = RegParams(gamma=2.0, nu=0.0, eps=eps, alpha=1.0, **BARE)
    quiet = RegParams(gamma=2.0, nu=0.0, eps=0.0, alpha=1.0, **BARE)
    g = params.grid(128)
    kappa = 2 * np.pi * mode / params.ell
    traj = solve_tau(1.0, 10.0)
    state = initial_state(g, 1.0 + amp * np.cos(kappa * g.axis), time=3.0)
    quantum = fluid_rhs(state, traj, params)[1] - fluid_rhs(state, traj, quiet)[1]
    tau = tau_at(traj, 3.0)[0]
    sin_amp = 2 * np.mean(quantum * np.sin(kappa * g.axis))
    expected = eps**2 / (4 * tau**2) * kappa**3 * amp
    assert abs(abs(sin_amp) - expected) <= 0.01 * expected
    # dispersive sign: the term is +(eps^2 / 4 tau^2) D^3 R at linear order
    assert sin_amp == pytest.approx(expected, rel=0.01)


def test_rhs_rejects_vacuum():
    params = RegParams()
    g = params.grid(32)
    state = initial_state(g, np.ones(g.shape))
    bad = state.__class__(g, state.R * 0.0, state.M, 0.0)
    with pytest.raises(PositivityError):
        fluid_rhs(bad, solve_tau(params.alpha, 1.0), params)
    with pytest.raises(PositivityError):
        initial_state(g, np.zeros(g.shape))


# fluid_step

def test_zero_step_is_identity():
    params = RegParams(eps=0.1)
    state = smooth_state(params)
    assert fluid_step(state, solve_tau(params.alpha, 1.0), params, 0.0) is state


def test_mass_over_a_thousand_steps():
    params = RegParams(eps=0.1)
    state = smooth_state(params)
    traj = solve_tau(params.alpha, 100.0)
    m0 = state.mass
    for _ in range(1000):
        state = fluid_step(state, traj, params, min(0.8 * stable_dt(state, traj, params), 0.05))
    assert abs(state.mass - m0) / m0 <= 1e-10


def test_parity_is_preserved():
    params = RegParams(eps=0.1, r0=0.01, r1=0.01)
    g = params.grid(64)
    two_pi = 2 * np.pi / params.ell
    R = bump(g) + 0.03 * np.cos(two_pi * g.axis)
    U = 0.3 * np.sin(two_pi * g.axis) + 0.1 * np.sin(3 * two_pi * g.axis)
    state = initial_state(g, R, U)
    traj = solve_tau(params.alpha, 10.0)
    for _ in range(100):
        state = fluid_step(state, traj, params, 0.002)
    reflect = (-np.arange(g.n)) % g.n
    assert np.max(np.abs(state.R - state.R[reflect])) <= 1e-10
    assert np.max(np.abs(state.U + state.U[reflect])) <= 1e-10


def test_oversized_step_is_rejected_with_proposal():
    params = RegParams(eps=0.1)
    state = smooth_state(params)
    traj = solve_tau(params.alpha, 10.0)
    limit = stable_dt(state, traj, params)
    with pytest.raises(StepRejectedError) as info:
        fluid_step(state, traj, params, 10 * limit)
    assert info.value.proposed_dt == pytest.approx(limit)
    with pytest.raises(InvalidInputError):
        fluid_step(state, traj, params, -0.1)


def test_blow_up_to_negative_density_is_reported():
    params = RegParams(eta1=0.0, nu=0.0, delta1=0.0)
    g = params.grid(64)
    state = initial_state(g, bump(g, background=1e-3), 5.0 * np.tanh(g.axis))
    traj = solve_tau(params.alpha, 10.0)
    with pytest.raises(PositivityError) as info:
        fluid_step(state, traj, params, 1.0, check=False)
    assert info.value.min_value <= 0


# bd_entropy

def test_bd_effective_velocity_cancels():
    params = RegParams(nu=0.2, eps=0.0)
    g = params.grid(128)
    R = bump(g)
    traj = solve_tau(params.alpha, 1.0)
    # U = -nu D ln R with the solver's Nyquist-free derivative
    DlnR = np.fft.ifft(1j * g.k_axis * np.fft.fft(np.log(R))).real
    cancel = initial_state(g, R, -params.nu * DlnR)
    bare = bd_entropy(cancel, traj, params)
    conf = params.alpha / 2 * g.integrate(confinement_potential(g) * R)
    press = g.integrate(R**params.gamma) / (params.gamma - 1)
    assert bare == pytest.approx(conf + press, rel=1e-10)
    assert bd_entropy(initial_state(g, R), traj, params) > bare


def test_bd_uniform_state_closed_form():
    params = RegParams(gamma=2.0, nu=0.1, eps=0.2, alpha=1.0)
    g = params.grid(64)
    rho = 0.25
    state = initial_state(g, np.full(g.shape, rho))
    value = bd_entropy(state, solve_tau(1.0, 1.0), params)
    # int y^2 over one period is ell^3 / 12
    expected = params.alpha / 4 * rho * params.ell**3 / 12 + rho**2 * params.ell
    assert value == pytest.approx(expected, rel=1e-3)
    exact_grid = params.alpha / 2 * rho * np.sum(confinement_potential(g)) * g.spacing + rho**2 * params.ell
    assert value == pytest.approx(exact_grid, rel=1e-13)


def test_bd_without_viscosity_is_pseudo_energy():
    params = RegParams(gamma=1.5, nu=0.0, eps=0.3, alpha=0.5, delta1=0.0)
    state = smooth_state(params, n=128)
    traj = solve_tau(params.alpha, 5.0)
    tau, taudot = tau_at(traj, 2.0)
    g = state.grid
    ms = from_fluid(g, state.R, (state.M,), Frame.RESCALED)
    e = pseudo_energy_fluid_at(ms, tau, taudot, params.eps, 0.0, params.gamma, params.alpha,
                               potential=confinement_potential(g))
    assert bd_entropy(state, traj, params, 2.0) == pytest.approx(e.total, rel=1e-10)


# reg_energy_report

def test_bare_report_reduces_to_pseudo_energy():
    params = RegParams(gamma=2.0, nu=0.0, eps=0.2, alpha=1.0, **BARE)
    state = smooth_state(params, n=128)
    traj = solve_tau(1.0, 5.0)
    tau, taudot = tau_at(traj, 3.0)
    report = reg_energy_report(state, traj, params, 3.0)
    g = state.grid
    ms = from_fluid(g, state.R, (state.M,), Frame.RESCALED)
    e = pseudo_energy_fluid_at(ms, tau, taudot, params.eps, 0.0, params.gamma, params.alpha,
                               potential=confinement_potential(g))
    assert report.total == pytest.approx(e.total, rel=1e-10)
    assert report.dissipation_total == pytest.approx(e.dissipation_total, rel=1e-10)


def test_rhs_vanishes_at_rest_without_delta1():
    params = RegParams(delta1=0.0, eps=0.1)
    state = smooth_state(params)
    report = reg_energy_report(state, solve_tau(params.alpha, 1.0), params, 0.0)
    assert report.balance["rhs"] == 0.0
    assert report.balance["rhs_formula"] == 0.0
    # only the half-dissipation part of the bound survives
    assert report.balance["rhs_bound"] == pytest.approx(0.5 * report.dissipation_total, rel=1e-15)


def test_uniform_state_dissipation_by_quadrature():
    params = RegParams(gamma=2.0, nu=0.1, eps=0.1, alpha=1.0, eta1=1e-3, k=4.0)
    g = params.grid(64)
    rho = 0.4
    traj = solve_tau(1.0, 10.0)
    t = 4.0
    tau, taudot = tau_at(traj, t)
    report = reg_energy_report(initial_state(g, np.full(g.shape, rho)), traj, params, t)
    rate = taudot / tau
    p = tau ** -(params.gamma - 1)
    conf = params.alpha / (2 * tau**params.alpha) * rho * np.sum(confinement_potential(g)) * g.spacing
    pot = p * rho**2 * params.ell
    cold = p * params.eta1 / 5 * rho**-4 * params.ell
    expected = rate * (params.alpha * conf + pot + cold)
    nonzero = {k for k, v in report.dissipation.items() if v != 0}
    assert nonzero <= {"confinement", "potential", "cold_pressure"}
    assert report.dissipation_total == pytest.approx(expected, rel=1e-12)


def test_entropic_item_matches_continuum_form():
    params = RegParams(gamma=2.0, nu=0.1, eps=0.3, delta1=0.05)
    g = params.grid(256)
    kappa = 2 * np.pi / params.ell
    y = g.axis
    R = 1.0 + 0.5 * np.cos(kappa * y)
    traj = solve_tau(params.alpha, 5.0)
    t = 2.0
    tau = tau_at(traj, t)[0]
    report = reg_energy_report(initial_state(g, R), traj, params, t)
    lnR2 = (-0.5 * kappa**2 * np.cos(kappa * y) * R - (0.5 * kappa * np.sin(kappa * y)) ** 2) / R**2
    expected = params.delta1 * params.eps**2 / (4 * tau**4) * g.integrate(R * lnR2**2)
    assert report.dissipation["entropic"] == pytest.approx(expected, rel=1e-10)


def test_delta1_pressure_item_matches_continuum_form():
    params = RegParams(gamma=1.7, nu=0.1, eps=0.0, delta1=0.05, eta1=1e-3)
    g = params.grid(256)
    kappa = 2 * np.pi / params.ell
    y = g.axis
    R = 1.0 + 0.5 * np.cos(kappa * y)
    DR = -0.5 * kappa * np.sin(kappa * y)
    traj = solve_tau(params.alpha, 5.0)
    t = 2.0
    tau = tau_at(traj, t)[0]
    report = reg_energy_report(initial_state(g, R), traj, params, t)
    gm, k = params.gamma, params.k
    e2 = gm * R ** (gm - 2) + params.eta1 * k * R ** (-k - 2)
    expected = params.delta1 / tau**2 * tau ** -(gm - 1) * g.integrate(e2 * DR**2)
    assert report.dissipation["delta1_pressure"] == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_energy_rate_identity(seed):
    # d/dt E_reg along the semi-discrete flow equals -D_reg + RHS exactly
    params = RegParams(eps=0.2, r0=0.05, r1=0.05, delta1=0.02, delta2=1e-4, eta1=1e-4, eta2=1e-6)
    state = smooth_state(params, seed=seed)
    traj = solve_tau(params.alpha, 10.0)
    state = state.__class__(state.grid, state.R, state.M, 2.0)
    dR, dM = fluid_rhs(state, traj, params)
    h = 1e-5

    def energy_at(sign):
        s = state.__class__(state.grid, state.R + sign * h * dR, state.M + sign * h * dM, 2.0 + sign * h)
        return reg_energy_report(s, traj, params).total

    rate = (energy_at(1) - energy_at(-1)) / (2 * h)
    rep = reg_energy_report(state, traj, params)
    predicted = -rep.dissipation_total + rep.balance["rhs"]
    assert rate == pytest.approx(predicted, abs=1e-7 * rep.dissipation_total)
    assert all(v >= 0 for k, v in rep.dissipation.items() if k != "entropic")


# parameters and plumbing

@pytest.mark.parametrize("kw", [
    dict(gamma=1.0), dict(nu=-0.1), dict(delta1=0.2, nu=0.1), dict(m=0), dict(k=0.0),
    dict(eta2=float("nan")), dict(ell=0.0),
])
def test_invalid_parameters(kw):
    with pytest.raises(InvalidInputError):
        RegParams(**kw)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.05, 4.0))
def test_default_alpha(gamma):
    assert RegParams(gamma=gamma).alpha == min(2.0, gamma - 1.0)


def test_sawtooth_and_potential():
    params = RegParams(ell=16.0)
    g = params.grid(256)
    y = sawtooth(g)
    assert y[0] == 0.0
    assert np.allclose(y[1:], g.axis[1:])
    phi = confinement_potential(g)
    inner = np.abs(g.axis) < 4
    assert np.max(np.abs(phi[inner] - phi[inner].min() - 0.5 * g.axis[inner] ** 2)) < 0.05
    assert np.mean(phi) == pytest.approx(np.mean(0.5 * g.axis**2), rel=1e-14)


def test_evolve_lands_on_snapshots_and_writes_outputs(tmp_path):
    params = RegParams(eps=0.1)
    g = params.grid(64)
    state = initial_state(g, bump(g))
    traj = solve_tau(params.alpha, 3.0)
    run = evolve(state, traj, params, 2.0, dt_max=0.05, snapshot_times=(0.5, 1.0, 1.7))
    assert [s.time for s in run.snapshots] == pytest.approx([0.5, 1.0, 1.7], abs=1e-12)
    assert run.final.time == pytest.approx(2.0, abs=1e-12)
    assert run.times[0] == 0.0 and run.times[-1] == pytest.approx(2.0)
    assert not run.boundary_contaminated
    assert outer_mass_fraction(state) == pytest.approx(run.outer_fraction[0])
    run.write_ledger(tmp_path / "ledger.csv")
    rows = list(csv.reader(open(tmp_path / "ledger.csv")))
    assert rows[0] == ["t", "mass", "E_reg", "D_reg", "RHS_bound", "E_BD", "moment2", "minR"]
    assert len(rows) == len(run.times) + 1
    write_snapshot(run.final, tmp_path / "snap.csv")
    snap = np.loadtxt(tmp_path / "snap.csv", delimiter=",", skiprows=1)
    assert np.array_equal(snap[:, 1], run.final.R)
    assert np.all(np.diff(run.energy) <= 1e-6)
    assert abs(run.balance_residual()) < 1e-4 * run.energy[0]
    with pytest.raises(InvalidInputError):
        evolve(state, traj, params, 5.0)


def test_fixed_step_rejection_can_shrink():
    params = RegParams(eps=0.1)
    g = params.grid(64)
    state = initial_state(g, bump(g))
    traj = solve_tau(params.alpha, 1.0)
    with pytest.raises(StepRejectedError):
        evolve(state, traj, params, 0.5, dt=0.5)
    run = evolve(state, traj, params, 0.5, dt=0.5, shrink_rejected=True)
    assert run.rejections >= 1
    assert math.isfinite(run.energy[-1])
