import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from dispersive_lab.errors import ConvergenceError, InvalidInputError, OutOfRangeError
from dispersive_lab.tau_scaling import (
    first_integral_residual,
    phase_integral,
    solve_tau,
    tau_at,
    write_tau_csv,
)


def time_for_tau_alpha1(tau):
    # inverse of the alpha=1 trajectory, from integrating dt = dtau / sqrt(1 - 1/tau)
    return math.sqrt(tau * (tau - 1.0)) + math.log(math.sqrt(tau) + math.sqrt(tau - 1.0))


def time_for_tau_quad(alpha, tau):
    # substitute tau = 1 + s^2 to remove the endpoint singularity
    def integrand(s):
        x = 1.0 + s * s
        return 2.0 * s / math.sqrt(1.0 - x ** (-alpha))

    val, _ = quad(integrand, 0.0, math.sqrt(tau - 1.0), epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


@pytest.fixture(scope="module")
def traj2():
    return solve_tau(2.0, 100.0)


def test_alpha2_matches_sqrt_one_plus_t2(traj2):
    t = np.linspace(0.0, 100.0, 20001)
    tau, taudot = tau_at(traj2, t)
    assert np.max(np.abs(tau - np.sqrt(1.0 + t * t))) <= 100 * traj2.tol
    assert np.max(np.abs(taudot - t / np.sqrt(1.0 + t * t))) <= 100 * traj2.tol


def test_alpha2_at_one_and_three(traj2):
    tau, taudot = tau_at(traj2, 1.0)
    assert tau == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert taudot == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)
    assert tau_at(traj2, 3.0)[0] == pytest.approx(math.sqrt(10.0), abs=1e-10)
    assert tau_at(traj2, 0.5)[1] == pytest.approx(0.5 / math.sqrt(1.25), abs=1e-10)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 2.0, 4.0])
def test_initial_condition_exact(alpha):
    traj = solve_tau(alpha, 5.0)
    assert traj.t[0] == 0.0 and traj.tau[0] == 1.0 and traj.taudot[0] == 0.0
    assert tau_at(traj, 0.0) == (1.0, 0.0)


def test_alpha1_long_time_against_implicit_solution():
    traj = solve_tau(1.0, 1000.0)
    for t_ref in (1.0, 10.0, 1000.0):
        tau, _ = tau_at(traj, t_ref)
        # invert the implicit solution locally with one Newton step from the computed tau
        f = time_for_tau_alpha1(tau) - t_ref
        dtdtau = 1.0 / math.sqrt(1.0 - 1.0 / tau)
        assert abs(f / dtdtau) <= 1e-8 * max(1.0, t_ref)
    tau, _ = tau_at(traj, 1000.0)
    assert 0.99 <= tau / 1000.0 <= 1.01


def test_alpha_half_against_quadrature():
    traj = solve_tau(0.5, 50.0)
    for t_ref in (0.5, 5.0, 50.0):
        tau, taudot = tau_at(traj, t_ref)
        assert time_for_tau_quad(0.5, tau) == pytest.approx(t_ref, abs=1e-8)


def test_phase_integral_closed_forms(traj2):
    assert phase_integral(traj2, 0.0, 1.0, 2.0) == pytest.approx(math.pi / 4, abs=1e-10)
    assert phase_integral(traj2, 0.0, 1.0, 4.0) == pytest.approx(math.pi / 8 + 0.25, abs=1e-10)
    assert phase_integral(traj2, 0.0, 100.0, 2.0) == pytest.approx(math.atan(100.0), abs=1e-8)
    assert phase_integral(traj2, 3.7, 3.7, 2.0) == 0.0


def test_phase_integral_additive(traj2):
    a = phase_integral(traj2, 0.2, 7.3, 1.5)
    b = phase_integral(traj2, 0.2, 2.05, 1.5) + phase_integral(traj2, 2.05, 7.3, 1.5)
    assert a == pytest.approx(b, rel=1e-13)


def test_errors(traj2):
    with pytest.raises(InvalidInputError):
        solve_tau(float("nan"), 1.0)
    with pytest.raises(InvalidInputError):
        solve_tau(-1.0, 1.0)
    with pytest.raises(InvalidInputError):
        solve_tau(1.0, 0.0)
    with pytest.raises(OutOfRangeError):
        tau_at(traj2, 100.5)
    with pytest.raises(OutOfRangeError):
        tau_at(traj2, -0.1)
    with pytest.raises(InvalidInputError):
        phase_integral(traj2, 2.0, 1.0, 2.0)
    assert issubclass(ConvergenceError, RuntimeError)


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(min_value=0.2, max_value=4.0),
    frac=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=20),
)
def test_trajectory_properties(alpha, frac):
    traj = solve_tau(alpha, 30.0)
    assert np.all(traj.residual() <= traj.tol)
    assert np.all(np.diff(traj.tau) >= 0.0) and np.all(traj.tau >= 1.0)
    assert np.all(traj.tauddot > 0.0)
    t = 30.0 * np.asarray(frac)
    tau, taudot = tau_at(traj, t)
    assert np.all(tau >= 1.0)
    assert np.all((taudot >= 0.0) & (taudot < 1.0))
    assert np.all(first_integral_residual(alpha, tau, taudot) <= 10 * traj.tol)


def test_ratio_tau_over_t_drifts_slowly():
    traj = solve_tau(2.0, 1000.0)
    t = np.array([10.0, 100.0, 1000.0])
    ratio = tau_at(traj, t)[0] / t
    assert np.all(np.diff(np.abs(ratio - 1.0)) < 0)
    assert np.all(np.abs(np.diff(ratio)) < 0.01)


def test_csv_dump(tmp_path, traj2):
    path = tmp_path / "tau.csv"
    write_tau_csv(traj2, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,tau,taudot,residual"
    assert len(lines) == traj2.t.size + 1
    row = lines[5].split(",")
    assert float(row[1]) == traj2.tau[4]
