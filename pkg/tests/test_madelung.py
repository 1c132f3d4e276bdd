import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersive_lab.errors import InvalidInputError
from dispersive_lab.grid import Grid
from dispersive_lab.madelung import (
    MadelungState,
    from_fluid,
    kinetic_identity_residual,
    madelung_forward,
    rescale_fluid,
    rescale_wave,
    unscale_fluid,
    unscale_wave,
)
from dispersive_lab.spectral_nls import Frame, WaveField, gaussian


def smooth_state(grid, seed, eps=1.0):
    # vacuum-free field: positive amplitude times a smooth random phase
    rng = np.random.default_rng(seed)
    x = grid.axis
    amp = np.exp(-x**2 / (2 * rng.uniform(0.8, 2.0) ** 2)) + rng.uniform(0.05, 0.3)
    phase = sum(rng.normal() * np.cos(2 * np.pi * k * x / (2 * grid.half_length) + rng.uniform(0, 6.3))
                for k in range(1, 4))
    psi = amp * np.exp(1j * phase)
    psi /= math.sqrt(grid.integrate(np.abs(psi) ** 2))
    return WaveField(grid, psi.astype(complex), eps)


def test_plane_wave_velocity():
    g = Grid(1, 64, np.pi)
    k = 3.0
    eps = 0.5
    psi = np.exp(1j * k * g.axis) / math.sqrt(2 * np.pi)
    st_ = madelung_forward(WaveField(g, psi, eps))
    assert np.allclose(st_.rho, 1 / (2 * np.pi), atol=1e-15)
    assert np.allclose(st_.velocity[0], eps * k, atol=1e-12)


def test_real_field_has_no_momentum():
    g = Grid(2, 32, 6.0)
    st_ = madelung_forward(WaveField(g, np.exp(-g.r2 / 2).astype(complex), 1.0))
    assert all(np.max(np.abs(m)) < 1e-15 for m in st_.momentum)


def test_quadratic_phase_gives_linear_velocity():
    g = Grid(1, 512, 16.0)
    b, eps = 0.7, 0.3
    st_ = madelung_forward(gaussian(g, eps=eps, phase_b=b))
    inner = np.abs(g.axis) < 3
    assert np.max(np.abs(st_.velocity[0][inner] - b * g.axis[inner])) < 1e-8


def test_state_invariants():
    g = Grid(1, 32, 4.0)
    rho = np.exp(-g.axis**2)
    with pytest.raises(InvalidInputError):
        MadelungState(g, -rho, (rho,), np.sqrt(rho))
    with pytest.raises(InvalidInputError):
        MadelungState(g, 0 * rho, (rho,), 0 * rho)
    with pytest.raises(InvalidInputError):
        MadelungState(g, rho, (rho, rho), np.sqrt(rho))
    st_ = from_fluid(g, np.where(np.abs(g.axis) < 1, rho, 0.0), (np.ones(g.shape),))
    assert np.all(st_.momentum[0][st_.rho < st_.floor] == 0.0)
    assert np.allclose(st_.sqrt_rho**2, st_.rho, rtol=1e-15, atol=0)


def test_rescale_identity_at_tau_one():
    g = Grid(1, 128, 12.0)
    st_ = madelung_forward(gaussian(g, phase_b=0.4))
    out = rescale_fluid(st_, 1.0, 0.0)
    assert np.allclose(out.rho, st_.rho, atol=1e-14)
    assert np.allclose(out.momentum[0], st_.momentum[0], atol=1e-14)
    f = gaussian(g, phase_b=0.4)
    assert np.allclose(rescale_wave(f, 1.0, 0.0).values, f.values, atol=1e-14)


def test_rescale_gaussian_variance_and_mass():
    g = Grid(1, 512, 24.0)
    s = 2.0
    rho = np.exp(-g.axis**2 / (2 * s**2)) / math.sqrt(2 * np.pi * s**2)
    out = rescale_fluid(from_fluid(g, rho, (np.zeros(g.shape),)), 2.0, 0.0)
    expected = np.exp(-g.axis**2 / 2) / math.sqrt(2 * np.pi)
    assert np.max(np.abs(out.rho - expected)) < 1e-11
    assert out.mass == pytest.approx(1.0, abs=1e-11)


def test_rescaled_density_is_dilation_regardless_of_chirp():
    g = Grid(1, 512, 20.0)
    f = gaussian(g, phase_b=0.3, mass=2.0)
    a = rescale_wave(f, 1.6, 0.9).density
    b = rescale_wave(f, 1.6, -0.2).density
    expected = 1.6 * np.exp(-(1.6 * g.axis) ** 2) / math.sqrt(np.pi)
    assert np.max(np.abs(a - b)) < 1e-14
    assert np.max(np.abs(a - expected)) < 1e-11


def test_madelung_commutes_with_rescaling():
    g = Grid(1, 512, 20.0)
    f = gaussian(g, phase_b=0.5, width=1.3)
    tau, taudot = 1.8, 0.6
    left = madelung_forward(rescale_wave(f, tau, taudot))
    right = rescale_fluid(madelung_forward(f), tau, taudot)
    assert np.max(np.abs(left.rho - right.rho)) <= 1e-8
    assert np.max(np.abs(left.momentum[0] - right.momentum[0])) <= 1e-8


def test_round_trips():
    g = Grid(1, 512, 20.0)
    f = gaussian(g, phase_b=0.5, width=1.3)
    back = unscale_wave(rescale_wave(f, 1.5, 0.4), 1.5, 0.4)
    assert np.max(np.abs(back.values - f.values)) < 1e-10
    st_ = madelung_forward(f)
    st_back = unscale_fluid(rescale_fluid(st_, 1.5, 0.4), 1.5, 0.4)
    assert np.max(np.abs(st_back.rho - st_.rho)) < 1e-10
    assert np.max(np.abs(st_back.momentum[0] - st_.momentum[0])) < 1e-10


def test_frames_are_checked():
    g = Grid(1, 64, 8.0)
    f = gaussian(g, frame=Frame.RESCALED)
    with pytest.raises(InvalidInputError):
        rescale_wave(f, 2.0, 0.0)
    with pytest.raises(InvalidInputError):
        rescale_fluid(madelung_forward(f), 2.0, 0.0)


def test_kinetic_identity_on_gaussian_and_real_field():
    g = Grid(1, 512, 20.0)
    assert kinetic_identity_residual(gaussian(g, phase_b=0.8)) <= 1e-8
    assert kinetic_identity_residual(gaussian(g)) <= 1e-10


def test_vacuum_mask_sensitivity():
    g = Grid(1, 512, 20.0)
    f = gaussian(g, phase_b=0.8)
    cut = np.where(np.abs(g.axis) < 9.0, f.values, 0.0)
    assert abs(kinetic_identity_residual(f.with_values(cut)) - kinetic_identity_residual(f)) <= 1e-8


@pytest.mark.parametrize("seed", range(20))
def test_kinetic_identity_random_states(seed):
    g = Grid(1, 256, 10.0)
    assert kinetic_identity_residual(smooth_state(g, seed, eps=0.5)) <= 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(-1.0, 1.0))
def test_rescaling_preserves_mass(tau, taudot):
    g = Grid(1, 512, 24.0)
    f = gaussian(g, phase_b=0.3)
    st_ = madelung_forward(f)
    assert rescale_fluid(st_, tau, taudot).mass == pytest.approx(st_.mass, rel=1e-10)
    assert rescale_wave(f, tau, taudot).mass == pytest.approx(1.0, rel=1e-10)
