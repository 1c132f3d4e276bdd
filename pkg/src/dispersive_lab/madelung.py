"""Wave/fluid correspondence and the dispersive rescaling of both pictures.

The Madelung map sends ``psi`` to ``rho = |psi|^2`` and the momentum
``rho u = eps Im(conj(psi) grad psi)``.  Rescaling divides out the dilation
``tau``: ``R(y) = tau^d rho(tau y)`` and ``U(y) = tau u(tau y) - taudot tau y``.
Dilations are evaluated with the trigonometric interpolant of the sampled
field, so they are spectrally accurate for resolved data.  The momentum is
dilated rather than the velocity, which grows linearly for chirped data and
is not periodic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import InvalidInputError
from .grid import Grid, dilate
from .spectral_nls import Frame, WaveField

VACUUM_FLOOR = 1e-12


@dataclass(frozen=True)
class MadelungState:
    grid: Grid
    rho: npt.NDArray[np.float64]
    momentum: tuple[npt.NDArray[np.float64], ...]
    sqrt_rho: npt.NDArray[np.float64]
    frame: Frame = Frame.ORIGINAL
    time: float = 0.0

    def __post_init__(self):
        if len(self.momentum) != self.grid.dim:
            raise InvalidInputError("momentum needs one component per dimension")
        if self.rho.shape != self.grid.shape:
            raise InvalidInputError("rho shape does not match grid")
        if np.any(self.rho < 0):
            raise InvalidInputError("rho must be nonnegative")
        m = self.mass
        if not (math.isfinite(m) and m > 0):
            raise InvalidInputError("total mass must be positive and finite")

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.rho)

    @property
    def floor(self) -> float:
        return VACUUM_FLOOR * float(np.max(self.rho))

    @property
    def velocity(self) -> tuple[npt.NDArray[np.float64], ...]:
        """``M / rho`` away from vacuum, zero below the floor."""
        return _velocity(self.rho, self.momentum, self.floor)


def _velocity(rho, momentum, floor):
    ok = rho >= floor
    safe = np.where(ok, rho, 1.0)
    return tuple(np.where(ok, m / safe, 0.0) for m in momentum)


def from_fluid(grid: Grid, rho, momentum, frame: Frame = Frame.ORIGINAL, time: float = 0.0) -> MadelungState:
    """Build a state, zeroing momentum below the vacuum floor."""
    rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
    floor = VACUUM_FLOOR * float(np.max(rho))
    momentum = tuple(np.where(rho >= floor, np.asarray(m, dtype=float), 0.0) for m in momentum)
    return MadelungState(grid, rho, momentum, np.sqrt(rho), frame, time)


def madelung_forward(field: WaveField) -> MadelungState:
    grid = field.grid
    psi = field.values
    rho = np.abs(psi) ** 2
    grads = grid.gradient(psi)
    momentum = tuple(field.eps * np.imag(np.conj(psi) * g) for g in grads)
    return from_fluid(grid, rho, momentum, field.frame, field.time)


def rescale_fluid(state: MadelungState, tau: float, taudot: float) -> MadelungState:
    """Original-frame ``(rho, rho u)`` to rescaled ``(R, R U)``."""
    if state.frame is not Frame.ORIGINAL:
        raise InvalidInputError("rescale_fluid needs an original-frame state")
    grid, d = state.grid, state.grid.dim
    R = tau**d * dilate(state.rho, grid, tau)
    M = [tau ** (d + 1) * dilate(m, grid, tau) - taudot * tau * c * R
         for c, m in zip(grid.coords, state.momentum)]
    return from_fluid(grid, R, M, Frame.RESCALED, state.time)


def unscale_fluid(state: MadelungState, tau: float, taudot: float) -> MadelungState:
    """Inverse of ``rescale_fluid``."""
    if state.frame is not Frame.RESCALED:
        raise InvalidInputError("unscale_fluid needs a rescaled-frame state")
    grid, d = state.grid, state.grid.dim
    rho = dilate(state.rho, grid, 1.0 / tau) / tau**d
    M = [dilate(m, grid, 1.0 / tau) / tau ** (d + 1) + (taudot / tau) * c * rho
         for c, m in zip(grid.coords, state.momentum)]
    return from_fluid(grid, rho, M, Frame.ORIGINAL, state.time)


def rescale_wave(field: WaveField, tau: float, taudot: float) -> WaveField:
    """``Psi(y) = tau^(d/2) psi(tau y) exp(-i taudot tau |y|^2 / (2 eps)) / ||psi||``."""
    if field.frame is not Frame.ORIGINAL:
        raise InvalidInputError("rescale_wave needs an original-frame field")
    grid = field.grid
    norm = math.sqrt(field.mass)
    psi = dilate(field.values, grid, tau) * tau ** (0.5 * grid.dim) / norm
    psi = psi * np.exp(-1j * taudot * tau * grid.r2 / (2.0 * field.eps))
    return WaveField(grid, psi, field.eps, Frame.RESCALED, field.time)


def unscale_wave(field: WaveField, tau: float, taudot: float, mass: float = 1.0) -> WaveField:
    """Inverse of ``rescale_wave`` for an original field of the given mass."""
    if field.frame is not Frame.RESCALED:
        raise InvalidInputError("unscale_wave needs a rescaled-frame field")
    grid = field.grid
    # undo the chirp on the rescaled grid first, where it is evaluated at y
    chirped = field.values * np.exp(1j * taudot * tau * grid.r2 / (2.0 * field.eps))
    psi = dilate(chirped, grid, 1.0 / tau) * tau ** (-0.5 * grid.dim) * math.sqrt(mass)
    return WaveField(grid, psi, field.eps, Frame.ORIGINAL, field.time)


def kinetic_identity_residual(field: WaveField) -> float:
    """Relative gap between ``eps^2 |grad psi|^2`` and ``|eps grad sqrt(rho)|^2 + rho |u|^2``."""
    grid, eps = field.grid, field.eps
    lhs = eps**2 * grid.grad_norm2(field.values)
    st = madelung_forward(field)
    floor = st.floor
    sqrt_r = np.sqrt(st.rho + floor**2) - floor
    grad_sq = sum(g**2 for g in grid.gradient(sqrt_r))
    vel = st.velocity
    rhs_density = eps**2 * grad_sq + st.rho * sum(u**2 for u in vel)
    rhs = grid.integrate(rhs_density)
    if lhs == 0 and rhs == 0:
        return 0.0
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))
