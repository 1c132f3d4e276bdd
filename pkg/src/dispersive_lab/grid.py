"""Periodic grids, Fourier differentiation and spectral dilation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import numpy.typing as npt
from scipy.signal import czt

from .errors import DomainOverflowError, InvalidInputError

OVERFLOW_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-L, L)^dim`` with ``n`` points per axis."""

    dim: int
    n: int
    half_length: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidInputError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise InvalidInputError(f"n must be a power of two >= 8, got {self.n}")
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise InvalidInputError("half_length must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def cell(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @cached_property
    def axis(self) -> npt.NDArray[np.float64]:
        return -self.half_length + self.spacing * np.arange(self.n)

    @cached_property
    def coords(self) -> tuple[npt.NDArray[np.float64], ...]:
        if self.dim == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def r2(self) -> npt.NDArray[np.float64]:
        return sum(c * c for c in self.coords)

    @cached_property
    def k_axis(self) -> npt.NDArray[np.float64]:
        # pi*k/L for k = -n/2 .. n/2-1, in FFT order
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def kvec(self) -> tuple[npt.NDArray[np.float64], ...]:
        if self.dim == 1:
            return (self.k_axis,)
        return tuple(np.meshgrid(self.k_axis, self.k_axis, indexing="ij"))

    @cached_property
    def k2(self) -> npt.NDArray[np.float64]:
        return sum(k * k for k in self.kvec)

    @property
    def k_max(self) -> float:
        return np.pi / self.spacing

    @cached_property
    def dealias_mask(self) -> npt.NDArray[np.bool_]:
        cut = (2.0 / 3.0) * self.k_max
        mask = np.ones(self.shape, dtype=bool)
        for k in self.kvec:
            mask &= np.abs(k) <= cut
        return mask

    @cached_property
    def central_mask(self) -> npt.NDArray[np.bool_]:
        mask = np.ones(self.shape, dtype=bool)
        for c in self.coords:
            mask &= np.abs(c) < 0.5 * self.half_length
        return mask

    def integrate(self, f) -> float:
        return float(np.sum(f) * self.cell)

    def gradient(self, f) -> list[np.ndarray]:
        """Spectral gradient; real input gives real output.

        The Nyquist mode is dropped for complex input too, so the gradient
        commutes with taking real and imaginary parts.
        """
        return [self.derivative(f, 1, axis) for axis in range(self.dim)]

    def derivative(self, f, order: int = 1, axis: int = 0):
        """Spectral derivative of given order along one axis."""
        fh = np.fft.fftn(f)
        k = self.kvec[axis]
        mult = (1j * k) ** order
        if order % 2 == 1:
            # odd derivatives of the Nyquist mode are not representable
            mult = np.where(np.abs(k) >= self.k_max - 1e-12 * self.k_max, 0.0, mult)
        g = np.fft.ifftn(mult * fh)
        return g.real if np.isrealobj(f) else g

    def laplacian(self, f):
        g = np.fft.ifftn(-self.k2 * np.fft.fftn(f))
        return g.real if np.isrealobj(f) else g

    def grad_norm2(self, f) -> float:
        """Integral of ``|grad f|^2`` evaluated through Parseval."""
        fh = np.fft.fftn(f)
        return float(np.sum(self.k2 * np.abs(fh) ** 2) * self.cell / f.size)

    def dealias(self, f):
        g = np.fft.ifftn(np.where(self.dealias_mask, np.fft.fftn(f), 0.0))
        return g.real if np.isrealobj(f) else g

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "half_length": self.half_length}


def _interp_axis(values, grid: Grid, scale: float, axis: int):
    # trigonometric interpolant of the samples evaluated at scale * x_j along one axis
    n, L, h = grid.n, grid.half_length, grid.spacing
    coef = np.fft.fftshift(np.fft.fft(values, axis=axis), axes=axis) / n
    # split the Nyquist mode evenly between -n/2 and +n/2 so real data stay real
    nyq = np.take(coef, [0], axis=axis)
    coef = np.concatenate([0.5 * nyq, np.take(coef, range(1, n), axis=axis), 0.5 * nyq], axis=axis)
    k0 = -math.pi / h
    dk = math.pi / L
    # f(z) = sum_m c_m exp(i (k0 + m dk) (z + L)) at z_j = scale * (-L + j h)
    z0 = -scale * L + L
    dz = scale * h
    shape = [1] * values.ndim
    shape[axis] = n + 1
    m = np.arange(n + 1).reshape(shape)
    pre = coef * np.exp(1j * m * dk * z0)
    out = czt(pre, m=n, w=np.exp(1j * dk * dz), a=1.0, axis=axis)
    shape[axis] = n
    j = np.arange(n).reshape(shape)
    return out * np.exp(1j * k0 * (z0 + j * dz))


def dilate(values, grid: Grid, scale: float):
    """Samples of ``f(scale * y)`` on the grid, from the interpolant of ``f``.

    Points mapped outside the domain get zero.  Raises when the part of ``f``
    that the output window cannot see carries more than ``OVERFLOW_TOL`` of
    its squared mass.
    """
    if not (math.isfinite(scale) and scale > 0):
        raise InvalidInputError("dilation scale must be positive")
    values = np.asarray(values)
    L = grid.half_length
    seen = np.ones(grid.shape, dtype=bool)
    for c in grid.coords:
        seen &= np.abs(c) < min(scale, 1.0) * L
    weight = np.abs(values) ** 2
    total = float(np.sum(weight))
    if total > 0 and float(np.sum(weight[~seen])) > OVERFLOW_TOL * total:
        raise DomainOverflowError(f"dilation by {scale:g} drops mass outside the domain")
    if scale == 1.0:
        return values.copy()
    out = values.astype(np.complex128)
    for axis in range(grid.dim):
        out = _interp_axis(out, grid, scale, axis)
    inside = np.ones(grid.shape, dtype=bool)
    for c in grid.coords:
        inside &= np.abs(scale * c) < L
    out = np.where(inside, out, 0.0)
    return out.real if np.isrealobj(values) else out
