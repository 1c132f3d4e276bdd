"""Split-step Fourier solvers for the semiclassical defocusing NLS.

Two frames are supported.  The original frame integrates

    i eps psi_t + (eps^2 / 2) lap psi = lam |psi|^(2 sigma) psi.

The rescaled frame integrates the equation satisfied by the unit-mass profile
``Psi(t, y)`` obtained by removing the dispersive dilation ``tau(t)`` and the
quadratic phase ``(taudot / tau) |x|^2 / (2 eps)``:

    i eps Psi_t + eps^2 / (2 tau^2) lap Psi
        = tau'' tau |y|^2 / 2 Psi + mu / tau^(d sigma) |Psi|^(2 sigma) Psi,

where ``tau'' tau = alpha / (2 tau^alpha)`` by the scaling ODE.  This is the
confinement produced by the change of unknowns; it matches the force
``alpha / (2 tau^alpha) y R`` of the rescaled fluid equations.

Both steppers use Strang splitting (kinetic half step, potential full step,
kinetic half step).  Time dependent coefficients enter only through
integrals of powers of ``tau``, which makes each sub-flow exact.  The
potential sub-flow leaves ``|Psi|`` invariant, so it is a pointwise phase
rotation and every sub-step is unitary.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
import numpy.typing as npt
from scipy.signal import czt

from .energy import EnergyBreakdown
from .errors import BlowUpError, InvalidInputError
from .grid import Grid, dilate
from .tau_scaling import TauTrajectory, phase_integral, tau_at

BOUNDARY_WARN_FRACTION = 1e-8


class Frame(str, enum.Enum):
    ORIGINAL = "original"
    RESCALED = "rescaled"


@dataclass(frozen=True)
class WaveField:
    grid: Grid
    values: npt.NDArray[np.complex128]
    eps: float
    frame: Frame = Frame.ORIGINAL
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise InvalidInputError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not self.eps > 0:
            raise InvalidInputError("eps must be positive")

    @property
    def density(self) -> npt.NDArray[np.float64]:
        return np.abs(self.values) ** 2

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.density)

    def with_values(self, values, time: float | None = None) -> "WaveField":
        return replace(self, values=values, time=self.time if time is None else time)


@dataclass(frozen=True)
class NlsParams:
    sigma: float
    lam: float
    eps: float
    mu: float = 0.0
    alpha: float = 1.0
    dim: int = 1
    dealias: bool | None = None

    def __post_init__(self):
        for name in ("sigma", "eps", "alpha"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise InvalidInputError(f"{name} must be positive, got {v!r}")
        for name in ("lam", "mu"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvalidInputError(f"{name} must be nonnegative (defocusing), got {v!r}")
        if self.dim > 2 and self.sigma >= 2.0 / (self.dim - 2):
            raise InvalidInputError("sigma must be energy-subcritical")

    @property
    def use_dealias(self) -> bool:
        return self.sigma > 1.0 if self.dealias is None else self.dealias

    @classmethod
    def from_initial(cls, field: WaveField, sigma: float, lam: float, alpha: float = 1.0, **kw) -> "NlsParams":
        """Parameters whose rescaled coupling uses the mass of ``field``."""
        mu = lam * field.mass**sigma
        return cls(sigma=sigma, lam=lam, eps=field.eps, mu=mu, alpha=alpha, dim=field.grid.dim, **kw)


def optimal_alpha(dim: int, sigma: float) -> float:
    """Smallest scaling exponent reaching the decay rate ``min(2, d sigma)``.

    The dissipation dominates ``rate * E`` with ``rate = min(2, alpha, d sigma)``.
    """
    return min(dim * sigma, 2.0)


def decay_rate(alpha: float, dim: int, sigma: float) -> float:
    """Exponent ``p`` in the pseudo-energy bound ``E(t) <= E(0) / tau(t)^p``."""
    return min(2.0, alpha, dim * sigma)


def gaussian(grid: Grid, eps: float = 1.0, width: float = 1.0, center=0.0, phase_b: float = 0.0,
             frame: Frame = Frame.ORIGINAL, mass: float = 1.0) -> WaveField:
    """Gaussian ``exp(-|x-c|^2 / (2 w^2))`` times ``exp(i b |x|^2 / (2 eps))`` with given mass."""
    centers = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    r2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, centers))
    psi = np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * phase_b * grid.r2 / (2.0 * eps))
    psi = psi.astype(np.complex128)
    psi *= math.sqrt(mass / grid.integrate(np.abs(psi) ** 2))
    return WaveField(grid, psi, eps, frame)


def _check_finite(values, time: float) -> None:
    if not np.all(np.isfinite(values)):
        raise BlowUpError(f"non-finite field at t={time}", time)


@lru_cache(maxsize=32)
def _kinetic_multiplier(grid: Grid, phase: float) -> npt.NDArray[np.complex128]:
    return np.exp(-1j * phase * grid.k2)


def _kinetic(grid: Grid, values, phase: float):
    # exact flow of psi_t = i (phase/dt) lap psi over the sub-step
    return np.fft.ifftn(_kinetic_multiplier(grid, phase) * np.fft.fftn(values))


def _nonlinear_power(values, sigma: float):
    dens = np.abs(values) ** 2
    return dens**sigma


def step_original(field: WaveField, dt: float, params: NlsParams) -> WaveField:
    """One Strang step of the original-frame equation."""
    if field.frame is not Frame.ORIGINAL:
        raise InvalidInputError("step_original needs an original-frame field")
    if dt < 0:
        raise InvalidInputError("dt must be nonnegative")
    if dt == 0:
        return field
    eps, grid = field.eps, field.grid
    half = 0.25 * eps * dt
    psi = _kinetic(grid, field.values, half)
    if params.lam:
        psi = psi * np.exp(-1j * (params.lam * dt / eps) * _nonlinear_power(psi, params.sigma))
        if params.use_dealias:
            psi = grid.dealias(psi)
    psi = _kinetic(grid, psi, half)
    t_new = field.time + dt
    _check_finite(psi, t_new)
    return field.with_values(psi, t_new)


def _signed_integral(traj: TauTrajectory, t1: float, t2: float, p: float) -> float:
    if t2 >= t1:
        return phase_integral(traj, t1, t2, p)
    return -phase_integral(traj, t2, t1, p)


def step_rescaled(field: WaveField, traj: TauTrajectory, t: float, dt: float, params: NlsParams) -> WaveField:
    """One Strang step of the rescaled equation on ``[t, t + dt]``.

    A negative ``dt`` integrates backward in time.
    """
    if field.frame is not Frame.RESCALED:
        raise InvalidInputError("step_rescaled needs a rescaled-frame field")
    if abs(traj.alpha - params.alpha) > 1e-14 * params.alpha:
        raise InvalidInputError("trajectory alpha differs from params.alpha")
    if dt == 0:
        return field
    eps, grid = field.eps, field.grid
    d = grid.dim
    t_mid = t + 0.5 * dt
    a1 = _signed_integral(traj, t, t_mid, 2.0)
    a2 = _signed_integral(traj, t_mid, t + dt, 2.0)
    b_conf = _signed_integral(traj, t, t + dt, params.alpha)
    psi = _kinetic(grid, field.values, 0.5 * eps * a1)
    phase = (0.25 * params.alpha * b_conf) * grid.r2
    if params.mu:
        b_nl = _signed_integral(traj, t, t + dt, d * params.sigma)
        phase = phase + (params.mu * b_nl) * _nonlinear_power(psi, params.sigma)
    psi = psi * np.exp((-1j / eps) * phase)
    if params.use_dealias:
        psi = grid.dealias(psi)
    psi = _kinetic(grid, psi, 0.5 * eps * a2)
    t_new = t + dt
    _check_finite(psi, t_new)
    return field.with_values(psi, t_new)


def free_evolution(field: WaveField, t: float) -> WaveField:
    """Apply the free propagator ``exp(i eps t lap / 2)``; negative ``t`` runs backward."""
    if field.frame is not Frame.ORIGINAL:
        raise InvalidInputError("free_evolution needs an original-frame field")
    _check_finite(field.values, field.time)
    mult = np.exp(-0.5j * field.eps * t * field.grid.k2)
    return field.with_values(np.fft.ifftn(mult * np.fft.fftn(field.values)), field.time + t)


def _czt_axis(values, x, xi, axis: int):
    # trapezoidal continuous Fourier transform at uniformly spaced xi, via chirp-z
    h = x[1] - x[0]
    dxi = xi[1] - xi[0] if xi.size > 1 else 0.0
    out = czt(values, m=xi.size, w=np.exp(-1j * h * dxi), a=np.exp(1j * h * xi[0]), axis=axis)
    shape = [1] * values.ndim
    shape[axis] = xi.size
    return out * (np.exp(-1j * x[0] * xi) * (h / math.sqrt(2.0 * math.pi))).reshape(shape)


def fourier_transform_at(field: WaveField, xi_axis) -> npt.NDArray[np.complex128]:
    """Unitary continuous Fourier transform sampled on the tensor grid ``xi_axis^d``.

    ``xi_axis`` must be uniformly spaced.
    """
    xi = np.asarray(xi_axis, dtype=float)
    vals = field.values
    for axis in range(field.grid.dim):
        vals = _czt_axis(vals, field.grid.axis, xi, axis)
    return vals


def dispersive_profile(plus_state: WaveField, t: float) -> npt.NDArray[np.float64]:
    """Density ``(eps t)^-d |F psi_plus(x / (eps t))|^2`` of the large-time free profile."""
    if not t > 0:
        raise InvalidInputError("dispersive_profile needs t > 0")
    if plus_state.frame is not Frame.ORIGINAL:
        raise InvalidInputError("dispersive_profile needs an original-frame state")
    scale = plus_state.eps * t
    grid = plus_state.grid
    xi = grid.axis / scale
    dens = np.abs(fourier_transform_at(plus_state, xi)) ** 2 / scale**grid.dim
    # a grid field is band limited; outside the band its sampled transform is an alias
    inside = np.abs(xi) <= grid.k_max
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.n
        dens = dens * inside.reshape(shape)
    return dens


def plus_state_from_profile(a_inf: WaveField) -> WaveField:
    """Scattering state ``psi_plus`` whose asymptotic profile is ``a_inf``.

    ``a_inf(x) = eps^(-d/2) hat(psi_plus)(x / eps)``; the transform is inverted
    on the grid of ``a_inf``.
    """
    grid, eps = a_inf.grid, a_inf.eps
    hat = dilate(a_inf.values, grid, eps) * eps ** (0.5 * grid.dim)
    conj_field = WaveField(grid, np.conj(hat).astype(np.complex128), eps)
    return WaveField(grid, np.conj(fourier_transform_at(conj_field, grid.axis)), eps)


def _tail_integral(p: float, t: float) -> float:
    # int_t^inf (1 + s^2)^(-p/2) ds by the binomial series in 1/s^2, t >= 2
    total, j, coef = 0.0, 0, 1.0
    while True:
        term = coef * t ** (1.0 - p - 2 * j) / (p + 2 * j - 1.0)
        total += term
        if abs(term) < 1e-17 * abs(total) or j > 200:
            return total
        coef *= (-0.5 * p - j) / (j + 1)
        j += 1


def _harmonic_flow(values, grid: Grid, eps: float, s: float, substeps: int = 64):
    # exp(-i s H / eps), H = -eps^2 lap / 2 + |y|^2 / 2, by Strang substeps
    ds = s / substeps
    half = np.exp(-0.25j * eps * ds * grid.k2)
    pot = np.exp(-0.5j * ds * grid.r2 / eps)
    for _ in range(substeps):
        values = np.fft.ifftn(half * np.fft.fftn(values))
        values = np.fft.ifftn(half * np.fft.fftn(values * pot))
    return values


def final_state(a_inf: WaveField, params: NlsParams, t_final: float) -> WaveField:
    """Rescaled state at ``t_final`` of the solution scattering to ``a_inf``.

    Needs ``alpha = 2``, where ``tau = sqrt(1 + t^2)`` turns the free rescaled
    flow into the harmonic oscillator in the time ``arctan t``; at infinity the
    free profile equals ``exp(-i pi d / 4) a_inf``.  The nonlinear phase picked
    up on ``[t_final, inf)`` is added at first order.
    """
    if params.alpha != 2.0:
        raise InvalidInputError("final_state needs alpha = 2")
    d = a_inf.grid.dim
    if d * params.sigma <= 1.0:
        raise InvalidInputError("final_state needs a short range nonlinearity (d sigma > 1)")
    if t_final < 2.0:
        raise InvalidInputError("t_final must be at least 2")
    grid, eps = a_inf.grid, a_inf.eps
    norm = math.sqrt(a_inf.mass)
    free = _harmonic_flow(np.exp(-0.25j * math.pi * d) * a_inf.values / norm, grid, eps,
                          -math.atan(1.0 / t_final))
    tail = _tail_integral(d * params.sigma, t_final)
    # the flow on [t_final, inf) adds this phase, so it is removed here
    psi = free * np.exp((1j / eps) * params.mu * tail * _nonlinear_power(free, params.sigma))
    return WaveField(grid, psi, eps, Frame.RESCALED, t_final)


def profile_distance(field: WaveField, plus_state: WaveField, tau: float, t: float) -> float:
    """L1 distance between ``|psi(t)|^2`` and the dispersive profile of ``plus_state``.

    ``field`` is the unit-mass rescaled state at time ``t``.  The L1 norm is
    invariant under the dilation ``x = tau y``, which maps the profile at time
    ``t`` to the profile at time ``t / tau`` on the rescaled grid.
    """
    if field.frame is not Frame.RESCALED:
        raise InvalidInputError("profile_distance needs a rescaled-frame field")
    prof = dispersive_profile(plus_state, t / tau) / plus_state.mass
    return field.grid.integrate(np.abs(field.density - prof))


def nls_energy(field: WaveField, traj: TauTrajectory, t: float, params: NlsParams) -> EnergyBreakdown:
    """Rescaled pseudo-energy and its dissipation, itemized."""
    if field.frame is not Frame.RESCALED:
        raise InvalidInputError("nls_energy needs a rescaled-frame field")
    tau, taudot = tau_at(traj, t)
    return _pseudo_energy(field, tau, taudot, params)


def _pseudo_energy(field: WaveField, tau: float, taudot: float, params: NlsParams) -> EnergyBreakdown:
    grid, eps = field.grid, field.eps
    a, s, d = params.alpha, params.sigma, grid.dim
    grad2 = grid.grad_norm2(field.values)
    dens = field.density
    mom2 = grid.integrate(grid.r2 * dens)
    lp = grid.integrate(dens ** (s + 1.0))
    kin = eps**2 * grad2 / (2.0 * tau**2)
    conf = a / (4.0 * tau**a) * mom2
    pot = params.mu / ((s + 1.0) * tau ** (d * s)) * lp
    rate = taudot / tau
    return EnergyBreakdown(
        kinetic=kin,
        confinement=conf,
        potential=pot,
        dissipation={
            "kinetic": rate * 2.0 * kin,
            "confinement": rate * a * conf,
            "potential": rate * d * s * pot,
        },
        balance={"moment2": mom2, "lp_norm": lp},
    )


def nls_energy_original(field: WaveField, params: NlsParams) -> EnergyBreakdown:
    """Conserved energy of the original-frame equation."""
    if field.frame is not Frame.ORIGINAL:
        raise InvalidInputError("nls_energy_original needs an original-frame field")
    grid = field.grid
    kin = 0.5 * field.eps**2 * grid.grad_norm2(field.values)
    pot = params.lam / (params.sigma + 1.0) * grid.integrate(field.density ** (params.sigma + 1.0))
    return EnergyBreakdown(kinetic=kin, potential=pot)


def boundary_mass_fraction(field: WaveField) -> float:
    """Fraction of mass outside the central half of the domain."""
    dens = field.density
    total = float(np.sum(dens))
    return float(np.sum(dens[~field.grid.central_mask])) / total


def check_boundary(field: WaveField, threshold: float = BOUNDARY_WARN_FRACTION) -> bool:
    frac = boundary_mass_fraction(field)
    if frac > threshold:
        warnings.warn(f"boundary-shell mass fraction {frac:.3e} exceeds {threshold:.1e} at t={field.time}")
        return False
    return True


def spectral_tail_fraction(field: WaveField) -> float:
    """Fraction of spectral power beyond two thirds of the Nyquist wavenumber."""
    power = np.abs(np.fft.fftn(field.values)) ** 2
    return float(np.sum(power[~field.grid.dealias_mask]) / np.sum(power))


def write_field(field: WaveField, path: str | Path) -> tuple[Path, Path]:
    """Flat little-endian float64 (re, im) pairs plus a JSON sidecar."""
    path = Path(path)
    data = np.empty(field.values.size * 2, dtype="<f8")
    flat = field.values.ravel(order="C")
    data[0::2] = flat.real
    data[1::2] = flat.imag
    data.tofile(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = {"grid": field.grid.to_dict(), "time": field.time, "frame": field.frame.value, "eps": field.eps}
    sidecar.write_text(json.dumps(meta, indent=2))
    return path, sidecar


def read_field(path: str | Path) -> WaveField:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = Grid(**meta["grid"])
    data = np.fromfile(path, dtype="<f8")
    values = (data[0::2] + 1j * data[1::2]).reshape(grid.shape)
    return WaveField(grid, values, meta["eps"], Frame(meta["frame"]), meta["time"])
