"""Energy functionals, decay fits and weak-convergence monitors.

Fluid functionals take a ``MadelungState``.  Terms that need the velocity
use the masked ``u = M / rho``; the capillary term differentiates
``sqrt(rho + f^2) - f`` with ``f`` the vacuum floor, which keeps the gradient
bounded where ``rho`` vanishes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .energy import EnergyBreakdown
from .errors import InvalidInputError
from .grid import Grid
from .madelung import MadelungState
from .spectral_nls import Frame
from .tau_scaling import TauTrajectory, tau_at

__all__ = [
    "DecayFit",
    "EnergyBreakdown",
    "EnergyLedger",
    "ProfileConvergence",
    "b_functional",
    "energy_original",
    "fit_decay",
    "h4_shape",
    "moments",
    "profile_converge",
    "pseudo_energy_fluid",
    "wasserstein1_1d",
]


def _check_gamma(gamma: float) -> None:
    if not gamma > 1.0:
        raise InvalidInputError(f"gamma must exceed 1, got {gamma}")


def _capillary(state: MadelungState) -> float:
    floor = math.sqrt(state.floor)
    root = np.sqrt(state.rho + floor**2) - floor
    return state.grid.integrate(sum(g**2 for g in state.grid.gradient(root)))


def _kinetic_density(state: MadelungState, shift=None):
    # rho |u - shift|^2 with the masked velocity
    vel = state.velocity
    if shift is None:
        return state.rho * sum(u**2 for u in vel)
    return state.rho * sum((u - s) ** 2 for u, s in zip(vel, shift))


def _pressure(state: MadelungState, gamma: float) -> float:
    return state.grid.integrate(state.rho**gamma) / (gamma - 1.0)


def energy_original(state: MadelungState, eps: float, gamma: float) -> EnergyBreakdown:
    """``E = 1/2 int (rho |u|^2 + eps^2 |grad sqrt rho|^2) + int rho^gamma / (gamma - 1)``."""
    if state.frame is not Frame.ORIGINAL:
        raise InvalidInputError("energy_original needs an original-frame state")
    _check_gamma(gamma)
    return EnergyBreakdown(
        kinetic=0.5 * state.grid.integrate(_kinetic_density(state)),
        gradient=0.5 * eps**2 * _capillary(state),
        potential=_pressure(state, gamma),
    )


def b_functional(state: MadelungState, t: float, eps: float, gamma: float) -> tuple[float, float]:
    """Return ``(B, A)`` with ``A = t^2 B`` and ``B`` measuring the deviation from ``u = x / t``."""
    if not t > 0:
        raise InvalidInputError("b_functional needs t > 0")
    if state.frame is not Frame.ORIGINAL:
        raise InvalidInputError("b_functional needs an original-frame state")
    _check_gamma(gamma)
    shift = [c / t for c in state.grid.coords]
    b = 0.5 * state.grid.integrate(_kinetic_density(state, shift))
    b += 0.5 * eps**2 * _capillary(state) + _pressure(state, gamma)
    return b, t * t * b


def _strain_density(state: MadelungState):
    # R |D U|^2 computed as |grad M - U grad R|^2 / R on the non-vacuum set
    grid = state.grid
    vel = state.velocity
    ok = state.rho >= state.floor
    safe = np.where(ok, state.rho, 1.0)
    grad_r = grid.gradient(state.rho)
    d = grid.dim
    total = np.zeros(grid.shape)
    cols = []
    for i in range(d):
        grad_m = grid.gradient(state.momentum[i])
        cols.append([grad_m[j] - vel[i] * grad_r[j] for j in range(d)])
    for i in range(d):
        for j in range(d):
            sym = 0.5 * (cols[i][j] + cols[j][i])
            total = total + sym**2
    return np.where(ok, total / safe, 0.0)


def pseudo_energy_fluid(state: MadelungState, traj: TauTrajectory, t: float, eps: float, nu: float,
                        gamma: float, alpha: float) -> EnergyBreakdown:
    """Rescaled pseudo-energy of ``(R, U)`` and its dissipation, itemized."""
    if state.frame is not Frame.RESCALED:
        raise InvalidInputError("pseudo_energy_fluid needs a rescaled-frame state")
    tau, taudot = tau_at(traj, t)
    return pseudo_energy_fluid_at(state, tau, taudot, eps, nu, gamma, alpha)


def pseudo_energy_fluid_at(state: MadelungState, tau: float, taudot: float, eps: float, nu: float,
                           gamma: float, alpha: float, potential=None) -> EnergyBreakdown:
    """As ``pseudo_energy_fluid`` at given ``(tau, taudot)``.

    ``potential`` replaces ``|y|^2 / 2`` in the confinement term, e.g. the
    periodic potential used on the torus.
    """
    _check_gamma(gamma)
    grid, d = state.grid, state.grid.dim
    kin_int = grid.integrate(_kinetic_density(state))
    cap_int = eps**2 * _capillary(state)
    mom2 = grid.integrate(grid.r2 * state.rho)
    pow_int = grid.integrate(state.rho**gamma)
    press_exp = d * (gamma - 1.0)
    kin = kin_int / (2.0 * tau**2)
    cap = cap_int / (2.0 * tau**2)
    weight = grid.r2 if potential is None else 2.0 * np.asarray(potential)
    conf = alpha / (4.0 * tau**alpha) * grid.integrate(weight * state.rho)
    pot = pow_int / ((gamma - 1.0) * tau**press_exp)
    rate = taudot / tau
    strain = grid.integrate(_strain_density(state)) if nu else 0.0
    div_term = 0.0
    if nu:
        div_u = sum(grid.gradient(u)[i] for i, u in enumerate(state.velocity))
        div_term = grid.integrate(state.rho * div_u)
    return EnergyBreakdown(
        kinetic=kin,
        gradient=cap,
        confinement=conf,
        potential=pot,
        dissipation={
            "kinetic": rate * 2.0 * kin,
            "gradient": rate * 2.0 * cap,
            "confinement": rate * alpha * conf,
            "potential": rate * d * pow_int / tau**press_exp,
            "viscous": nu * strain / tau**4,
        },
        balance={"rhs": -nu * taudot / tau**3 * div_term, "moment2": mom2},
    )


def h4_shape(t, alpha: float, nu: float):
    """``(1+t)^-alpha + nu (1+t)^-1`` with an extra ``ln(1+t)`` when ``alpha = 1``."""
    t = np.asarray(t, dtype=float)
    log_factor = np.log1p(t) if alpha == 1.0 else 1.0
    return (1.0 + t) ** (-alpha) + nu / (1.0 + t) * log_factor


@dataclass
class EnergyLedger:
    """Time series of energy breakdowns with moments and the fitted decay bound."""

    alpha: float
    nu: float = 0.0
    times: list[float] = field(default_factory=list)
    rows: list[EnergyBreakdown] = field(default_factory=list)
    moments: list[tuple[float, float, float]] = field(default_factory=list)

    def append(self, t: float, row: EnergyBreakdown, mass: float, first: float, second: float) -> None:
        if self.times and not t > self.times[-1]:
            raise InvalidInputError("ledger times must be strictly increasing")
        self.times.append(float(t))
        self.rows.append(row)
        self.moments.append((mass, first, second))

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.total for r in self.rows])

    def c0(self, t_min: float = 0.0) -> float:
        """Smallest constant making the (H4) bound hold on samples with ``t >= t_min``."""
        t = np.array(self.times)
        sel = t >= t_min
        if not np.any(sel):
            raise InvalidInputError("no samples in the fitting window")
        return float(np.max(self.totals[sel] / h4_shape(t[sel], self.alpha, self.nu)))

    def h4_bound(self, t_min: float = 0.0) -> np.ndarray:
        return self.c0(t_min) * h4_shape(np.array(self.times), self.alpha, self.nu)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mass", "kinetic", "confinement", "potential", "total_E", "dissipation"])
            for t, row, (mass, _, _) in zip(self.times, self.rows, self.moments):
                vals = [t, mass, row.kinetic + row.gradient, row.confinement, row.potential, row.total,
                        row.dissipation_total]
                w.writerow([f"{float(v):.17g}" for v in vals])


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    window: tuple[float, float]
    residual: float
    samples: int

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept, "window": list(self.window),
                "residual": self.residual, "samples": self.samples}


def fit_decay(series: Sequence[tuple[float, float]], window: tuple[float, float],
              traj: TauTrajectory | None = None) -> DecayFit:
    """Least-squares slope of ``log value`` against ``log tau(t)`` inside ``window``.

    Without a trajectory ``tau(t) = t``.
    """
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise InvalidInputError("window must satisfy t_lo < t_hi")
    pts = [(t, v) for t, v in series if t_lo <= t <= t_hi]
    if len(pts) < 8:
        raise InvalidInputError(f"need at least 8 samples in the window, got {len(pts)}")
    t = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(~(v > 0)):
        raise InvalidInputError("decay fit needs positive values")
    tau = tau_at(traj, t)[0] if traj is not None else t
    x, y = np.log(tau), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DecayFit(float(slope), float(intercept), (float(t_lo), float(t_hi)), res, len(pts))


def wasserstein1_1d(rho1, rho2, spacing: float, return_masses: bool = False):
    """W1 distance between two densities on the same 1D grid after normalization."""
    r1 = np.asarray(rho1, dtype=float)
    r2 = np.asarray(rho2, dtype=float)
    if r1.shape != r2.shape or r1.ndim != 1:
        raise InvalidInputError("wasserstein1_1d needs two 1D densities on the same grid")
    if np.any(r1 < 0) or np.any(r2 < 0):
        raise InvalidInputError("densities must be nonnegative")
    m1, m2 = float(np.sum(r1)) * spacing, float(np.sum(r2)) * spacing
    if not (m1 > 0 and m2 > 0):
        raise InvalidInputError("densities must have positive mass")
    gap = np.cumsum(r1 / m1 - r2 / m2) * spacing
    w = float(np.sum(np.abs(gap)) * spacing)
    return (w, m1, m2) if return_masses else w


@dataclass(frozen=True)
class ProfileConvergence:
    reference_time: float
    distances: list[tuple[float, float]]
    cauchy_flag: bool
    last_decade_distance: float
    monotone: bool

    def to_dict(self) -> dict:
        return {"reference_time": self.reference_time, "distances": [list(p) for p in self.distances],
                "cauchy_flag": self.cauchy_flag, "last_decade_distance": self.last_decade_distance,
                "monotone": self.monotone}


def profile_converge(times: Sequence[float], densities: Sequence, spacing: float, threshold: float = 0.05,
                     slack: float = 0.1) -> ProfileConvergence:
    """W1 distances of each snapshot to the last one.

    The flag requires the distances to be nonincreasing up to a relative
    ``slack`` and the largest distance among snapshots with
    ``t >= t_final / 10`` to stay below ``threshold``.
    """
    if len(times) != len(densities):
        raise InvalidInputError("times and densities differ in length")
    if len(times) < 4:
        raise InvalidInputError("need at least 4 snapshots")
    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise InvalidInputError("snapshot times must increase")
    if not t[-1] >= 10.0 * t[0]:
        raise InvalidInputError("snapshots must span at least one decade in time")
    ref = densities[-1]
    dist = [wasserstein1_1d(r, ref, spacing) for r in densities[:-1]] + [0.0]
    monotone = all(b <= (1.0 + slack) * a + 1e-14 for a, b in zip(dist, dist[1:]))
    last = max(d for s, d in zip(t, dist) if s >= t[-1] / 10.0)
    return ProfileConvergence(float(t[-1]), [(float(s), float(d)) for s, d in zip(t, dist)],
                              bool(monotone and last < threshold), float(last), bool(monotone))


def moments(density, grid: Grid, orders: Sequence[int] = (0, 1, 2)) -> dict[int, float | np.ndarray]:
    """``order 0``: mass; ``order 1``: first moment vector; ``order 2``: ``int |y|^2 density``."""
    out: dict[int, float | np.ndarray] = {}
    for k in orders:
        if k == 0:
            out[0] = grid.integrate(density)
        elif k == 1:
            first = np.array([grid.integrate(c * density) for c in grid.coords])
            out[1] = float(first[0]) if grid.dim == 1 else first
        elif k == 2:
            out[2] = grid.integrate(grid.r2 * density)
        else:
            raise InvalidInputError(f"moment order must be 0, 1 or 2, got {k}")
    return out
