"""Regularized quantum Navier-Stokes system in rescaled variables, d = 1.

Unknowns are ``R`` and ``M = R U`` on the torus of period ``ell``, with the
sawtooth coordinate ``y`` in ``[-ell/2, ell/2)``.  With ``c = 1 / tau^2``,
``a = alpha / (2 tau^alpha)`` and ``p = tau^(-(gamma-1))`` the right-hand
side is

    R_t = -c D(M) + c delta1 D^2 R
    M_t = -c adv(M, U) - a y R - p R D(e'(R)) - c r0 U - c r1 R U^3
          - c delta1 (DR DU)_s + (c eps^2 / 2) R D(D^2 sqrt(R) / sqrt(R))
          + c nu D(R DU) + (nu taudot / tau) DR - c delta2 D^4 U
          + c eta2 R D^(4m+3) R

where ``e(R) = R^gamma / (gamma-1) + eta1 R^-k / (k+1)``, so that
``R D(e'(R)) = D(P_c(R))`` with ``P_c = R^gamma - eta1 R^-k``, and
``adv = (D(M U) + M DU + U DM) / 2`` is the skew-symmetric form of the
momentum flux and ``(DR DU)_s = (DR DU + D(U DR) - U D^2 R) / 2``.  Every force is paired with a term of the energy through the
skew-adjointness of the spectral derivative ``D``, which makes the
semi-discrete energy balance exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .energy import EnergyBreakdown
from .errors import BlowUpError, InvalidInputError, PositivityError, StepRejectedError
from .grid import Grid
from .tau_scaling import TauTrajectory, tau_at

SAFETY = 0.8
BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class RegParams:
    gamma: float = 2.0
    nu: float = 0.1
    eps: float = 0.0
    alpha: float | None = None
    r0: float = 0.0
    r1: float = 0.0
    delta1: float = 1e-4
    delta2: float = 1e-6
    eta1: float = 1e-6
    eta2: float = 1e-8
    k: float = 4.0
    m: int = 1
    ell: float = 16.0

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", min(2.0, self.gamma - 1.0))
        for name in ("gamma", "nu", "eps", "alpha", "r0", "r1", "delta1", "delta2", "eta1", "eta2", "k", "ell"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvalidInputError(f"{name} must be finite and nonnegative, got {v!r}")
        if not self.gamma > 1.0:
            raise InvalidInputError("gamma must exceed 1")
        if not (self.alpha > 0 and self.k > 0 and self.ell > 0):
            raise InvalidInputError("alpha, k and ell must be positive")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise InvalidInputError("m must be an integer >= 1")
        if self.delta1 > 0 and not self.delta1 < self.nu:
            raise InvalidInputError("delta1 must be smaller than nu")

    def grid(self, n: int) -> Grid:
        return Grid(1, n, 0.5 * self.ell)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class FluidGridState:
    grid: Grid
    R: npt.NDArray[np.float64]
    M: npt.NDArray[np.float64]
    time: float = 0.0

    def __post_init__(self):
        if self.grid.dim != 1:
            raise InvalidInputError("fluid states are one dimensional")
        if self.R.shape != self.grid.shape or self.M.shape != self.grid.shape:
            raise InvalidInputError("R and M must match the grid")

    @property
    def U(self) -> npt.NDArray[np.float64]:
        return self.M / self.R

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.R)

    @property
    def min_R(self) -> float:
        return float(np.min(self.R))


def initial_state(grid: Grid, R0, U0=None, time: float = 0.0) -> FluidGridState:
    R0 = np.asarray(R0, dtype=float)
    U0 = np.zeros_like(R0) if U0 is None else np.asarray(U0, dtype=float)
    state = FluidGridState(grid, R0.copy(), R0 * U0, time)
    _check_positive(state)
    return state


@lru_cache(maxsize=64)
def _multiplier(grid: Grid, order: int) -> npt.NDArray[np.complex128]:
    # (i k)^order with the Nyquist mode removed for every order, so that
    # compositions of derivatives stay consistent and D is skew-adjoint
    k = grid.k_axis
    mult = (1j * k) ** order
    mult[np.abs(k) >= grid.k_max * (1 - 1e-12)] = 0.0
    return mult


def _d(grid: Grid, f, order: int = 1):
    return np.fft.ifft(_multiplier(grid, order) * np.fft.fft(f)).real


@lru_cache(maxsize=16)
def sawtooth(grid: Grid) -> npt.NDArray[np.float64]:
    """Sawtooth coordinate with the value 0 at the jump point ``y = -ell/2``."""
    y = grid.axis.copy()
    y[0] = 0.0
    return y


@lru_cache(maxsize=16)
def confinement_potential(grid: Grid) -> npt.NDArray[np.float64]:
    """Periodic potential whose spectral gradient is the sawtooth coordinate.

    It agrees with ``y^2 / 2`` away from the jump; its mean matches that of
    ``y^2 / 2``.
    """
    y = sawtooth(grid)
    k = grid.k_axis
    yh = np.fft.fft(y)
    ph = np.zeros_like(yh)
    nz = (k != 0) & (np.abs(k) < grid.k_max * (1 - 1e-12))
    ph[nz] = yh[nz] / (1j * k[nz])
    phi = np.fft.ifft(ph).real
    return phi + (np.mean(0.5 * grid.axis**2) - np.mean(phi))


def _check_positive(state: FluidGridState) -> None:
    if not np.all(np.isfinite(state.R)) or not np.all(np.isfinite(state.M)):
        raise BlowUpError(f"non-finite fluid state at t={state.time}", state.time)
    mn = state.min_R
    if not mn > 0:
        raise PositivityError(f"density lost positivity at t={state.time}", state.time, mn)


def _coefficients(traj: TauTrajectory, t: float, params: RegParams):
    tau, taudot = tau_at(traj, t)
    return {
        "tau": tau,
        "taudot": taudot,
        "c": 1.0 / tau**2,
        "a": params.alpha / (2.0 * tau**params.alpha),
        "p": tau ** (-(params.gamma - 1.0)),
    }


def _enthalpy(R, params: RegParams):
    # e'(R) for e = R^gamma / (gamma-1) + eta1 R^-k / (k+1)
    g, k = params.gamma, params.k
    return g / (g - 1.0) * R ** (g - 1.0) - params.eta1 * k / (k + 1.0) * R ** (-k - 1.0)


def _cold_pressure_slope(R, params: RegParams):
    g, k = params.gamma, params.k
    return g * R ** (g - 1.0) + params.eta1 * k * R ** (-k - 1.0)


def fluid_rhs(state: FluidGridState, traj: TauTrajectory, params: RegParams):
    """Semi-discrete right-hand side ``(dR, dM)`` at ``state.time``."""
    _check_positive(state)
    grid = state.grid
    co = _coefficients(traj, state.time, params)
    c, a, p = co["c"], co["a"], co["p"]
    R, M = state.R, state.M
    U = M / R
    DR = _d(grid, R)
    DU = _d(grid, U)
    DM = _d(grid, M)

    dR = -c * DM
    if params.delta1:
        dR = dR + c * params.delta1 * _d(grid, R, 2)

    adv = 0.5 * (_d(grid, M * U) + M * DU + U * DM)
    dM = -c * adv - a * sawtooth(grid) * R - p * R * _d(grid, _enthalpy(R, params))
    if params.r0:
        dM = dM - c * params.r0 * U
    if params.r1:
        dM = dM - c * params.r1 * R * U**3
    if params.delta1:
        # DR DU in a split form whose pairing with U is exact
        cross = 0.5 * (DR * DU + _d(grid, U * DR) - U * _d(grid, R, 2))
        dM = dM - c * params.delta1 * cross
    if params.eps:
        s = np.sqrt(R)
        dM = dM + 0.5 * c * params.eps**2 * R * _d(grid, _d(grid, s, 2) / s)
    if params.nu:
        dM = dM + c * params.nu * _d(grid, R * DU) + params.nu * co["taudot"] / co["tau"] * DR
    if params.delta2:
        dM = dM - c * params.delta2 * _d(grid, U, 4)
    if params.eta2:
        dM = dM + c * params.eta2 * R * _d(grid, R, 4 * params.m + 3)
    if not (np.all(np.isfinite(dR)) and np.all(np.isfinite(dM))):
        raise BlowUpError(f"non-finite right-hand side at t={state.time}", state.time)
    return dR, dM


def stable_dt(state: FluidGridState, traj: TauTrajectory, params: RegParams, safety: float = SAFETY) -> float:
    """Largest step allowed by the explicit SSP-RK3 stability regions.

    Oscillatory terms (transport, pressure and capillary waves) use the
    imaginary-axis bound sqrt(3); damping terms use the real-axis bound 2.5.
    """
    grid = state.grid
    co = _coefficients(traj, state.time, params)
    c, p = co["c"], co["p"]
    kk = grid.k_max
    R = state.R
    mn, mx = float(np.min(R)), float(np.max(R))
    umax = float(np.max(np.abs(state.U)))
    sound = math.sqrt(c * p * float(np.max(_cold_pressure_slope(R, params))))
    osc = kk * (c * umax + sound)
    osc += 0.5 * c * params.eps * kk**2
    osc += c * kk ** (2 * params.m + 2) * math.sqrt(params.eta2 * mx)
    damp = c * kk**2 * (params.nu / 1.0 + params.delta1) + c * params.delta2 * kk**4 / mn
    damp += c * (params.r0 / mn + 3.0 * params.r1 * mx * umax**2)
    limits = []
    if osc > 0:
        limits.append(math.sqrt(3.0) / osc)
    if damp > 0:
        limits.append(2.5 / damp)
    # a step must fit both regions at once, so bound the combined spectral radius
    combined = 1.0 / sum(1.0 / lim for lim in limits) if limits else math.inf
    return safety * combined


def fluid_step(state: FluidGridState, traj: TauTrajectory, params: RegParams, dt: float,
               check: bool = True) -> FluidGridState:
    """One SSP-RK3 step; raises ``StepRejectedError`` when ``dt`` exceeds ``stable_dt``."""
    if dt < 0:
        raise InvalidInputError("dt must be nonnegative")
    if dt == 0:
        return state
    if check:
        limit = stable_dt(state, traj, params)
        if dt > limit:
            raise StepRejectedError(f"dt={dt:.3e} exceeds the stability limit {limit:.3e}", limit)
    t0 = state.time
    k1 = fluid_rhs(state, traj, params)
    s1 = replace(state, R=state.R + dt * k1[0], M=state.M + dt * k1[1], time=t0 + dt)
    _check_positive(s1)
    k2 = fluid_rhs(s1, traj, params)
    s2 = replace(state, R=0.75 * state.R + 0.25 * (s1.R + dt * k2[0]),
                 M=0.75 * state.M + 0.25 * (s1.M + dt * k2[1]), time=t0 + 0.5 * dt)
    _check_positive(s2)
    k3 = fluid_rhs(s2, traj, params)
    out = replace(state, R=state.R / 3.0 + 2.0 / 3.0 * (s2.R + dt * k3[0]),
                  M=state.M / 3.0 + 2.0 / 3.0 * (s2.M + dt * k3[1]), time=t0 + dt)
    _check_positive(out)
    return out


def bd_entropy(state: FluidGridState, traj: TauTrajectory, params: RegParams, t: float | None = None) -> float:
    """BD entropy with effective velocity ``U + nu D ln R``."""
    _check_positive(state)
    grid = state.grid
    co = _coefficients(traj, state.time if t is None else t, params)
    V = state.U + params.nu * _d(grid, np.log(state.R))
    kin = grid.integrate(state.R * V**2 + params.eps**2 * _d(grid, np.sqrt(state.R)) ** 2)
    conf = params.alpha / (2.0 * co["tau"] ** params.alpha) * grid.integrate(confinement_potential(grid) * state.R)
    press = co["p"] / (params.gamma - 1.0) * grid.integrate(state.R**params.gamma)
    return 0.5 * co["c"] * kin + conf + press


def reg_energy_report(state: FluidGridState, traj: TauTrajectory, params: RegParams,
                      t: float | None = None) -> EnergyBreakdown:
    """Regularized pseudo-energy, its dissipation and the right-hand sides, itemized.

    Balance entries: ``rhs`` is the exact semi-discrete right-hand side on the
    torus, ``rhs_formula`` uses ``int R`` in place of ``int R D(y)``, and
    ``rhs_bound`` is the upper bound used for the decay estimate.
    """
    _check_positive(state)
    grid = state.grid
    co = _coefficients(traj, state.time if t is None else t, params)
    tau, taudot, c, a, p = co["tau"], co["taudot"], co["c"], co["a"], co["p"]
    rate = taudot / tau
    R, M = state.R, state.M
    U = M / R
    s = np.sqrt(R)
    DR, DU = _d(grid, R), _d(grid, U)
    g, m, d = params.gamma, params.m, 1
    phi = confinement_potential(grid)
    mass = grid.integrate(R)

    kin = 0.5 * c * grid.integrate(M * U)
    cap = 0.5 * c * params.eps**2 * grid.integrate(_d(grid, s) ** 2)
    conf = a * grid.integrate(phi * R)
    pot = p / (g - 1.0) * grid.integrate(R**g)
    cold = p * params.eta1 / (params.k + 1.0) * grid.integrate(R ** (-params.k))
    high = 0.5 * c * params.eta2 * grid.integrate(_d(grid, R, 2 * m + 1) ** 2)

    diss = {
        "kinetic": rate * 2.0 * kin,
        "gradient": rate * 2.0 * cap,
        "high_order": rate * 2.0 * high,
        "confinement": rate * params.alpha * conf,
        "potential": rate * d * (g - 1.0) * pot,
        "cold_pressure": rate * d * (g - 1.0) * cold,
        "viscous": c * c * params.nu * grid.integrate(R * DU**2),
        "hyperviscous": c * c * params.delta2 * grid.integrate(_d(grid, U, 2) ** 2),
        "delta1_high_order": c * c * params.delta1 * params.eta2 * grid.integrate(_d(grid, R, 2 * m + 2) ** 2),
        "delta1_pressure": c * params.delta1 * p * grid.integrate(_d(grid, _enthalpy(R, params)) * DR),
        "drag_linear": c * c * params.r0 * grid.integrate(U**2),
        "drag_cubic": c * c * params.r1 * grid.integrate(R * U**4),
        "entropic": 0.5 * c * c * params.delta1 * params.eps**2
        * grid.integrate(_d(grid, s, 2) / s * _d(grid, R, 2)),
    }
    visc_rhs = -params.nu * taudot / tau**3 * grid.integrate(R * DU)
    conf_rhs = params.delta1 * a * c
    rhs = conf_rhs * grid.integrate(_d(grid, sawtooth(grid)) * R) + visc_rhs
    rhs_formula = conf_rhs * d * mass + visc_rhs
    diss_total = sum(diss.values())
    bound = (params.alpha * d * params.delta1 / tau ** (2 + params.alpha) + params.nu * rate**2) * mass
    bound += 0.5 * diss_total
    return EnergyBreakdown(
        kinetic=kin,
        gradient=cap,
        confinement=conf,
        potential=pot,
        extras={"cold_pressure": cold, "high_order": high},
        dissipation=diss,
        balance={
            "rhs": rhs,
            "rhs_formula": rhs_formula,
            "rhs_bound": bound,
            "moment2": grid.integrate(grid.axis**2 * R),
            "mass": mass,
            "min_R": float(np.min(R)),
            "tau": tau,
        },
    )


def outer_mass_fraction(state: FluidGridState) -> float:
    """Fraction of mass outside the central half of the torus."""
    R = state.R
    return float(np.sum(R[~state.grid.central_mask]) / np.sum(R))


@dataclass
class FluidRun:
    """Samples taken every ``sample_every`` accepted steps, plus exact-time snapshots."""

    times: list[float]
    reports: list[EnergyBreakdown]
    bd: list[float]
    outer_fraction: list[float]
    final: FluidGridState
    steps: int
    snapshots: list[FluidGridState] = field(default_factory=list)
    rejections: int = 0

    @property
    def energy(self) -> np.ndarray:
        return np.array([r.total for r in self.reports])

    def column(self, key: str) -> np.ndarray:
        if key == "dissipation":
            return np.array([r.dissipation_total for r in self.reports])
        return np.array([r.balance[key] for r in self.reports])

    def balance_residual(self, rhs_key: str = "rhs") -> float:
        """``E(T) - E(0) + int D - int RHS`` with trapezoidal time quadrature."""
        t = np.array(self.times)
        e = self.energy
        integrand = self.column("dissipation") - self.column(rhs_key)
        return float(e[-1] - e[0] + np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t)))

    @property
    def boundary_contaminated(self) -> bool:
        """Outer-half mass fraction grew by more than ``BOUNDARY_TOL`` since the start."""
        f = np.array(self.outer_fraction)
        return bool(np.max(f - f[0]) > BOUNDARY_TOL)

    def write_ledger(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mass", "E_reg", "D_reg", "RHS_bound", "E_BD", "moment2", "minR"])
            for t, r, b in zip(self.times, self.reports, self.bd):
                vals = [t, r.balance["mass"], r.total, r.dissipation_total, r.balance["rhs_bound"], b,
                        r.balance["moment2"], r.balance["min_R"]]
                w.writerow([f"{float(v):.17g}" for v in vals])


def evolve(state: FluidGridState, traj: TauTrajectory, params: RegParams, t_end: float,
           dt: float | None = None, dt_max: float = 0.05, safety: float = SAFETY,
           sample_every: int = 1, snapshot_times: Sequence[float] = (),
           shrink_rejected: bool = False) -> FluidRun:
    """Integrate to ``t_end`` with a fixed ``dt`` or the adaptive stable step.

    Steps are shortened to land exactly on ``snapshot_times`` and ``t_end``.
    With a fixed ``dt`` a step above the stability limit raises
    ``StepRejectedError`` unless ``shrink_rejected`` is set, in which case the
    proposed step is used and the rejection is counted.
    """
    if t_end > traj.t_max:
        raise InvalidInputError("trajectory too short for the requested run")
    tol = 1e-12 * max(1.0, t_end)
    stops = sorted(t for t in snapshot_times if state.time - tol <= t <= t_end + tol)
    times, reports, bd, outer, snaps = [], [], [], [], []

    def sample(s):
        times.append(s.time)
        reports.append(reg_energy_report(s, traj, params))
        bd.append(bd_entropy(s, traj, params))
        outer.append(outer_mass_fraction(s))

    def snap(s):
        while stops and s.time >= stops[0] - tol:
            stops.pop(0)
            snaps.append(s)

    sample(state)
    snap(state)
    steps = rejections = 0
    while state.time < t_end - tol:
        h = min(stable_dt(state, traj, params, safety), dt_max) if dt is None else dt
        target = min(stops[0], t_end) if stops else t_end
        h = min(h, target - state.time)
        try:
            state = fluid_step(state, traj, params, h, check=dt is not None)
        except StepRejectedError as exc:
            if not shrink_rejected:
                raise
            rejections += 1
            state = fluid_step(state, traj, params, min(exc.proposed_dt, h), check=False)
        steps += 1
        snap(state)
        if steps % sample_every == 0 or state.time >= t_end - tol:
            sample(state)
    return FluidRun(times, reports, bd, outer, state, steps, snaps, rejections)


def write_snapshot(state: FluidGridState, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "R", "M", "U"])
        for row in zip(state.grid.axis, state.R, state.M, state.U):
            w.writerow([f"{float(v):.17g}" for v in row])
