"""Drive one configured run: solve, write the ledger and the JSON summary.

Output files land in ``<root>/<outputs.directory>`` where the root comes
from the ``DISPERSIVE_LAB_OUTPUT`` environment variable (default
``./runs``).  Runs are deterministic given the configuration.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from jsonschema import Draft202012Validator

from . import fluid1d
from .config import RunConfig
from .diagnostics import EnergyLedger, b_functional, fit_decay, h4_shape, moments, profile_converge
from .errors import ConfigError, LabError
from .grid import Grid
from .madelung import madelung_forward
from .spectral_nls import (
    BOUNDARY_WARN_FRACTION,
    Frame,
    NlsParams,
    WaveField,
    boundary_mass_fraction,
    decay_rate,
    final_state,
    gaussian,
    nls_energy,
    nls_energy_original,
    plus_state_from_profile,
    profile_distance,
    read_field,
    spectral_tail_fraction,
    step_original,
    step_rescaled,
    write_field,
)
from .tau_scaling import solve_tau, tau_at, write_tau_csv

ENV_OUTPUT = "DISPERSIVE_LAB_OUTPUT"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CONFORMANCE = 0, 2, 3, 4
SCHEMA_VERSION = 1
MIN_DENSITY = 1e-3
B_WINDOW = (1.0, 50.0)

_check = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "value": {"type": ["number", "boolean", "null"]},
        "threshold": {"type": "string"},
        "passed": {"type": "boolean"},
    },
    "required": ["name", "value", "threshold", "passed"],
    "additionalProperties": False,
}
_fit = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "exponent": {"type": "number"},
        "intercept": {"type": "number"},
        "window": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "residual": {"type": "number", "minimum": 0},
        "samples": {"type": "integer"},
        "expected": {"type": ["number", "null"]},
    },
    "required": ["name", "exponent", "intercept", "window", "residual", "samples"],
}
SUMMARY_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "run summary",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "family": {"enum": ["tau_only", "nls_original", "nls_rescaled", "fluid_regularized", "korteweg_scatter"]},
        "status": {"enum": ["ok", "solver_failure", "conformance_failure"]},
        "exit_code": {"enum": [EXIT_OK, EXIT_SOLVER, EXIT_CONFORMANCE]},
        "config": {"type": "object"},
        "drifts": {"type": "object", "additionalProperties": {"type": "number"}},
        "residuals": {"type": "object", "additionalProperties": {"type": "number"}},
        "decay_fits": {"type": "array", "items": _fit},
        "profile_convergence": {"type": ["object", "null"]},
        "flags": {
            "type": "object",
            "properties": {
                "boundary_contaminated": {"type": "boolean"},
                "positivity_violated": {"type": "boolean"},
                "cfl_rejections": {"type": "integer", "minimum": 0},
            },
            "required": ["boundary_contaminated", "positivity_violated", "cfl_rejections"],
            "additionalProperties": False,
        },
        "checks": {"type": "array", "items": _check},
        "metrics": {"type": "object"},
        "files": {"type": "object", "additionalProperties": {"type": "string"}},
        "error": {
            "type": ["object", "null"],
            "properties": {"type": {"type": "string"}, "message": {"type": "string"},
                           "time": {"type": ["number", "null"]}},
        },
        "runtime_s": {"type": "number", "minimum": 0},
    },
    "required": ["schema_version", "family", "status", "exit_code", "config", "drifts", "residuals",
                 "decay_fits", "profile_convergence", "flags", "checks", "metrics", "files", "error"],
    "additionalProperties": False,
}


def validate_summary(summary: dict) -> None:
    Draft202012Validator(SUMMARY_SCHEMA).validate(summary)


@dataclass(frozen=True)
class RunSummary:
    exit_code: int
    summary_path: Path
    summary: dict

    @property
    def status(self) -> str:
        return self.summary["status"]


def output_root(root: str | Path | None = None) -> Path:
    if root is not None:
        return Path(root)
    return Path(os.environ.get(ENV_OUTPUT, "runs"))


class _Result:
    """Accumulates the summary sections while a run proceeds."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.drifts: dict[str, float] = {}
        self.residuals: dict[str, float] = {}
        self.fits: list[dict] = []
        self.profile: dict | None = None
        self.flags = {"boundary_contaminated": False, "positivity_violated": False, "cfl_rejections": 0}
        self.checks: list[dict] = []
        self.metrics: dict[str, Any] = {}
        self.files: dict[str, str] = {}

    def check(self, name: str, value, threshold: str, passed: bool) -> None:
        if isinstance(value, (float, np.floating)):
            value = float(value)
        elif isinstance(value, (bool, np.bool_)):
            value = bool(value)
        self.checks.append({"name": name, "value": value, "threshold": threshold, "passed": bool(passed)})

    def file(self, key: str, name: str) -> Path:
        self.files[key] = name
        return self.directory / name


def _geometric_times(start: float | None, ratio: float, t_max: float) -> list[float]:
    if start is None:
        return []
    out, t = [], start
    while t <= t_max * (1 + 1e-12):
        out.append(t)
        t *= ratio
    return out


def _perturbation(grid: Grid, seed: int, amplitude: float):
    # smooth random factor 1 + amplitude * sum of the 8 lowest modes, fixed by the seed
    if not amplitude:
        return 1.0
    rng = np.random.default_rng(seed)
    pert = np.zeros(grid.shape)
    for mode in range(1, 9):
        for c in grid.coords:
            phase = rng.uniform(0.0, 2.0 * math.pi)
            pert += rng.standard_normal() * np.cos(math.pi * mode * c / grid.half_length + phase) / mode
    return 1.0 + amplitude * pert / np.max(np.abs(pert))


def _initial_field(config: RunConfig, grid: Grid, frame: Frame) -> WaveField:
    init, eps = config.initial_data, config.physical.eps
    if init.kind == "custom_file":
        field = read_field(init.path)
        if field.grid != grid or field.eps != eps:
            raise ConfigError("custom field grid or eps differs from the configuration", "initial_data.path")
        mass = field.mass
        return WaveField(grid, field.values / math.sqrt(mass), eps, frame, 0.0)
    if init.kind == "wkb":
        amp = init.amplitude
        field = gaussian(grid, eps, amp["width"], amp.get("center", 0.0), init.phase["curvature"], frame)
    else:
        field = gaussian(grid, eps, init.width, init.center, init.phase_b, frame)
    factor = _perturbation(grid, config.seed, init.perturbation)
    values = field.values * factor
    return WaveField(grid, values / math.sqrt(grid.integrate(np.abs(values) ** 2)), eps, frame, 0.0)


def _ensure_decade(times: list[float]) -> bool:
    return len(times) >= 4 and times[-1] >= 10.0 * times[0]


def _run_tau(config: RunConfig, res: _Result) -> None:
    alpha, t_max = config.physical.alpha, config.scheme.t_max
    traj = solve_tau(alpha, t_max, config.scheme.tol)
    if config.outputs.ledger:
        write_tau_csv(traj, res.file("ledger", "tau.csv"))
    first = float(np.max(traj.residual()))
    res.residuals["first_integral"] = first
    tau_end, taudot_end = tau_at(traj, t_max)
    res.metrics.update({"knots": int(traj.t.size), "tau_over_t": tau_end / t_max, "taudot_end": taudot_end})
    res.check("first_integral_residual", first, "<= 1e-10", first <= 1e-10)
    if alpha == 2.0:
        dense = np.linspace(0.0, t_max, 20001)
        err = float(np.max(np.abs(tau_at(traj, dense)[0] - np.sqrt(1.0 + dense**2))))
        res.residuals["closed_form"] = err
        res.check("closed_form_error", err, "<= 1e-8", err <= 1e-8)


def _run_nls_original(config: RunConfig, res: _Result) -> None:
    phys, sch = config.physical, config.scheme
    grid = Grid(phys.d, config.grid.n, config.grid.half_length)
    field = _initial_field(config, grid, Frame.ORIGINAL)
    params = NlsParams(sigma=phys.sigma, lam=phys.lam, eps=phys.eps, dim=phys.d)
    steps = int(round(sch.t_max / sch.dt))
    gamma = phys.sigma + 1.0
    unit_pressure = abs(phys.lam - gamma / (gamma - 1.0)) <= 1e-12 * phys.lam
    rate = min(2.0, phys.d * (gamma - 1.0))
    snap_times = _geometric_times(sch.snapshot_start, sch.snapshot_ratio, sch.t_max)
    ledger = EnergyLedger(alpha=rate)
    b_series: list[tuple[float, float]] = []
    e0 = nls_energy_original(field, params).total
    m0 = field.mass
    boundary = 0.0

    def record(f: WaveField):
        nonlocal boundary
        row = nls_energy_original(f, params)
        mom = moments(f.density, grid, (0, 1, 2))
        first = float(np.sum(mom[1])) if np.ndim(mom[1]) else mom[1]
        ledger.append(f.time, row, mom[0], first, mom[2])
        boundary = max(boundary, boundary_mass_fraction(f))
        if unit_pressure and f.time > 0:
            b, _ = b_functional(madelung_forward(f), f.time, phys.eps, gamma)
            b_series.append((f.time, b * (1.0 + f.time) ** rate))

    record(field)
    for i in range(1, steps + 1):
        field = step_original(field, sch.dt, params)
        if i % sch.sample_every == 0 or i == steps:
            record(field)
        if config.outputs.snapshots and snap_times and abs(field.time - snap_times[0]) < 0.5 * sch.dt:
            write_field(field, res.file(f"snapshot_t{snap_times.pop(0):.6g}", f"psi_t{field.time:.6g}.bin"))
    if config.outputs.ledger:
        ledger.write_csv(res.file("ledger", "ledger.csv"))
    res.drifts["mass"] = abs(field.mass - m0) / m0
    res.drifts["energy"] = abs(ledger.totals[-1] - e0) / abs(e0) if e0 else abs(ledger.totals[-1])
    res.flags["boundary_contaminated"] = boundary > BOUNDARY_WARN_FRACTION
    res.metrics["boundary_fraction_max"] = boundary
    res.check("mass_drift", res.drifts["mass"], "<= 1e-10", res.drifts["mass"] <= 1e-10)
    if b_series:
        t = np.array([p[0] for p in b_series])
        v = np.array([p[1] for p in b_series])
        inside = (t >= B_WINDOW[0]) & (t <= B_WINDOW[1])
        if np.any(inside) and np.any(t > B_WINDOW[1]):
            ref = float(np.max(v[inside]))
            ratio = float(np.max(v[t >= B_WINDOW[0]]) / ref)
            res.metrics.update({"b_constant_window_max": ref, "b_constant_ratio": ratio})
            res.check("b_functional_bounded", ratio, "<= 1.2", ratio <= 1.2)
        res.metrics["b_constant_max"] = float(np.max(v))


def _run_nls_rescaled(config: RunConfig, res: _Result) -> None:
    phys, sch = config.physical, config.scheme
    grid = Grid(phys.d, config.grid.n, config.grid.half_length)
    field = _initial_field(config, grid, Frame.RESCALED)
    params = NlsParams.from_initial(field, phys.sigma, phys.lam, alpha=phys.alpha)
    steps = int(round(sch.t_max / sch.dt))
    traj = solve_tau(phys.alpha, steps * sch.dt + sch.dt)
    rate = decay_rate(phys.alpha, phys.d, phys.sigma)
    snap_times = _geometric_times(sch.snapshot_start, sch.snapshot_ratio, sch.t_max)
    ledger = EnergyLedger(alpha=rate)
    snaps: list[tuple[float, np.ndarray]] = []
    e_prev = nls_energy(field, traj, 0.0, params)
    e0 = e_prev.total
    m0 = field.mass
    identity = 0.0
    sup_q = boundary = tail = 0.0
    bound_ratio = 1.0

    def record(f: WaveField, row):
        nonlocal sup_q, boundary, tail, bound_ratio
        mom = moments(f.density, grid, (0, 1, 2))
        first = float(np.sum(mom[1])) if np.ndim(mom[1]) else mom[1]
        ledger.append(f.time, row, mom[0], first, mom[2])
        sup_q = max(sup_q, row.balance["moment2"] + row.balance["lp_norm"])
        boundary = max(boundary, boundary_mass_fraction(f))
        tail = max(tail, spectral_tail_fraction(f))
        tau = tau_at(traj, f.time)[0]
        bound_ratio = max(bound_ratio, row.total * tau**rate / e0)

    record(field, e_prev)
    pending = list(snap_times)
    for i in range(1, steps + 1):
        t = (i - 1) * sch.dt
        field = step_rescaled(field, traj, t, sch.dt, params)
        field = field.with_values(field.values, i * sch.dt)
        row = nls_energy(field, traj, field.time, params)
        identity += row.total - e_prev.total + 0.5 * sch.dt * (row.dissipation_total + e_prev.dissipation_total)
        e_prev = row
        if i % sch.sample_every == 0 or i == steps:
            record(field, row)
        while pending and abs(field.time - pending[0]) < 0.5 * sch.dt:
            pending.pop(0)
            snaps.append((field.time, field.density.copy()))
            if config.outputs.snapshots:
                write_field(field, res.file(f"snapshot_t{field.time:.6g}", f"psi_t{field.time:.6g}.bin"))
    if config.outputs.ledger:
        ledger.write_csv(res.file("ledger", "ledger.csv"))
    res.drifts["mass"] = abs(field.mass - m0) / m0
    res.residuals["pseudo_energy_identity"] = identity
    res.metrics.update({
        "decay_rate": rate,
        "pointwise_bound_ratio": bound_ratio,
        "semiclassical_sup": sup_q,
        "boundary_fraction_max": boundary,
        "spectral_tail_max": tail,
    })
    res.flags["boundary_contaminated"] = boundary > BOUNDARY_WARN_FRACTION
    res.check("mass_drift", res.drifts["mass"], "<= 1e-10", res.drifts["mass"] <= 1e-10)
    res.check("pseudo_energy_bound", bound_ratio, "<= 1.05", bound_ratio <= 1.05)
    series = list(zip(ledger.times, ledger.totals.tolist()))
    if sch.fit_window is not None:
        fit = fit_decay(series, sch.fit_window, traj)
        res.fits.append({"name": "pseudo_energy", **fit.to_dict(), "expected": -rate})
    if phys.d == 1 and snaps and snaps[-1][0] < field.time - 0.5 * sch.dt:
        snaps.append((field.time, field.density.copy()))
    if phys.d == 1 and _ensure_decade([s[0] for s in snaps]):
        conv = profile_converge([s[0] for s in snaps], [s[1] for s in snaps], grid.spacing)
        res.profile = conv.to_dict()


def _fluid_initial(config: RunConfig, grid: Grid) -> fluid1d.FluidGridState:
    init = config.initial_data
    if init.kind == "custom_file":
        data = np.loadtxt(init.path, delimiter=",", skiprows=1)
        if data.shape != (grid.n, 4) or not np.allclose(data[:, 0], grid.axis, rtol=0, atol=1e-12):
            raise ConfigError("custom fluid snapshot does not match the grid", "initial_data.path")
        return fluid1d.FluidGridState(grid, data[:, 1].copy(), data[:, 2].copy())
    if init.phase_b:
        raise ConfigError("fluid initial velocity must be periodic; phase_b must be 0", "initial_data.phase_b")
    y = grid.axis
    bump = np.exp(-((y - init.center) ** 2) / (2.0 * init.width**2))
    bump = bump * _perturbation(grid, config.seed, init.perturbation)
    R0 = bump / grid.integrate(bump) + init.background
    return fluid1d.initial_state(grid, R0)


def _run_fluid(config: RunConfig, res: _Result) -> None:
    params, sch = config.reg, config.scheme
    grid = params.grid(config.grid.n)
    state = _fluid_initial(config, grid)
    traj = solve_tau(params.alpha, sch.t_max * (1.0 + 1e-9) + 1.0)
    snap_times = _geometric_times(sch.snapshot_start, sch.snapshot_ratio, sch.t_max)
    fixed = sch.dt_policy == "fixed"
    run = fluid1d.evolve(state, traj, params, sch.t_max, dt=sch.dt if fixed else None,
                         dt_max=sch.dt_max or math.inf, sample_every=sch.sample_every,
                         snapshot_times=snap_times, shrink_rejected=True)
    if config.outputs.ledger:
        run.write_ledger(res.file("ledger", "ledger.csv"))
    if config.outputs.snapshots:
        for s in run.snapshots:
            fluid1d.write_snapshot(s, res.file(f"snapshot_t{s.time:.6g}", f"fluid_t{s.time:.6g}.csv"))
    mass = run.column("mass")
    min_r = float(np.min(run.column("min_R")))
    t = np.array(run.times)
    m2 = run.column("moment2")
    res.drifts["mass"] = float(np.max(np.abs(mass - mass[0])) / mass[0])
    res.residuals["energy_balance"] = run.balance_residual("rhs")
    res.residuals["energy_balance_formula"] = run.balance_residual("rhs_formula")
    res.flags["boundary_contaminated"] = run.boundary_contaminated
    res.flags["positivity_violated"] = min_r < MIN_DENSITY
    res.flags["cfl_rejections"] = run.rejections
    energy = run.energy
    shape_vals = h4_shape(t, params.alpha, params.nu)
    res.metrics.update({
        "steps": run.steps,
        "min_R": min_r,
        "energy_final": float(energy[-1]),
        "bd_final": float(run.bd[-1]),
        "h4_c0": float(np.max(energy / shape_vals)),
    })
    res.check("mass_drift", res.drifts["mass"], "<= 1e-10", res.drifts["mass"] <= 1e-10)
    res.check("min_density", min_r, ">= 1e-3", min_r >= MIN_DENSITY)
    if t[-1] >= 1.0:
        # sup over the run against the larger of the initial value and the first-unit peak
        early = float(np.max(m2[t <= 1.0]))
        ratio = float(np.max(m2) / early)
        res.metrics["moment2_ratio"] = ratio
        res.check("moment2_bounded", ratio, "<= 1.1", ratio <= 1.1)
        # stricter reference: the value at t = 1 itself
        at_one = float(np.max(m2) / np.interp(1.0, t, m2))
        res.metrics["moment2_ratio_t1"] = at_one
        res.check("moment2_vs_t1", at_one, "<= 1.1", at_one <= 1.1)
    if sch.fit_window is not None:
        fit = fit_decay(list(zip(run.times, energy.tolist())), sch.fit_window, traj)
        expected = -min(2.0, params.alpha, params.gamma - 1.0)
        res.fits.append({"name": "regularized_energy", **fit.to_dict(), "expected": expected})
        ok = abs(fit.exponent - expected) <= 0.25 * abs(expected)
        res.check("regularized_energy_slope", fit.exponent, f"within 25% of {expected:g}", ok)
    snaps = list(run.snapshots)
    if not snaps or snaps[-1].time < run.final.time - 1e-9:
        snaps.append(run.final)
    if _ensure_decade([s.time for s in snaps]):
        conv = profile_converge([s.time for s in snaps], [s.R for s in snaps], grid.spacing)
        res.profile = conv.to_dict()


def _run_korteweg(config: RunConfig, res: _Result) -> None:
    phys, sch = config.physical, config.scheme
    grid = Grid(phys.d, config.grid.n, config.grid.half_length)
    init = config.initial_data
    a_inf = gaussian(grid, phys.eps, init.width, init.center, init.phase_b)
    plus = plus_state_from_profile(a_inf)
    params = NlsParams(sigma=phys.sigma, lam=phys.lam, eps=phys.eps, mu=phys.lam, alpha=2.0, dim=phys.d)
    traj = solve_tau(2.0, sch.t_final)
    field = final_state(a_inf, params, sch.t_final)
    t = sch.t_final
    rows = []
    boundary = 0.0
    for target in sorted(sch.sample_times, reverse=True):
        while t > target + 1e-12 * target:
            tau = tau_at(traj, t)[0]
            dt = min(sch.dt_factor * tau, t - target)
            field = step_rescaled(field, traj, t, -dt, params)
            t -= dt
        field = field.with_values(field.values, target)
        t = target
        tau = tau_at(traj, t)[0]
        frac = boundary_mass_fraction(field)
        boundary = max(boundary, frac)
        rows.append((t, tau, profile_distance(field, plus, tau, t), field.mass, frac))
    rows.sort()
    if config.outputs.ledger:
        with open(res.file("ledger", "ledger.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "tau", "profile_distance", "mass", "boundary_fraction"])
            for row in rows:
                w.writerow([f"{float(v):.17g}" for v in row])
    dist = [r[2] for r in rows]
    monotone = all(b < a for a, b in zip(dist, dist[1:]))
    ratio = dist[-1] / dist[0]
    res.drifts["mass"] = float(abs(field.mass - 1.0))
    res.flags["boundary_contaminated"] = boundary > BOUNDARY_WARN_FRACTION
    res.metrics.update({"profile_distances": [[r[0], r[2]] for r in rows], "distance_ratio": ratio,
                        "boundary_fraction_max": boundary})
    res.check("profile_distance_monotone", monotone, "strictly decreasing", monotone)
    res.check("profile_distance_ratio", ratio, "<= 0.1", ratio <= 0.1)
    if len(rows) >= 8:
        fit = fit_decay([(r[0], r[2]) for r in rows], (rows[0][0], rows[-1][0]))
        res.fits.append({"name": "profile_distance", **fit.to_dict(), "expected": None})


_DRIVERS = {
    "tau_only": _run_tau,
    "nls_original": _run_nls_original,
    "nls_rescaled": _run_nls_rescaled,
    "fluid_regularized": _run_fluid,
    "korteweg_scatter": _run_korteweg,
}


def _clean(obj):
    # JSON without NaN/inf; numpy scalars to Python
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def run(config: RunConfig, root: str | Path | None = None) -> RunSummary:
    """Execute ``config``; the summary JSON is written even when the solver fails."""
    directory = output_root(root) / config.outputs.directory
    try:
        directory.mkdir(parents=True, exist_ok=True)
        probe = directory / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory not writable: {exc}", "outputs.directory") from exc
    res = _Result(directory)
    error = None
    start = time.perf_counter()
    try:
        _DRIVERS[config.family](config, res)
    except ConfigError:
        raise
    except LabError as exc:
        error = {"type": type(exc).__name__, "message": str(exc), "time": getattr(exc, "time", None)}
        if type(exc).__name__ == "PositivityError":
            res.flags["positivity_violated"] = True
    if error is not None:
        status, code = "solver_failure", EXIT_SOLVER
    elif res.flags["boundary_contaminated"] or res.flags["positivity_violated"]:
        status, code = "conformance_failure", EXIT_CONFORMANCE
    else:
        status, code = "ok", EXIT_OK
    summary = _clean({
        "schema_version": SCHEMA_VERSION,
        "family": config.family,
        "status": status,
        "exit_code": code,
        "config": config.to_dict(),
        "drifts": res.drifts,
        "residuals": res.residuals,
        "decay_fits": res.fits,
        "profile_convergence": res.profile,
        "flags": res.flags,
        "checks": res.checks,
        "metrics": res.metrics,
        "files": res.files,
        "error": error,
        "runtime_s": time.perf_counter() - start,
    })
    validate_summary(summary)
    path = directory / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, allow_nan=False))
    return RunSummary(code, path, summary)


def load_summary(path: str | Path) -> dict:
    summary = json.loads(Path(path).read_text())
    validate_summary(summary)
    return summary


def format_report(summary: dict) -> str:
    """Human-readable verdict table."""
    lines = [f"family: {summary['family']}    status: {summary['status']}    exit code: {summary['exit_code']}"]
    if summary["error"]:
        lines.append(f"error: {summary['error']['type']}: {summary['error']['message']}")
    rows = [("check", "value", "threshold", "verdict")]
    for c in summary["checks"]:
        v = c["value"]
        shown = f"{v:.6g}" if isinstance(v, float) else str(v)
        rows.append((c["name"], shown, c["threshold"], "PASS" if c["passed"] else "FAIL"))
    for f in summary["decay_fits"]:
        exp = f.get("expected")
        rows.append((f"fit:{f['name']}", f"{f['exponent']:.4f}", "" if exp is None else f"expected {exp:g}", "info"))
    for name, value in summary["flags"].items():
        bad = bool(value)
        rows.append((f"flag:{name}", str(value), "false / 0", "FAIL" if bad and name != "cfl_rejections" else "ok"))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return "\n".join(lines)
