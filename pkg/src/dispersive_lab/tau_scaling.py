"""Scaling function for the dispersive frame.

The scaling function solves

    tau'' = alpha / (2 tau^(1 + alpha)),   tau(0) = 1,   tau'(0) = 0,

whose first integral is ``tau'^2 = 1 - tau^(-alpha)``.  It grows linearly in
time and for ``alpha = 2`` it equals ``sqrt(1 + t^2)``.

The square-root form of the first integral is degenerate at ``t = 0``, so the
second-order system is integrated instead.  A fourth-order Taylor expansion
provides the first knot, then classical RK4 with step doubling takes over.
Every accepted step is checked against three budgets: the local error, the
first-integral residual at the new knot and the cubic Hermite interpolation
error at the step midpoint.  Both halves of a doubled step are stored, which
gives the dense output twice the knot density at no extra cost.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from .errors import ConvergenceError, InvalidInputError, OutOfRangeError

DEFAULT_TOL = 1e-10

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class TauTrajectory:
    """Knots ``(t, tau, taudot)`` with cubic Hermite dense output."""

    alpha: float
    t: npt.NDArray[np.float64]
    tau: npt.NDArray[np.float64]
    taudot: npt.NDArray[np.float64]
    tol: float
    interp_order: int = 3

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    @property
    def knots(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.tau.tolist(), self.taudot.tolist()))

    @property
    def tauddot(self) -> npt.NDArray[np.float64]:
        return 0.5 * self.alpha * self.tau ** (-1.0 - self.alpha)

    def residual(self) -> npt.NDArray[np.float64]:
        """First-integral residual at every knot."""
        return first_integral_residual(self.alpha, self.tau, self.taudot)


def first_integral_residual(alpha: float, tau, taudot):
    return np.abs(np.asarray(taudot) ** 2 - (1.0 - np.asarray(tau) ** (-alpha)))


def _accel(alpha: float, tau: float) -> float:
    return 0.5 * alpha * tau ** (-1.0 - alpha)


def _rk4(alpha: float, tau: float, v: float, h: float) -> tuple[float, float]:
    k1x, k1v = v, _accel(alpha, tau)
    k2x, k2v = v + 0.5 * h * k1v, _accel(alpha, tau + 0.5 * h * k1x)
    k3x, k3v = v + 0.5 * h * k2v, _accel(alpha, tau + 0.5 * h * k2x)
    k4x, k4v = v + h * k3v, _accel(alpha, tau + h * k3x)
    return (
        tau + h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0,
        v + h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0,
    )


def _taylor_start(alpha: float, h: float) -> tuple[float, float]:
    c4 = alpha * alpha * (1.0 + alpha)
    return 1.0 + 0.25 * alpha * h * h - c4 * h**4 / 96.0, 0.5 * alpha * h - c4 * h**3 / 24.0


def _hermite_mid(h: float, x0: float, d0: float, x1: float, d1: float) -> float:
    return 0.5 * (x0 + x1) + 0.125 * h * (d0 - d1)


def solve_tau(alpha: float, t_max: float, tol: float = DEFAULT_TOL) -> TauTrajectory:
    """Integrate the scaling ODE on ``[0, t_max]``."""
    for name, value in (("alpha", alpha), ("t_max", t_max), ("tol", tol)):
        if not math.isfinite(value) or value <= 0.0:
            raise InvalidInputError(f"{name} must be finite and positive, got {value!r}")
    alpha = float(alpha)
    t_max = float(t_max)

    def resid(x: float, v: float) -> float:
        return abs(v * v - (1.0 - x ** (-alpha)))

    # first knot from the Taylor expansion, small enough to meet the residual budget
    h0 = min(1e-3, 0.5 * t_max)
    while True:
        x, v = _taylor_start(alpha, h0)
        if resid(x, v) <= 1e-3 * tol and _taylor_start(alpha, h0)[0] > 1.0:
            break
        h0 *= 0.5
        if h0 < 1e-12:
            raise ConvergenceError("Taylor bootstrap could not meet tolerance", 0.0)

    ts = [0.0, h0]
    xs = [1.0, x]
    vs = [0.0, v]
    t = h0
    local_tol = 1e-2 * tol
    h = h0
    h_min = 1e-14 * max(1.0, t_max)
    while t < t_max:
        h = min(h, t_max - t)
        x_big, v_big = _rk4(alpha, x, v, h)
        x_mid, v_mid = _rk4(alpha, x, v, 0.5 * h)
        x_new, v_new = _rk4(alpha, x_mid, v_mid, 0.5 * h)
        err = max(abs(x_new - x_big), abs(v_new - v_big)) / 15.0
        x_new += (x_new - x_big) / 15.0
        v_new += (v_new - v_big) / 15.0
        a0, a1 = _accel(alpha, x), _accel(alpha, x_new)
        herm_err = max(
            abs(_hermite_mid(h, x, v, x_new, v_new) - x_mid),
            abs(_hermite_mid(h, v, a0, v_new, a1) - v_mid),
        )
        ok = err <= local_tol * h and herm_err <= 0.5 * tol and resid(x_new, v_new) <= 0.5 * tol
        if ok:
            ts.extend((t + 0.5 * h, t + h))
            xs.extend((x_mid, x_new))
            vs.extend((v_mid, v_new))
            t += h
            x, v = x_new, v_new
            ratio = (local_tol * h / err) ** 0.2 if err > 0.0 else 4.0
            h *= min(4.0, max(0.5, 0.9 * ratio))
        else:
            ratio = (local_tol * h / err) ** 0.2 if err > 0.0 else 0.5
            h *= min(0.5, max(0.1, 0.9 * ratio))
        if h < h_min and t < t_max:
            raise ConvergenceError(f"step size underflow at t={t}", t)
    ts[-1] = t_max
    return TauTrajectory(
        alpha=alpha,
        t=np.asarray(ts),
        tau=np.asarray(xs),
        taudot=np.asarray(vs),
        tol=float(tol),
    )


def _locate(traj: TauTrajectory, t: npt.NDArray[np.float64]) -> npt.NDArray[np.intp]:
    idx = np.searchsorted(traj.t, t, side="right") - 1
    return np.clip(idx, 0, traj.t.size - 2)


def _hermite(traj: TauTrajectory, t: npt.NDArray[np.float64]):
    i = _locate(traj, t)
    t0, t1 = traj.t[i], traj.t[i + 1]
    h = t1 - t0
    s = (t - t0) / h
    acc = traj.tauddot
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    tau = h00 * traj.tau[i] + h10 * h * traj.taudot[i] + h01 * traj.tau[i + 1] + h11 * h * traj.taudot[i + 1]
    taudot = h00 * traj.taudot[i] + h10 * h * acc[i] + h01 * traj.taudot[i + 1] + h11 * h * acc[i + 1]
    return tau, taudot


def _check_range(traj: TauTrajectory, t: npt.NDArray[np.float64]) -> None:
    slack = 1e-12 * max(1.0, traj.t_max)
    if t.size and (np.min(t) < -slack or np.max(t) > traj.t_max + slack or not np.all(np.isfinite(t))):
        raise OutOfRangeError(f"time outside [0, {traj.t_max}]")


def tau_at(traj: TauTrajectory, t):
    """Return ``(tau, taudot)`` at ``t`` (scalar or array)."""
    arr = np.asarray(t, dtype=float)
    _check_range(traj, np.atleast_1d(arr))
    tau, taudot = _hermite(traj, np.clip(np.atleast_1d(arr), 0.0, traj.t_max))
    if arr.ndim == 0:
        return float(tau[0]), float(taudot[0])
    return tau.reshape(arr.shape), taudot.reshape(arr.shape)


def phase_integral(traj: TauTrajectory, t1: float, t2: float, p: float) -> float:
    """Integral of ``tau(s)^(-p)`` over ``[t1, t2]``."""
    if t2 < t1:
        raise InvalidInputError(f"inverted interval [{t1}, {t2}]")
    if p <= 0.0:
        raise InvalidInputError("p must be positive")
    _check_range(traj, np.array([t1, t2], dtype=float))
    if t2 == t1:
        return 0.0
    i1 = int(_locate(traj, np.array([t1]))[0])
    i2 = int(_locate(traj, np.array([t2]))[0])
    edges = np.concatenate(([t1], traj.t[i1 + 1 : i2 + 1], [t2]))
    edges = edges[(edges >= t1) & (edges <= t2)]
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GL_NODES[None, :]
    tau, _ = _hermite(traj, nodes.ravel())
    vals = tau.reshape(nodes.shape) ** (-p)
    return float(np.sum(half * (vals @ _GL_WEIGHTS)))


def write_tau_csv(traj: TauTrajectory, path: str | Path) -> None:
    res = traj.residual()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "tau", "taudot", "residual"])
        for row in zip(traj.t, traj.tau, traj.taudot, res):
            writer.writerow([f"{float(v):.17g}" for v in row])
