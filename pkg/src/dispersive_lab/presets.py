"""Named scenarios with desk-scale grids and steps.

Every preset is built from a JSON-style document and goes through the same
validation as a user configuration.
"""

from __future__ import annotations

import math

from .config import RunConfig, config_from_dict
from .errors import InvalidInputError

SQRT2 = math.sqrt(2.0)
SEMICLASSICAL_EPS = (1.0, 0.1, 0.01)


def _long_range() -> dict:
    # sigma = 0.4 < 1/d: the nonlinearity still acts at large times
    return {
        "family": "nls_rescaled",
        "physical": {"d": 1, "sigma": 0.4, "lam": 1.0, "eps": 1.0, "alpha": 1.0},
        "grid": {"n": 512, "half_length": 24.0},
        "scheme": {"dt": 0.02, "t_max": 100.0, "snapshot_start": 5.0, "snapshot_ratio": SQRT2,
                   "sample_every": 5, "fit_window": [5.0, 100.0]},
        "initial_data": {"kind": "gaussian", "width": 1.0},
        "outputs": {"directory": "long_range"},
        "seed": 0,
    }


def _semiclassical(eps: float) -> dict:
    # WKB data focusing at t = 1 (phase -|x|^2 / 2); 20 steps per unit eps
    return {
        "family": "nls_rescaled",
        "physical": {"d": 1, "sigma": 0.8, "lam": 1.0, "eps": eps, "alpha": 0.8},
        "grid": {"n": 8192, "half_length": 16.0},
        "scheme": {"dt": min(eps / 20.0, 0.01), "t_max": 3.0, "sample_every": 10},
        "initial_data": {"kind": "wkb", "amplitude": {"width": 1.0}, "phase": {"curvature": -1.0}},
        "outputs": {"directory": f"semiclassical_eps{eps:g}"},
        "seed": 0,
    }


def _korteweg() -> dict:
    # unit pressure rho^gamma with gamma = 5/2 corresponds to sigma = 3/2, lam = 5/3
    return {
        "family": "korteweg_scatter",
        "physical": {"d": 1, "gamma": 2.5, "sigma": 1.5, "lam": 5.0 / 3.0, "eps": 1.0, "alpha": 2.0},
        "grid": {"n": 512, "half_length": 16.0},
        "scheme": {"t_final": 1e5, "dt_factor": 0.01, "sample_times": [10.0 * SQRT2**k for k in range(7)]},
        "initial_data": {"kind": "gaussian", "width": 1.0},
        "outputs": {"directory": "korteweg_scatter"},
        "seed": 0,
    }


def _fluid(gamma: float, directory: str, ell: float, n: int) -> dict:
    return {
        "family": "fluid_regularized",
        "physical": {"d": 1, "gamma": gamma, "eps": 0.1, "nu": 0.1, "alpha": min(2.0, gamma - 1.0)},
        "grid": {"n": n},
        "scheme": {"t_max": 100.0, "dt_policy": "adaptive", "dt_max": 0.5, "snapshot_start": 1.0,
                   "snapshot_ratio": SQRT2, "fit_window": [10.0, 100.0]},
        "reg": {"ell": ell},
        "initial_data": {"kind": "gaussian", "width": 1.0, "background": 0.05},
        "outputs": {"directory": directory},
        "seed": 0,
    }


_SINGLE = {
    "long_range": _long_range,
    "korteweg_scatter": _korteweg,
    "viscous_decay": lambda: _fluid(2.0, "viscous_decay", 16.0, 128),
    # weak pressure and confinement: the rescaled profile spreads to |y| ~ 9
    "isothermal_edge": lambda: _fluid(1.2, "isothermal_edge", 32.0, 256),
}
PRESET_NAMES = ("long_range", "semiclassical_sweep", "korteweg_scatter", "viscous_decay", "isothermal_edge")


def preset_documents(name: str) -> list[dict]:
    if name == "semiclassical_sweep":
        return [_semiclassical(eps) for eps in SEMICLASSICAL_EPS]
    if name in _SINGLE:
        return [_SINGLE[name]()]
    raise InvalidInputError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


def preset_configs(name: str) -> list[RunConfig]:
    return [config_from_dict(doc) for doc in preset_documents(name)]


def preset(name: str) -> RunConfig | tuple[RunConfig, ...]:
    """Configuration of a named scenario; the sweep returns one config per ``eps``."""
    configs = preset_configs(name)
    return configs[0] if len(configs) == 1 else tuple(configs)
