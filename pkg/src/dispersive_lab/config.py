"""Run configurations: a single strict JSON document per run.

Each family accepts exactly the sections and fields it uses.  Validation is
schema based; the first violation is reported with its JSON path.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Any

from jsonschema import Draft202012Validator

from .errors import ConfigError, InvalidInputError
from .fluid1d import RegParams

FAMILIES = ("tau_only", "nls_original", "nls_rescaled", "fluid_regularized", "korteweg_scatter")
SQRT2 = math.sqrt(2.0)
LINK_TOL = 1e-12

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}


def _obj(props: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_gaussian = _obj({
    "kind": {"const": "gaussian"},
    "center": _num,
    "width": _pos,
    "phase_b": _num,
    "background": _nonneg,
    "perturbation": _nonneg,
}, ("kind",))
_wkb = _obj({
    "kind": {"const": "wkb"},
    "amplitude": _obj({"center": _num, "width": _pos}, ("width",)),
    "phase": _obj({"curvature": _num}, ("curvature",)),
    "perturbation": _nonneg,
}, ("kind", "amplitude", "phase"))
_custom = _obj({"kind": {"const": "custom_file"}, "path": {"type": "string", "minLength": 1}}, ("kind", "path"))

_outputs = _obj({
    "directory": {"type": "string", "minLength": 1},
    "ledger": {"type": "boolean"},
    "snapshots": {"type": "boolean"},
}, ("directory",))

_reg = _obj({
    name: ({"type": "integer", "minimum": 1} if name == "m" else _nonneg)
    for name in ("r0", "r1", "delta1", "delta2", "eta1", "eta2", "k", "m", "ell")
})

_snapshots = {
    "snapshot_start": _pos,
    "snapshot_ratio": {"type": "number", "exclusiveMinimum": 1},
    "sample_every": {"type": "integer", "minimum": 1},
    "fit_window": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
}


def _physical(props: tuple, required: tuple = ()) -> dict:
    table = {"d": {"type": "integer", "enum": [1, 2]}, "gamma": {"type": "number", "exclusiveMinimum": 1},
             "sigma": _pos, "lam": _nonneg, "eps": _pos, "nu": _nonneg, "alpha": _pos}
    return _obj({k: table[k] for k in props}, required)


def _family_schema(family: str) -> dict:
    top = {"family": {"enum": list(FAMILIES)}, "outputs": _outputs, "seed": {"type": "integer", "minimum": 0}}
    if family == "tau_only":
        top["physical"] = _physical(("alpha",), ("alpha",))
        top["scheme"] = _obj({"t_max": _pos, "tol": _pos}, ("t_max",))
        return _obj(top, ("family", "physical", "scheme", "outputs"))
    grid = _obj({"n": {"type": "integer", "minimum": 8}, "half_length": _pos}, ("n", "half_length"))
    init = {"oneOf": [_gaussian, _wkb, _custom]}
    if family in ("nls_original", "nls_rescaled"):
        keys = ("d", "gamma", "sigma", "lam", "eps") + (("alpha",) if family == "nls_rescaled" else ())
        top["physical"] = _physical(keys, ("eps",))
        top["grid"] = grid
        top["scheme"] = _obj({"dt": _pos, "t_max": _pos, **_snapshots}, ("dt", "t_max"))
        top["initial_data"] = init
        return _obj(top, ("family", "physical", "grid", "scheme", "initial_data", "outputs"))
    if family == "fluid_regularized":
        top["physical"] = _physical(("d", "gamma", "eps", "nu", "alpha"), ("gamma", "nu"))
        top["physical"]["properties"]["d"] = {"const": 1}
        top["grid"] = _obj({"n": {"type": "integer", "minimum": 8}}, ("n",))
        top["scheme"] = _obj({
            "t_max": _pos,
            "dt_policy": {"enum": ["adaptive", "fixed"]},
            "dt": _pos,
            "dt_max": _pos,
            **_snapshots,
        }, ("t_max",))
        top["reg"] = _reg
        top["initial_data"] = {"oneOf": [_gaussian, _custom]}
        return _obj(top, ("family", "physical", "grid", "scheme", "initial_data", "outputs"))
    # korteweg_scatter
    top["physical"] = _physical(("d", "gamma", "sigma", "lam", "eps", "alpha"), ("eps",))
    top["physical"]["properties"]["alpha"] = {"const": 2}
    top["grid"] = grid
    top["scheme"] = _obj({
        "t_final": {"type": "number", "minimum": 2},
        "dt_factor": _pos,
        "sample_times": {"type": "array", "items": _pos, "minItems": 2},
    }, ("t_final", "sample_times"))
    top["initial_data"] = {"oneOf": [_gaussian]}
    return _obj(top, ("family", "physical", "grid", "scheme", "initial_data", "outputs"))


def _path(error) -> str:
    parts = [str(p) for p in error.absolute_path]
    if error.validator == "required":
        missing = error.message.split("'")[1]
        parts.append(missing)
    elif error.validator == "additionalProperties":
        extra = error.message.split("'")[1] if "'" in error.message else ""
        if extra:
            parts.append(extra)
    return ".".join(parts) or "$"


def _first_error(validator, doc):
    errors = list(validator.iter_errors(doc))
    if not errors:
        return None
    # required-field errors first, then in document order
    errors.sort(key=lambda e: (e.validator != "required", len(e.absolute_path)))
    return errors[0]


def validate_document(doc: Any) -> None:
    """Raise ``ConfigError`` naming the first offending field."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object", "$")
    if "family" not in doc:
        raise ConfigError("missing required field", "family")
    family = doc["family"]
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}", "family")
    err = _first_error(Draft202012Validator(_family_schema(family)), doc)
    if err is not None:
        msg = "missing required field" if err.validator == "required" else err.message
        if err.validator == "additionalProperties":
            msg = f"field not allowed for family {family}"
        raise ConfigError(msg, _path(err))


@dataclass(frozen=True)
class Physical:
    d: int = 1
    gamma: float | None = None
    sigma: float | None = None
    lam: float | None = None
    eps: float | None = None
    nu: float | None = None
    alpha: float | None = None


@dataclass(frozen=True)
class GridSpec:
    n: int
    half_length: float | None = None


@dataclass(frozen=True)
class Scheme:
    t_max: float | None = None
    tol: float | None = None
    dt: float | None = None
    dt_policy: str | None = None
    dt_max: float | None = None
    snapshot_start: float | None = None
    snapshot_ratio: float | None = None
    sample_every: int | None = None
    fit_window: tuple[float, float] | None = None
    t_final: float | None = None
    dt_factor: float | None = None
    sample_times: tuple[float, ...] | None = None


@dataclass(frozen=True)
class InitialData:
    kind: str
    center: float | None = None
    width: float | None = None
    phase_b: float | None = None
    background: float | None = None
    perturbation: float | None = None
    amplitude: dict | None = None
    phase: dict | None = None
    path: str | None = None


@dataclass(frozen=True)
class Outputs:
    directory: str
    ledger: bool = True
    snapshots: bool = False


@dataclass(frozen=True)
class RunConfig:
    family: str
    physical: Physical
    scheme: Scheme
    outputs: Outputs
    seed: int = 0
    grid: GridSpec | None = None
    reg: RegParams | None = None
    initial_data: InitialData | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"family": self.family}
        for name in ("physical", "grid", "scheme", "initial_data", "outputs"):
            section = getattr(self, name)
            if section is not None:
                out[name] = _drop_none(asdict(section))
        if self.reg is not None:
            out["reg"] = {k: v for k, v in self.reg.to_dict().items() if k not in ("gamma", "nu", "eps", "alpha")}
        out["seed"] = self.seed
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _drop_none(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if v is None:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _link_gamma_sigma(phys: dict, family: str) -> dict:
    """Fill ``sigma`` from ``gamma`` (and ``lam``) through the Madelung correspondence.

    The nonlinearity ``lam |psi|^(2 sigma) psi`` has pressure
    ``lam sigma / (sigma + 1) rho^(sigma + 1)``; unit pressure ``rho^gamma``
    therefore means ``sigma = gamma - 1`` and ``lam = gamma / (gamma - 1)``.
    """
    gamma, sigma, lam = phys.get("gamma"), phys.get("sigma"), phys.get("lam")
    if gamma is not None:
        linked = gamma - 1.0
        if sigma is not None and abs(sigma - linked) > LINK_TOL * max(1.0, linked):
            raise ConfigError(f"sigma={sigma} inconsistent with gamma={gamma} (expected {linked})", "physical.sigma")
        phys["sigma"] = linked
        unit = gamma / (gamma - 1.0)
        if lam is not None and abs(lam - unit) > LINK_TOL * unit:
            raise ConfigError(f"lam={lam} inconsistent with gamma={gamma} (expected {unit})", "physical.lam")
        phys["lam"] = unit
    elif sigma is None:
        raise ConfigError("missing required field (sigma or gamma)", "physical.sigma")
    elif lam is None:
        raise ConfigError("missing required field", "physical.lam")
    return phys


def config_from_dict(doc: Any) -> RunConfig:
    validate_document(doc)
    family = doc["family"]
    phys = dict(doc["physical"])
    phys.setdefault("d", 1)
    if family in ("nls_original", "nls_rescaled", "korteweg_scatter"):
        phys = _link_gamma_sigma(phys, family)
    if family == "nls_rescaled" and "alpha" not in phys:
        phys["alpha"] = min(phys["d"] * phys["sigma"], 2.0)
    if family == "korteweg_scatter":
        phys.setdefault("alpha", 2.0)
        if not phys["d"] * phys["sigma"] > 1.0:
            raise ConfigError("scattering needs d * sigma > 1", "physical.sigma")
    reg = None
    if family == "fluid_regularized":
        phys.setdefault("eps", 0.0)
        phys.setdefault("alpha", min(2.0, phys["gamma"] - 1.0))
        try:
            reg = RegParams(gamma=phys["gamma"], nu=phys["nu"], eps=phys["eps"], alpha=phys["alpha"],
                            **doc.get("reg", {}))
        except InvalidInputError as exc:
            raise ConfigError(str(exc), "reg") from exc
    physical = Physical(**{k: (float(v) if k != "d" else int(v)) for k, v in phys.items()})

    sch = dict(doc["scheme"])
    if family == "tau_only":
        sch.setdefault("tol", 1e-12)
    elif family in ("nls_original", "nls_rescaled", "fluid_regularized"):
        sch.setdefault("snapshot_ratio", SQRT2)
        sch.setdefault("sample_every", 1)
        if family == "fluid_regularized":
            sch.setdefault("dt_policy", "adaptive")
            if sch["dt_policy"] == "fixed" and "dt" not in sch:
                raise ConfigError("missing required field", "scheme.dt")
            if sch["dt_policy"] == "adaptive":
                sch.setdefault("dt_max", 0.5)
    else:
        sch.setdefault("dt_factor", 0.01)
        times = sch["sample_times"]
        if any(b <= a for a, b in zip(times, times[1:])) or times[-1] >= sch["t_final"]:
            raise ConfigError("sample times must increase and stay below t_final", "scheme.sample_times")
    if "fit_window" in sch:
        lo, hi = sch["fit_window"]
        if not lo < hi:
            raise ConfigError("fit window must satisfy lo < hi", "scheme.fit_window")
        sch["fit_window"] = (float(lo), float(hi))
    if "sample_times" in sch:
        sch["sample_times"] = tuple(float(t) for t in sch["sample_times"])
    scheme = Scheme(**sch)

    grid = None
    if "grid" in doc:
        grid = GridSpec(**doc["grid"])
        if grid.n & (grid.n - 1):
            raise ConfigError("n must be a power of two", "grid.n")
    init = None
    if "initial_data" in doc:
        idata = dict(doc["initial_data"])
        if idata["kind"] == "gaussian":
            idata.setdefault("center", 0.0)
            idata.setdefault("width", 1.0)
            idata.setdefault("phase_b", 0.0)
            if family == "fluid_regularized":
                idata.setdefault("background", 0.0)
            elif "background" in idata:
                raise ConfigError(f"field not allowed for family {family}", "initial_data.background")
        if idata["kind"] != "custom_file":
            idata.setdefault("perturbation", 0.0)
        init = InitialData(**idata)
    out = doc["outputs"]
    outputs = Outputs(out["directory"], out.get("ledger", True), out.get("snapshots", False))
    return RunConfig(family, physical, scheme, outputs, int(doc.get("seed", 0)), grid, reg, init)


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} at line {exc.lineno}", "$") from exc
    return config_from_dict(doc)
