"""Command line entry point ``dispersive-lab``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from jsonschema import ValidationError

from .config import RunConfig, config_from_dict, parse_config
from .errors import ConfigError, InvalidInputError
from .presets import PRESET_NAMES, preset_configs, preset_documents
from .runner import EXIT_CONFIG, EXIT_CONFORMANCE, EXIT_OK, format_report, load_summary, run


def _load(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}", "$") from exc
    return parse_config(text)


def _execute(configs: list[RunConfig], root: str | None, quiet: bool = False) -> int:
    worst = EXIT_OK
    results = []
    for cfg in configs:
        res = run(cfg, root)
        results.append(res)
        if not quiet:
            print(format_report(res.summary))
            print(f"summary: {res.summary_path}")
        worst = max(worst, res.exit_code)
    sups = [r.summary["metrics"].get("semiclassical_sup") for r in results]
    if len(results) > 1 and all(s is not None for s in sups):
        ratio = max(sups) / min(sups)
        print(f"sweep: sup(moment2 + L^(2 sigma + 2) norm) varies by x{ratio:.4f} across eps")
    return worst


def _tau_config(args) -> RunConfig:
    return config_from_dict({
        "family": "tau_only",
        "physical": {"alpha": args.alpha},
        "scheme": {"t_max": args.t_max, "tol": args.tol},
        "outputs": {"directory": args.out},
    })


def _nls_config(args) -> RunConfig:
    if args.config:
        cfg = _load(args.config)
        if cfg.family not in ("nls_original", "nls_rescaled", "korteweg_scatter"):
            raise ConfigError(f"family {cfg.family} is not an NLS family", "family")
        return cfg
    phys = {"d": 1, "sigma": args.sigma, "lam": args.lam, "eps": args.eps}
    if args.frame == "rescaled" and args.alpha is not None:
        phys["alpha"] = args.alpha
    return config_from_dict({
        "family": f"nls_{args.frame}",
        "physical": phys,
        "grid": {"n": args.n, "half_length": args.half_length},
        "scheme": {"dt": args.dt, "t_max": args.t_max},
        "initial_data": {"kind": "gaussian", "width": args.width, "phase_b": args.phase_b},
        "outputs": {"directory": args.out, "snapshots": args.snapshots},
    })


def _fluid_config(args) -> RunConfig:
    if args.config:
        cfg = _load(args.config)
        if cfg.family != "fluid_regularized":
            raise ConfigError(f"family {cfg.family} is not the fluid family", "family")
        return cfg
    phys = {"d": 1, "gamma": args.gamma, "nu": args.nu, "eps": args.eps}
    if args.alpha is not None:
        phys["alpha"] = args.alpha
    return config_from_dict({
        "family": "fluid_regularized",
        "physical": phys,
        "grid": {"n": args.n},
        "scheme": {"t_max": args.t_max, "snapshot_start": 1.0},
        "reg": {"ell": args.ell},
        "initial_data": {"kind": "gaussian", "width": args.width, "background": args.background},
        "outputs": {"directory": args.out, "snapshots": args.snapshots},
    })


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dispersive-lab",
                                     description="Large-time dispersive scaling experiments for NLS and quantum fluids.")
    parser.add_argument("--output-root", help="root directory for run outputs (default: $DISPERSIVE_LAB_OUTPUT or ./runs)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tau", help="solve the scaling ODE")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default="tau")

    p = sub.add_parser("nls", help="run an NLS experiment (flags or --config)")
    p.add_argument("--config")
    p.add_argument("--frame", choices=["original", "rescaled"], default="rescaled")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--half-length", type=float, default=24.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--phase-b", type=float, default=0.0)
    p.add_argument("--snapshots", action="store_true")
    p.add_argument("--out", default="nls")

    p = sub.add_parser("fluid", help="run the regularized fluid (flags or --config)")
    p.add_argument("--config")
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--ell", type=float, default=16.0)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--background", type=float, default=0.05)
    p.add_argument("--snapshots", action="store_true")
    p.add_argument("--out", default="fluid")

    p = sub.add_parser("run", help="run a JSON configuration file")
    p.add_argument("config")

    p = sub.add_parser("preset", help="list, show or run named scenarios")
    psub = p.add_subparsers(dest="preset_command", required=True)
    psub.add_parser("list")
    q = psub.add_parser("show")
    q.add_argument("name")
    q = psub.add_parser("run")
    q.add_argument("name")

    p = sub.add_parser("report", help="print the verdict table of a summary JSON")
    p.add_argument("summary")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    root = args.output_root
    try:
        if args.command == "tau":
            return _execute([_tau_config(args)], root)
        if args.command == "nls":
            return _execute([_nls_config(args)], root)
        if args.command == "fluid":
            return _execute([_fluid_config(args)], root)
        if args.command == "run":
            return _execute([_load(args.config)], root)
        if args.command == "preset":
            if args.preset_command == "list":
                for name in PRESET_NAMES:
                    docs = preset_documents(name)
                    print(f"{name:22s} {docs[0]['family']} ({len(docs)} run{'s' if len(docs) > 1 else ''})")
                return EXIT_OK
            if args.preset_command == "show":
                for cfg in preset_configs(args.name):
                    print(cfg.dumps())
                return EXIT_OK
            return _execute(preset_configs(args.name), root)
        if args.command == "report":
            summary = load_summary(args.summary)
            print(format_report(summary))
            failed = any(not c["passed"] for c in summary["checks"]) or summary["exit_code"] != EXIT_OK
            return EXIT_CONFORMANCE if failed else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        print(f"invalid summary: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
