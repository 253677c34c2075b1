"""Command-line entry point: bound | verify | simulate | calibrate.

Configuration comes from a JSON file (see README for the schema); flags
override config values.  Every run writes a manifest (config hash,
seeds, version) next to its outputs.  Exit codes: 0 success, 1
verification failure, 2 configuration error, 3 runtime/estimation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import remark_parameters, optimize_parameters, theorem_rhs
from .empirical import bound_components_for, calibrate_C, distributional_gap
from .ensembles import EnsembleSpec, equicorrelated
from .indicator import epsilon
from .smooth_minmax import SmoothingParams
from .verification import run_all

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


def _parse_cov(entry, d):
    if entry is None or entry == "identity":
        return np.eye(d)
    if isinstance(entry, dict) and entry.get("type") == "equicorrelated":
        return equicorrelated(d, float(entry["rho"]))
    cov = np.asarray(entry, dtype=float)
    if cov.shape != (d, d):
        raise ConfigError(f"covariance must be {d}x{d}, got {cov.shape}")
    return cov


def parse_ensemble(entry: dict) -> EnsembleSpec:
    for key in ("n", "m", "family"):
        if key not in entry:
            raise ConfigError(f"ensemble entry missing required field '{key}'")
    n, m = int(entry["n"]), int(entry["m"])
    family = entry["family"]
    try:
        if family == "gaussian":
            return EnsembleSpec(n=n, m=m, family="gaussian",
                                cov=_parse_cov(entry.get("cov"), n * m))
        if family == "iid":
            return EnsembleSpec(n=n, m=m, family="iid",
                                distribution=entry.get("distribution"),
                                t_df=float(entry.get("t_df", 5.0)))
        if family == "linear_mix":
            return EnsembleSpec(n=n, m=m, family="linear_mix",
                                distribution=entry.get("distribution"),
                                loadings=np.asarray(entry["loadings"], dtype=float),
                                t_df=float(entry.get("t_df", 5.0)))
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown ensemble family {family!r}")


def resolve_params(config: dict, n: int, m: int):
    """(SmoothingParams, tau) from the config's params block."""
    params = config.get("params")
    if params is None:
        raise ConfigError("config missing required field 'params'")
    if isinstance(params, dict) and params.get("mode") == "remark1":
        tau = float(params.get("tau", 1.0))
        sp = remark_parameters(n, m, tau)
    elif isinstance(params, dict) and params.get("mode") == "optimize":
        return None, float(params["threshold_cap"])  # resolved downstream
    elif isinstance(params, dict):
        for key in ("beta", "delta", "tau"):
            if key not in params:
                raise ConfigError(f"params missing required field '{key}'")
        sp = SmoothingParams(beta=float(params["beta"]), delta=float(params["delta"]))
        tau = float(params["tau"])
    else:
        raise ConfigError(f"unrecognized params block: {params!r}")
    if not tau > 1.0 / sp.phi:
        raise ConfigError(
            f"tau = {tau} violates tau > 1/(beta*(1+delta)) = {1.0 / sp.phi}")
    return sp, tau


def load_config(path, args) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")
    budgets = config.setdefault("budgets", {})
    if args.seed is not None:
        budgets["seed"] = args.seed
    if args.samples is not None:
        budgets["samples"] = args.samples
    if args.C is not None:
        config["C"] = args.C
    budgets.setdefault("seed", 0)
    budgets.setdefault("samples", 100_000)
    config.setdefault("C", 1.0)
    if not float(config["C"]) > 0:
        raise ConfigError("C must be positive")
    return config


def write_manifest(out: Path, config: dict, command: str):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": config["budgets"]["seed"],
        "samples": config["budgets"]["samples"],
        "version": __version__,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _ensembles(config):
    entries = config.get("ensembles")
    if not entries:
        raise ConfigError("config missing required field 'ensembles'")
    return [parse_ensemble(e) for e in entries]


def _pairs(specs):
    if len(specs) < 2:
        raise ConfigError("need at least two ensembles to form a pair")
    return [(specs[0], s) for s in specs[1:]]


def cmd_bound(config, out: Path) -> int:
    specs = _ensembles(config)
    specA, specB = _pairs(specs)[0]
    if specA.shape != specB.shape:
        raise ConfigError("paired ensembles must share a shape")
    n, m = specA.shape
    seed = int(config["budgets"]["seed"])
    N = int(config["budgets"]["samples"])
    C = float(config["C"])
    gaussian = specA.is_gaussian and specB.is_gaussian
    sp, tau = resolve_params(config, n, m)
    comps = bound_components_for(specA, specB, N, seed, gaussian_only=gaussian)
    if sp is None:  # optimize mode: tau holds the threshold cap
        opt = optimize_parameters(comps, n, m, C, tau, gaussian=gaussian)
        if not opt.get("feasible"):
            raise ConfigError(f"threshold cap infeasible: {opt}")
        sp = SmoothingParams(beta=opt["beta"], delta=opt["delta"])
        tau = opt["tau"]
    report = theorem_rhs(sp, tau, C, comps, n, m, gaussian=gaussian)
    (out / "bound.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_verify(config, out: Path, quick=False) -> int:
    summary = run_all(quick=quick)
    (out / "verify.json").write_text(json.dumps(summary, indent=2) + "\n")
    for rec in summary["checks"]:
        status = "PASS" if rec["passed"] else "FAIL"
        print(f"{status}  {rec['name']}: value={rec['value']:.3e} "
              f"bound={rec['bound']:.3e} ({rec['seconds']}s)")
    return EXIT_OK if summary["pass"] else EXIT_VERIFY_FAIL


def cmd_simulate(config, out: Path, figures=True) -> int:
    specs = _ensembles(config)
    seed = int(config["budgets"]["seed"])
    N = int(config["budgets"]["samples"])
    C = float(config["C"])
    for k, (specA, specB) in enumerate(_pairs(specs)):
        if specA.shape != specB.shape:
            raise ConfigError("paired ensembles must share a shape")
        sp, tau = resolve_params(config, *specA.shape)
        if sp is None:
            raise ConfigError("simulate does not support params mode 'optimize'")
        rep = distributional_gap(specA, specB, sp, tau, C, N, seed + k)
        stem = out / f"gap_{k}"
        stem.with_suffix(".json").write_text(
            json.dumps(rep.to_dict(), indent=2) + "\n")
        stem.with_suffix(".csv").write_text("\n".join(rep.csv_lines()) + "\n")
        if figures and config.get("output", {}).get("figures", True):
            from .figures import render_gap_figure
            render_gap_figure(rep, stem.with_suffix(".png"))
        print(f"pair {k}: {rep.spec_a} vs {rep.spec_b} max_gap={rep.max_gap:.4g} "
              f"rhs={rep.rhs:.4g} {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK


def cmd_calibrate(config, out: Path, figures=True) -> int:
    specs = _ensembles(config)
    pairs = _pairs(specs)
    seed = int(config["budgets"]["seed"])
    N = int(config["budgets"]["samples"])
    scenarios = []
    for specA, specB in pairs:
        sp, tau = resolve_params(config, *specA.shape)
        if sp is None:
            raise ConfigError("calibrate does not support params mode 'optimize'")
        scenarios.append((specA, specB, sp, tau))
    result = calibrate_C(scenarios, N=N, seed=seed)
    (out / "calibration.json").write_text(json.dumps(result, indent=2) + "\n")
    if figures and config.get("output", {}).get("figures", True) \
            and result.get("feasible"):
        from .figures import render_calibration_figure
        render_calibration_figure(result, out / "calibration.png")
    print(f"C* = {result['C_star']}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="minmaxgap",
        description="Quantitative min-max coupling bounds for random matrix "
                    "pairs, with numerical verification of every supporting "
                    "estimate.")
    ap.add_argument("command", choices=["bound", "verify", "simulate", "calibrate"])
    ap.add_argument("--config", type=Path, help="JSON config file")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--seed", type=int, help="override budgets.seed")
    ap.add_argument("--samples", type=int, help="override budgets.samples")
    ap.add_argument("--C", type=float, help="override the universal constant")
    ap.add_argument("--workers", type=int, default=None,
                    help="worker hint (wall time only; results are "
                         "independent of it)")
    ap.add_argument("--quick", action="store_true",
                    help="reduced budgets for the verify suite")
    ap.add_argument("--no-figures", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify":
            config = {"budgets": {"seed": args.seed or 0,
                                  "samples": args.samples or 100_000}}
            if args.config:
                config = load_config(args.config, args)
            write_manifest(out, config, args.command)
            return cmd_verify(config, out, quick=args.quick)
        if not args.config:
            raise ConfigError(f"command '{args.command}' requires --config")
        config = load_config(args.config, args)
        write_manifest(out, config, args.command)
        if args.command == "bound":
            return cmd_bound(config, out)
        if args.command == "simulate":
            return cmd_simulate(config, out, figures=not args.no_figures)
        return cmd_calibrate(config, out, figures=not args.no_figures)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # estimation / runtime failures
        print(json.dumps({"error": "runtime", "message": str(exc)}), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
