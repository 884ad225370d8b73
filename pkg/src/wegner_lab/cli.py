"""Command-line front end.

Subcommands:
  run       execute one experiment from a run config (and usually a model file)
  make-set  build and save a raster set (stripes or a fat Cantor stage)
  certify   certify thickness of a raster, or a model's structural claims
  report    re-render a stored report as a human summary

Exit codes: 0 when every verdict is PASS or INFORMATIONAL, 1 when any
verdict is FAIL, 2 on execution errors (bad config, failed preconditions,
missing files).  Run outputs are written as report.json and records.csv
(byte-stable, no timing), summary.txt (human text, timing allowed), and
config.resolved.ini (the fully resolved configuration actually used).
The output directory may also be set through WEGNER_LAB_OUT; no other
behavior is environment-dependent.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import experiments
from .random_model import AlloyModel, ModelConfigError, ModelError, load_model_config, verify_NoPi, verify_Pi
from .reports import ExperimentReport
from .thick_sets import (
    RasterError,
    WindowSpec,
    build_fat_cantor,
    certify_thickness,
    load_raster,
    save_raster,
    smith_volterra_spec,
    stripes_raster,
)


class ConfigError(ValueError):
    pass


# parameter schema per experiment: key -> (parser kind, default or REQUIRED)
_REQUIRED = object()

_PARAM_SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "wegner": {
        "l_list": ("floats", (8.0, 16.0, 32.0)),
        "eps_list": ("floats", (0.4, 0.2, 0.1)),
        "e_ref": ("float", 30.0),
    },
    "ids": {
        "l": ("float", 12.0),
        "e_list": ("floats", (2.0, 5.0, 10.0, 15.0, 20.0)),
        "eps": ("float", 0.25),
        "c_w": ("float", None),
    },
    "stubborn": {
        "e": ("float", 4.0),
        "l_list": ("floats", (8.0, 16.0)),
        "min_boxes": ("int", 3),
    },
    "stubborn-exp": {
        "l": ("float", 6.0),
        "eigen_index": ("int", 3),
    },
    "uncertainty": {
        "a": ("floats", (1.0,)),
        "e_list": ("floats", (25.0, 100.0, 225.0, 400.0)),
        "l_list": ("floats", (2.0, 3.0, 4.0)),
        "bc": ("str", "dirichlet"),
        "lambda_floor": ("float", 1e-6),
        "set_kind": ("str", "stripes"),
        "set_width": ("float", 1.0 / 3.0),
        "set_period": ("float", 1.0),
        "set_resolution": ("int", 48),
        "set_depth": ("int", 4),
        "set_path": ("str", None),
    },
    "ise": {
        "l_list": ("floats", (8.0, 16.0)),
    },
    "spectral-minimum": {
        "eps_list": ("floats", (0.5, 0.25)),
        "l": ("float", 8.0),
    },
    "localisation-probe": {
        "e_lo": ("float", 0.0),
        "e_hi": ("float", 2.0),
        "l": ("float", 24.0),
    },
    "minorant": {
        "l": ("float", 4.0),
        "box_length": ("float", 8.0),
    },
}

_MODEL_FREE = {"uncertainty"}

_RUN_KEYS = {"experiment", "seed", "replicas", "workers", "mesh_density"}


@dataclass
class RunConfig:
    experiment: str
    seed: int = 0
    replicas: int | None = None
    workers: int = 1
    mesh_density: int | None = None
    params: dict[str, Any] = field(default_factory=dict)


def _parse_value(kind: str, raw: str, key: str, where: str) -> Any:
    try:
        if kind == "floats":
            return tuple(float(v.strip()) for v in raw.split(",") if v.strip())
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {key} = {raw!r} as {kind}") from exc


def parse_run_config(path: str | Path) -> RunConfig:
    """Strict run-file parser: every key must be known for its experiment."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section in parser.sections():
        if section not in ("run", "parameters"):
            raise ConfigError(f"{path}: unknown section [{section}]")
    if "run" not in parser:
        raise ConfigError(f"{path}: missing [run] section")
    run = parser["run"]
    for key in run:
        if key not in _RUN_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r} in [run]")
    experiment = run.get("experiment", "").strip()
    if experiment not in _PARAM_SCHEMA:
        known = ", ".join(sorted(_PARAM_SCHEMA))
        raise ConfigError(f"{path}: experiment must be one of {known}, got {experiment!r}")
    cfg = RunConfig(experiment=experiment)
    cfg.seed = run.getint("seed", 0)
    cfg.workers = run.getint("workers", 1)
    if "replicas" in run:
        cfg.replicas = run.getint("replicas")
    if "mesh_density" in run:
        cfg.mesh_density = run.getint("mesh_density")
    schema = _PARAM_SCHEMA[experiment]
    if "parameters" in parser:
        for key, raw in parser["parameters"].items():
            if key not in schema:
                raise ConfigError(
                    f"{path}: unknown key {key!r} in [parameters] for experiment {experiment}"
                )
            cfg.params[key] = _parse_value(schema[key][0], raw, key, str(path))
    for key, (_, default) in schema.items():
        if key not in cfg.params:
            if default is _REQUIRED:
                raise ConfigError(f"{path}: experiment {experiment} requires parameter {key!r}")
            cfg.params[key] = default
    return cfg


def resolved_ini(cfg: RunConfig) -> str:
    lines = ["[run]", f"experiment = {cfg.experiment}", f"seed = {cfg.seed}", f"workers = {cfg.workers}"]
    if cfg.replicas is not None:
        lines.append(f"replicas = {cfg.replicas}")
    if cfg.mesh_density is not None:
        lines.append(f"mesh_density = {cfg.mesh_density}")
    lines += ["", "[parameters]"]
    for key in sorted(cfg.params):
        val = cfg.params[key]
        if val is None:
            continue
        if isinstance(val, tuple):
            lines.append(f"{key} = {','.join(repr(v) for v in val)}")
        else:
            lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
    return "\n".join(lines) + "\n"


def _build_set(params: dict[str, Any], base: Path):
    kind = params["set_kind"]
    if kind == "stripes":
        return stripes_raster(params["set_width"], params["set_period"], params["set_resolution"])
    if kind == "cantor":
        return build_fat_cantor(smith_volterra_spec(params["set_depth"]), params["set_resolution"])
    if kind == "file":
        if not params.get("set_path"):
            raise ConfigError("set_kind = file needs set_path")
        return load_raster(base / params["set_path"])
    raise ConfigError(f"unknown set_kind {kind!r}")


def _dispatch(cfg: RunConfig, model: AlloyModel | None, config_dir: Path) -> ExperimentReport:
    p = cfg.params
    common: dict[str, Any] = {"seed": cfg.seed}
    if cfg.replicas is not None:
        common["replicas"] = cfg.replicas
    if cfg.mesh_density is not None:
        common["mesh_density"] = cfg.mesh_density
    if cfg.experiment == "uncertainty":
        S = _build_set(p, config_dir)
        return experiments.run_uncertainty(
            S,
            a=p["a"],
            E_list=p["e_list"],
            L_list=p["l_list"],
            bc=p["bc"],
            lambda_floor=p["lambda_floor"],
            seed=cfg.seed,
            **({"mesh_density": cfg.mesh_density} if cfg.mesh_density is not None else {}),
        )
    if model is None:
        raise ConfigError(f"experiment {cfg.experiment} needs a model file (--model)")
    common["workers"] = cfg.workers
    if cfg.experiment == "wegner":
        return experiments.run_wegner(model, L_list=p["l_list"], eps_list=p["eps_list"], e_ref=p["e_ref"], **common)
    if cfg.experiment == "ids":
        return experiments.estimate_ids(model, L=p["l"], E_list=p["e_list"], eps=p["eps"], c_w=p["c_w"], **common)
    if cfg.experiment == "stubborn":
        return experiments.run_stubborn(model, E=p["e"], L_list=p["l_list"], min_boxes=p["min_boxes"], **common)
    if cfg.experiment == "stubborn-exp":
        return experiments.run_stubborn_exponential(model, L=p["l"], eigen_index=p["eigen_index"], **common)
    if cfg.experiment == "ise":
        return experiments.run_ise(model, L_list=p["l_list"], **common)
    if cfg.experiment == "spectral-minimum":
        return experiments.run_spectral_minimum(model, eps_list=p["eps_list"], L=p["l"], **common)
    if cfg.experiment == "localisation-probe":
        return experiments.localisation_probe(model, E_lo=p["e_lo"], E_hi=p["e_hi"], L=p["l"], **common)
    if cfg.experiment == "minorant":
        common.pop("workers", None)
        return experiments.run_minorant_check(model, L=p["l"], box_length=p["box_length"], **common)
    raise ConfigError(f"no dispatch for {cfg.experiment}")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = parse_run_config(args.config)
    config_dir = Path(args.config).parent
    model = None
    if args.model is not None:
        model = load_model_config(args.model)
    elif cfg.experiment not in _MODEL_FREE:
        raise ConfigError(f"experiment {cfg.experiment} needs a model file (--model)")
    out_dir = Path(os.environ.get("WEGNER_LAB_OUT", args.out or "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    rep = _dispatch(cfg, model, config_dir)
    (out_dir / "report.json").write_text(rep.to_json(include_timing=False))
    (out_dir / "records.csv").write_text(rep.to_records_csv())
    (out_dir / "summary.txt").write_text(rep.human_summary())
    (out_dir / "config.resolved.ini").write_text(resolved_ini(cfg))
    sys.stdout.write(rep.human_summary())
    return 0 if rep.overall in ("PASS", "INFORMATIONAL") else 1


def _cmd_make_set(args: argparse.Namespace) -> int:
    if args.kind == "stripes":
        S = stripes_raster(args.width, args.period, args.resolution)
    elif args.kind == "cantor":
        S = build_fat_cantor(smith_volterra_spec(args.depth), args.resolution)
    else:
        raise ConfigError(f"unknown set kind {args.kind!r}")
    save_raster(S, args.out)
    sys.stdout.write(f"wrote {args.out}: measure {S.measure!r} of period {S.geometry.extent[0]!r}\n")
    return 0


def _cmd_certify(args: argparse.Namespace) -> int:
    if args.raster is not None:
        S = load_raster(args.raster)
        window = WindowSpec(tuple(float(v) for v in args.window.split(",")))
        cert = certify_thickness(S, window)
        sys.stdout.write(
            f"gamma_star = {cert.gamma_star!r}\nerror_bound = {cert.error_bound!r}\n"
            f"argmin_anchor = {cert.argmin!r}\n"
        )
        if args.gamma is not None:
            ok = cert.certifies(args.gamma)
            sys.stdout.write(f"claimed gamma {args.gamma!r}: {'CERTIFIED' if ok else 'REFUSED'}\n")
            return 0 if ok else 1
        return 0
    if args.model is not None:
        model = load_model_config(args.model)
        if model.claimed_set is not None:
            cert = verify_Pi(model)
            sys.stdout.write(
                f"covering lower bound: {'ok' if cert.lower_bound_ok else f'violated at {cert.first_violation}'}\n"
                f"gamma_star = {cert.gamma_star!r} (claimed {cert.gamma_claimed!r}, "
                f"error {cert.thickness_error!r})\nverdict: {'PASS' if cert.passed else 'FAIL'}\n"
            )
            return 0 if cert.passed else 1
        if model.claimed_bound is not None:
            kappas = [float(v) for v in args.kappa.split(",")] if args.kappa else [0.5]
            win = tuple(float(v) for v in args.window.split(","))
            cert2 = verify_NoPi(model, kappas, [win])
            sys.stdout.write(
                f"sup potential = {cert2.sup_u!r} (claimed bound {cert2.bound_claimed!r})\n"
            )
            for key, spot in sorted(cert2.witnesses.items()):
                anchor = tuple(float(v) for v in spot)
                sys.stdout.write(f"empty window at {anchor!r} for kappa={key[0]!r} a={key[1]!r}\n")
            sys.stdout.write(f"verdict: {'PASS' if cert2.passed else 'FAIL'}\n")
            return 0 if cert2.passed else 1
        raise ConfigError("model declares neither a thickness claim nor a sup-norm bound")
    raise ConfigError("certify needs --raster or --model")


def _cmd_report(args: argparse.Namespace) -> int:
    rep = ExperimentReport.from_json(Path(args.json).read_text())
    if args.csv:
        sys.stdout.write(rep.to_records_csv())
    else:
        sys.stdout.write(rep.human_summary())
    return 0 if rep.overall in ("PASS", "INFORMATIONAL") else 1


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="wegner-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one experiment from a run config")
    run_p.add_argument("--config", required=True, help="run configuration file (INI)")
    run_p.add_argument("--model", help="model description file (INI)")
    run_p.add_argument("--out", help="output directory (default: current; env WEGNER_LAB_OUT overrides)")
    run_p.set_defaults(fn=_cmd_run)

    mk = sub.add_parser("make-set", help="build and save a raster set")
    mk.add_argument("--kind", choices=("stripes", "cantor"), required=True)
    mk.add_argument("--width", type=float, default=1.0 / 3.0, help="stripe width (stripes)")
    mk.add_argument("--period", type=float, default=1.0, help="period (stripes)")
    mk.add_argument("--depth", type=int, default=4, help="construction depth (cantor)")
    mk.add_argument("--resolution", type=int, default=1024, help="cells per unit length")
    mk.add_argument("--out", required=True, help="output path (.rast binary, else text)")
    mk.set_defaults(fn=_cmd_make_set)

    ct = sub.add_parser("certify", help="certify thickness or structural claims")
    ct.add_argument("--raster", help="raster file to certify")
    ct.add_argument("--model", help="model file whose claims to verify")
    ct.add_argument("--window", default="1.0", help="window sides, comma separated")
    ct.add_argument("--gamma", type=float, help="claimed thickness to check (raster mode)")
    ct.add_argument("--kappa", help="level list for refutation, comma separated (model mode)")
    ct.set_defaults(fn=_cmd_certify)

    rp = sub.add_parser("report", help="re-render a stored report")
    rp.add_argument("--json", required=True, help="path to report.json")
    rp.add_argument("--csv", action="store_true", help="emit records CSV instead of the summary")
    rp.set_defaults(fn=_cmd_report)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ModelConfigError, ModelError, RasterError, experiments.PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
