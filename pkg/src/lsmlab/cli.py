"""Command line experiment runner.

Subcommands: ``forward``, ``check``, ``sweep``, ``density`` and ``run``.  All
of them accept ``--config <path>`` plus flags that override single config
fields.  Outputs are written to ``output_dir``:

* ``matrix.txt``      far-field matrix actually used (after degradation)
* ``field.csv``       ``x,y,log_gnck,log_gnk``, one row per sampling point
* ``minima.csv``      ``variant,rank,x,y,value``
* ``density_<i>.csv`` ``epsilon,residual,norm`` per density point
* ``metadata.json``   resolved parameters, checks and summaries
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, ExperimentConfig
from .farfield import (
    add_noise,
    check_reciprocity,
    restrict_aperture,
    scattering_matrix_unitarity,
    svd,
)
from .forward import assemble_far_field_matrix
from .geometry import build_direction_grid
from .matrixio import atomic_write_text, fmt, load_matrix, save_matrix
from .sampling import density_experiment, locate_minima, minima_displacement, sweep

log = logging.getLogger("lsmlab")

STAGES = {
    "forward": ("matrix",),
    "check": ("matrix", "check"),
    "sweep": ("matrix", "check", "sweep"),
    "density": ("matrix", "density"),
    "run": ("matrix", "check", "sweep", "density"),
}


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage


def _clean(obj):
    """JSON-safe copy with NaN/inf replaced by None."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _variants(cfg):
    return ("ck", "kirsch") if cfg.variant == "both" else (cfg.variant,)


def _minima_summary(report, limit=10):
    return {
        "count": len(report.minima),
        "contrast": report.contrast,
        "lowest": [{"x": p[0], "y": p[1], "value": v} for p, v in report.minima[:limit]],
    }


def _field_csv(field):
    pts = field.grid.points()
    ck, kk = field.values_ck.ravel(), field.values_k.ravel()
    rows = ["x,y,log_gnck,log_gnk"]
    rows += [f"{fmt(p[0])},{fmt(p[1])},{fmt(a)},{fmt(b)}" for p, a, b in zip(pts, ck, kk)]
    return "\n".join(rows) + "\n"


def _minima_csv(reports):
    rows = ["variant,rank,x,y,value"]
    for variant, rep in reports.items():
        for rank, (p, v) in enumerate(rep.minima):
            rows.append(f"{variant},{rank},{fmt(p[0])},{fmt(p[1])},{fmt(v)}")
    return "\n".join(rows) + "\n"


def _density_csv(result):
    rows = ["epsilon,residual,norm"]
    rows += [f"{fmt(r.eps)},{fmt(r.residual)},{fmt(r.norm)}" for r in result.records]
    return "\n".join(rows) + "\n"


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def obtain_matrix(cfg: ExperimentConfig):
    """Return the clean matrix and the degraded matrix used downstream."""
    if cfg.matrix:
        clean = _stage("load", load_matrix, cfg.matrix)
        log.info("loaded %dx%d matrix from %s", clean.n, clean.n, cfg.matrix)
    else:
        grid = build_direction_grid(cfg.N)
        clean = _stage("forward", assemble_far_field_matrix, cfg.scatterer_obj(), cfg.k, grid, cfg.M)
        log.info("assembled %dx%d far-field matrix (M=%d)", clean.n, clean.n, cfg.M)
    used = clean
    noise = cfg.noise_spec()
    if noise is not None:
        used = _stage("noise", add_noise, used, noise)
    aperture = cfg.aperture_spec()
    if aperture is not None:
        used = _stage("aperture", restrict_aperture, used, aperture)
    return clean, used


def _checks(F):
    out = {}
    if F.grid.is_full and F.grid.n_full % 2 == 0:
        out["reciprocity"] = check_reciprocity(F)
    else:
        out["reciprocity"] = None
    if F.grid.is_full and F.provenance != "aperture-restricted":
        out["unitarity"] = scattering_matrix_unitarity(F)
    else:
        out["unitarity"] = None
    return out


def execute(cfg: ExperimentConfig, command: str = "run"):
    """Run the stages of ``command`` and write all artifacts; returns the metadata."""
    stages = STAGES[command]
    out = Path(cfg.output_dir)
    meta = {
        "tool": "lsmlab",
        "version": __version__,
        "command": command,
        "config": cfg.to_dict(),
        "field_value": "0.5*log10(||g||^2)",
        "log_base": 10,
        "files": [],
    }

    clean, F = obtain_matrix(cfg)
    save_matrix(F, out / "matrix.txt")
    meta["files"].append("matrix.txt")
    meta["matrix"] = {"size": F.n, "k": F.k, "provenance": F.provenance, "n_full": F.grid.n_full}

    if "check" in stages:
        meta["checks"] = {"clean": _stage("check", _checks, clean)}
        if F is not clean:
            meta["checks"]["used"] = _stage("check", _checks, F)

    if "sweep" in stages or "density" in stages:
        dec = _stage("svd", svd, F)
        meta["singular_values"] = {
            "max": float(dec.s[0]),
            "min": float(dec.s[-1]),
            "ratio": float(dec.s[-1] / dec.s[0]),
        }

    if "sweep" in stages:
        grid = cfg.sampling_grid()
        field = _stage("sweep", sweep, dec, grid, F.k, F.grid, cutoff=cfg.cutoff)
        reports = {v: locate_minima(field, v) for v in _variants(cfg)}
        atomic_write_text(out / "field.csv", _field_csv(field))
        atomic_write_text(out / "minima.csv", _minima_csv(reports))
        meta["files"] += ["field.csv", "minima.csv"]
        meta["sweep"] = {
            "points": len(grid),
            "shape": list(grid.shape),
            "clamped_terms": field.clamped,
            "minima": {v: _minima_summary(r) for v, r in reports.items()},
        }
        if F is not clean:
            ref = sweep(svd(clean), grid, clean.k, clean.grid, cutoff=cfg.cutoff)
            deg = {}
            for v, rep in reports.items():
                ref_rep = locate_minima(ref, v)
                deg[v] = {
                    "minima_displacement": minima_displacement(ref_rep, rep),
                    "contrast_clean": ref_rep.contrast,
                    "contrast_degraded": rep.contrast,
                    "contrast_loss": ref_rep.contrast - rep.contrast,
                }
                log.info("%s degradation: %s", v, deg[v])
            meta["degradation"] = deg

    if "density" in stages:
        meta["density"] = []
        for i, z in enumerate(cfg.density_points):
            res = _stage("density", density_experiment, dec, z, F.k, F.grid, cfg.eps_list)
            name = f"density_{i}.csv"
            atomic_write_text(out / name, _density_csv(res))
            meta["files"].append(name)
            last, first = res.records[-1], res.records[0]
            meta["density"].append(
                {
                    "z": list(res.z),
                    "rhs_norm": res.rhs_norm,
                    "file": name,
                    "final_relative_residual": last.residual / res.rhs_norm,
                    "norm_growth": last.norm / first.norm,
                }
            )

    atomic_write_text(
        out / "metadata.json", json.dumps(_clean(meta), indent=2, sort_keys=True) + "\n"
    )
    return meta


def _floats(text, count=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: expected comma-separated numbers") from None
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"{name}: expected {count} numbers, got {len(vals)}")
    return vals


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON experiment document")
    common.add_argument("--scatterer", help="inline YAML list of {kind, center, parameters}")
    common.add_argument("--k", type=float)
    common.add_argument("--N", type=int)
    common.add_argument("--M", type=int)
    common.add_argument("--grid", type=lambda s: _floats(s, 5, "grid"),
                        help="x_min,x_max,y_min,y_max,h")
    common.add_argument("--noise-level", type=float)
    common.add_argument("--noise-seed", type=int)
    common.add_argument("--aperture", type=lambda s: _floats(s, 2, "aperture"),
                        help="theta_lo,theta_hi in radians")
    common.add_argument("--eps-list", type=lambda s: _floats(s, None, "eps-list"))
    common.add_argument("--density-point", action="append",
                        type=lambda s: _floats(s, 2, "density-point"), help="x,y (repeatable)")
    common.add_argument("--output-dir")
    common.add_argument("--variant", choices=("ck", "kirsch", "both"))
    common.add_argument("--cutoff", type=float)
    common.add_argument("--matrix", help="load this far-field matrix instead of solving")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lsmlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lsmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "forward": "assemble (and degrade) the far-field matrix and save it",
        "check": "reciprocity and unitarity report",
        "sweep": "indicator field and minima",
        "density": "Tikhonov sweep at the density points",
        "run": "full pipeline",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError("--config", str(exc)) from None
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a mapping")
    if args.scatterer is not None:
        data["scatterer"] = yaml.safe_load(args.scatterer)
    for key in ("k", "N", "M", "variant", "cutoff", "matrix"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.output_dir is not None:
        data["output_dir"] = args.output_dir
    if args.grid is not None:
        data["grid"] = dict(zip(("x_min", "x_max", "y_min", "y_max", "h"), args.grid))
    if args.noise_level is not None or args.noise_seed is not None:
        noise = dict(data.get("noise") or {})
        if args.noise_level is not None:
            noise["level"] = args.noise_level
        if args.noise_seed is not None:
            noise["seed"] = args.noise_seed
        data["noise"] = noise
    if args.aperture is not None:
        data["aperture"] = {"theta_lo": args.aperture[0], "theta_hi": args.aperture[1]}
    if args.eps_list is not None:
        data["eps_list"] = args.eps_list
    if args.density_point:
        data["density_points"] = args.density_point
    return ExperimentConfig.from_mapping(data)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "density" and not cfg.density_points:
        print("config error: density_points: at least one point is required", file=sys.stderr)
        return 2
    try:
        meta = execute(cfg, args.command)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = {"output_dir": cfg.output_dir, "files": meta["files"]}
    for key in ("checks", "sweep", "density", "degradation"):
        if key in meta:
            summary[key] = meta[key]
    print(json.dumps(_clean(summary), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
