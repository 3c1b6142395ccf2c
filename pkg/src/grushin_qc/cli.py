"""Command-line front end: ``grushin-qc distance|verify|export``.

JSON goes to stdout; files go under ``--out``.  Exit codes: 0 success or
pass, 1 usage or input error, 2 numerical non-convergence or failed checks.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import curves, verify
from .distance import SolverOptions, grushin_distance
from .grid import DensityGrid
from .qc import EtaProfile

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

DEFAULTS = {"alpha": 1.0, "seed": 0, "grid": None, "tol": 1e-3, "out": None}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_point(text: str) -> tuple:
    try:
        x, y = (float(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"expected a point X,Y, got {text!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise UsageError(f"point coordinates must be finite: {text!r}")
    return x, y


def parse_grid(text) -> tuple:
    if isinstance(text, (list, tuple)):
        nx, ny = (int(v) for v in text)
    else:
        try:
            nx, ny = (int(s) for s in str(text).lower().split("x"))
        except ValueError:
            raise UsageError(f"expected a grid NXxNY, got {text!r}") from None
    if nx < 16 or ny < 16:
        raise UsageError("grid dimensions must be at least 16")
    return nx, ny


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def resolve_config(args) -> dict:
    """Merge flags over the config file over built-in defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg["alpha"] = float(cfg["alpha"])
        cfg["seed"] = int(cfg["seed"])
        cfg["tol"] = float(cfg["tol"])
    except (TypeError, ValueError):
        raise UsageError("alpha, seed and tol must be numbers") from None
    if not (math.isfinite(cfg["alpha"]) and cfg["alpha"] >= 0):
        raise UsageError("alpha must be a finite nonnegative number")
    if not cfg["tol"] > 0:
        raise UsageError("tol must be positive")
    if cfg["grid"] is not None:
        cfg["grid"] = parse_grid(cfg["grid"])
    return cfg


# --- commands -----------------------------------------------------------------


def cmd_distance(args) -> int:
    cfg = resolve_config(args)
    p, q = parse_point(args.from_), parse_point(args.to)
    res = grushin_distance(p, q, cfg["alpha"], SolverOptions(rtol=cfg["tol"]))
    out = {"schema": SCHEMA, "command": "distance", "alpha": cfg["alpha"], "from": list(p), "to": list(q)}
    out.update(res.to_dict())
    _emit(out)
    return EXIT_OK if res.converged else EXIT_NUMERIC


def _density_record(grid: DensityGrid) -> dict:
    return {"schema": SCHEMA, "bbox": list(grid.bbox), "nx": grid.nx, "ny": grid.ny,
            "metric": grid.metric, "alpha": grid.alpha, "values": grid.values.tolist()}


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    if args.suite not in verify.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES)}")
    scfg = verify.SuiteConfig(cfg["alpha"], cfg["seed"], cfg["grid"], cfg["tol"])
    extra = {}
    if args.suite == "quasisymmetry":
        extra = {"map_text": args.map, "source": args.source, "target": args.target}
    try:
        report = verify.run_suite(args.suite, scfg, **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = report.to_dict()
    out["config"] = {"alpha": cfg["alpha"], "seed": cfg["seed"],
                     "grid": list(cfg["grid"]) if cfg["grid"] else None, "tol": cfg["tol"]}
    if cfg["out"]:
        d = Path(cfg["out"])
        _write(d / f"{args.suite}.json", json.dumps(out, indent=2, sort_keys=True) + "\n")
        art = report.artifacts
        if "density" in art:
            _write(d / "density.json", json.dumps(_density_record(art["density"]), sort_keys=True) + "\n")
        if "curve" in art:
            _write(d / "curve.json", json.dumps(art["curve"], indent=2, sort_keys=True) + "\n")
        if "profile" in art:
            _write(d / "profile.json", json.dumps(art["profile"].to_dict(), indent=2, sort_keys=True) + "\n")
    _emit(out)
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _load(path: Path) -> dict:
    if not path.is_file():
        raise UsageError(f"no prior result at {path}; run the producing verify suite with --out first")
    return json.loads(path.read_text())


def cmd_export(args) -> int:
    cfg = resolve_config(args)
    if not cfg["out"]:
        raise UsageError("export needs --out DIR holding prior results")
    d = Path(cfg["out"])
    target = Path(args.file) if args.file else d / f"{args.what}.csv"
    if args.what == "density":
        rec = _load(d / "density.json")
        vals = np.array(rec["values"], dtype=float)
        if rec["metric"] == "grushin":
            grid = DensityGrid.grushin(rec["bbox"], rec["nx"], rec["ny"], rec["alpha"], vals)
        else:
            grid = DensityGrid.euclidean(rec["bbox"], rec["nx"], rec["ny"], vals)
        text, rows = grid.to_csv(), grid.nx * grid.ny
    elif args.what == "curve":
        rec = _load(d / "curve.json")
        c = curves.curve_from_record(rec["record"])
        poly = curves.sample_curve(c, rec["n"], rec["grading"], rec.get("t_min"))
        text, rows = curves.polyline_to_csv(poly), len(poly)
    else:
        prof = EtaProfile.from_dict(_load(d / "profile.json"))
        text, rows = prof.to_csv(), len(prof.counts)
    _write(target, text)
    _emit({"schema": SCHEMA, "command": "export", "what": args.what, "path": str(target), "rows": rows})
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def _common(p):
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid", default=None, help="NXxNY")
    p.add_argument("--tol", type=float, default=None, help="distance solver relative tolerance")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--config", default=None, help="JSON file with alpha, seed, grid, tol, out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grushin-qc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("distance", help="Grushin distance between two points")
    _common(p)
    p.add_argument("--from", dest="from_", required=True, metavar="X,Y")
    p.add_argument("--to", required=True, metavar="X,Y")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite")
    _common(p)
    p.add_argument("--map", default="phi", help="map for the quasisymmetry suite")
    p.add_argument("--source", default="grushin", choices=("grushin", "euclidean"))
    p.add_argument("--target", default="euclidean", choices=("grushin", "euclidean"))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write CSV from a prior result")
    p.add_argument("what", choices=("density", "curve", "profile"))
    _common(p)
    p.add_argument("--file", default=None, help="CSV path (default OUT/<what>.csv)")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("missing command (distance, verify, export)")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"grushin-qc: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
