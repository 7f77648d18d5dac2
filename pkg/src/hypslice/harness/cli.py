"""Command-line interface (``hypslice``)."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..bodies import StarBody, body_from_spec
from ..errors import NumericError, UsageError
from ..factorization import mahler_volume, volume_ratio_report
from ..measures import density_from_spec
from ..quadrature import QuadScheme, integrate_body, integrate_section
from ..sections import OptConfig, intersection_body_of, max_section
from .checks import _plain, sandwich_witness
from .experiment import (
    CHECK_ALIASES,
    dumps,
    format_scalar,
    run_cell,
    run_experiment,
    summary_csv,
    summary_row,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
ENGINES = ("auto", "deterministic", "monte_carlo", "grid_oracle")


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    # the same flags are accepted before and after the subcommand; the
    # subcommand copies use SUPPRESS so they never clobber earlier values
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None),
                   help="base seed for every random stream (default: config seed, else 0)")
    p.add_argument("--engine", choices=ENGINES, default=d("auto"), help="quadrature engine")
    p.add_argument("--mc-samples", type=int, default=d(None), help="Monte Carlo directions")
    p.add_argument("--out", default=d(None), help="output directory (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"), help="output format")


def _add_body(p: argparse.ArgumentParser, density: bool = True) -> None:
    p.add_argument("--body", required=True,
                   help="JSON body spec or shorthand 'lp:N:P' (e.g. lp:3:inf)")
    if density:
        p.add_argument("--density", default="lebesgue",
                       help="density kind or JSON spec (default: lebesgue)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypslice",
        description="Measures of convex bodies, their central sections, and slicing inequality checks.",
    )
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, density=True, body=True):
        p = sub.add_parser(name, help=help_text)
        _add_common(p, suppress=True)
        if body:
            _add_body(p, density)
        return p

    add("volume", "measure of a body")
    p = add("section", "measure of the central section orthogonal to --xi")
    p.add_argument("--xi", required=True, help="comma-separated normal vector")
    p = add("max-section", "largest central section found by multi-start search")
    p.add_argument("--starts", type=int, default=None)
    p = add("intersection-body", "radial function of the intersection body", density=False)
    p.add_argument("--dirs", required=True, help="directions separated by ';', coordinates by ','")
    p = add("lozanovskii", "box factorization and its containment check", density=False)
    p.add_argument("--probes", type=int, default=4096)
    add("john", "inscribed diagonal ellipsoid and volume ratio bound", density=False)
    add("mahler", "product of the volumes of a body and its polar", density=False)
    p = add("check", "one inequality check")
    p.add_argument("which", choices=("eq2", "eq3", "prop1", "thm2"))
    p = add("run", "run a JSON experiment config", body=False)
    p.add_argument("config")
    return parser


def parse_body(text: str) -> StarBody:
    text = text.strip()
    if text.startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--body:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return body_from_spec(spec, path="--body")
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "lp":
        raise UsageError("--body must be a JSON spec or 'lp:N:P'")
    return body_from_spec({"kind": "lp", "n": parts[1], "p": parts[2]}, path="--body")


def parse_density(text: str, n: int):
    text = text.strip()
    if text.startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--density:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    else:
        spec = {"kind": text}
    return density_from_spec(spec, n, "--density")


def parse_vectors(text: str, n: int, what: str) -> np.ndarray:
    try:
        rows = [[float(v) for v in chunk.split(",")] for chunk in text.split(";") if chunk.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers") from None
    arr = np.array(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise UsageError(f"{what}: expected vectors of length {n}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0):
        raise UsageError(f"{what}: zero vector")
    return arr / norms[:, None]


def _scheme(args) -> QuadScheme:
    s = QuadScheme(engine=args.engine, seed=args.seed)
    if args.mc_samples is not None:
        s = replace(s, mc_samples=args.mc_samples)
    return s


def _flatten(obj, prefix: str = "") -> list[tuple[str, str]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out.extend(_flatten(v, f"{prefix}.{k}" if prefix else str(k)))
        return out
    if isinstance(obj, (list, tuple)):
        out = []
        for i, v in enumerate(obj):
            out.extend(_flatten(v, f"{prefix}[{i}]"))
        return out
    if isinstance(obj, float):
        return [(prefix, format_scalar(obj))]
    if isinstance(obj, bool):
        return [(prefix, "true" if obj else "false")]
    return [(prefix, "" if obj is None else str(obj))]


def _emit(payload: dict, args, name: str) -> None:
    payload = _plain(payload)
    if args.format == "json":
        text = dumps(payload) + "\n"
    else:
        text = "key,value\n" + "".join(f"{k},{v}\n" for k, v in _flatten(payload))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.{args.format}").write_text(text)
    else:
        sys.stdout.write(text)


def dispatch(args) -> int:
    config_seed = args.seed
    if args.seed is None:
        args.seed = 0
    s = _scheme(args)
    cfg = OptConfig(seed=args.seed)
    if args.command == "run":
        overrides = {"engine": args.engine} if args.engine != "auto" else {}
        if args.mc_samples is not None:
            overrides["mc_samples"] = args.mc_samples
        result = run_experiment(args.config, args.out, seed=config_seed, quad_overrides=overrides)
        if args.out is None:
            if args.format == "csv":
                sys.stdout.write(summary_csv(result.rows))
            else:
                sys.stdout.write(dumps({"reports": [r.to_dict() for r in result.reports],
                                        "skipped": result.skipped}) + "\n")
        for item in result.skipped:
            print(f"skipped {item['inequality_id']} on {item['body']} / {item['density']}: "
                  f"{item['reason']}", file=sys.stderr)
        return result.exit_code

    body = parse_body(args.body)
    n = body.dim
    if args.command in ("volume", "section", "max-section", "check"):
        density = parse_density(args.density, n)
    if args.command == "volume":
        _emit({"body": body.label, "density": density.label,
               "estimate": integrate_body(body, density, s).to_dict()}, args, "volume")
    elif args.command == "section":
        xi = parse_vectors(args.xi, n, "--xi")[0]
        _emit({"body": body.label, "density": density.label, "xi": xi,
               "estimate": integrate_section(body, density, xi, s).to_dict()}, args, "section")
    elif args.command == "max-section":
        if args.starts is not None:
            cfg = replace(cfg, starts=args.starts)
        _emit({"body": body.label, "density": density.label,
               **max_section(body, density, s, cfg).to_dict()}, args, "max_section")
    elif args.command == "intersection-body":
        dirs = parse_vectors(args.dirs, n, "--dirs")
        ib = intersection_body_of(body, s)
        radii = ib.radial_unchecked(dirs)
        _emit({"body": ib.label, "directions": dirs, "radii": radii}, args, "intersection_body")
    elif args.command == "lozanovskii":
        t, rep = sandwich_witness(body, args.probes, args.seed)
        _emit({"body": body.label, **rep.to_dict()}, args, "lozanovskii")
    elif args.command == "john":
        rep = volume_ratio_report(body, s)
        _emit({"body": body.label, **rep.to_dict()}, args, "john")
    elif args.command == "mahler":
        _emit({"body": body.label, "mahler": mahler_volume(body, s).to_dict()}, args, "mahler")
    elif args.command == "check":
        report = run_cell(CHECK_ALIASES[args.which], body, density, s, cfg)
        if args.format == "csv" and not args.out:
            sys.stdout.write(summary_csv([summary_row(report, args.seed)]))
        else:
            _emit(report.to_dict(), args, f"check_{args.which}")
        return EXIT_OK if report.passed else EXIT_FAIL
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return dispatch(args)
    except UsageError as exc:
        print(f"hypslice: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"hypslice: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
