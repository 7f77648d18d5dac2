"""Config-driven experiments: bodies x densities x checks, JSON reports and a CSV summary."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from ..bodies import StarBody, body_from_spec, polar
from ..errors import UsageError
from ..measures import Density, density_from_spec, shifted_density
from ..quadrature import QuadScheme
from ..sections import OptConfig
from .checks import (
    InequalityReport,
    StabilitySpec,
    check_dual_vr,
    check_hyperplane_general,
    check_hyperplane_unconditional,
    check_hyperplane_volume,
    check_stability,
    composite_stability_spec,
)

log = logging.getLogger(__name__)

CHECK_ALIASES = {
    "eq1": "eq1_volume",
    "eq2": "eq2_unconditional",
    "eq3": "eq3_general",
    "prop1": "prop1_stability",
    "thm2": "thm2_dual_vr",
}
CSV_COLUMNS = ("inequality_id", "body", "density", "n", "lhs", "rhs", "ratio", "constant", "pass", "seed")
TOP_LEVEL_KEYS = {"bodies", "densities", "checks", "quad", "opt", "seed"}


def format_scalar(x: float) -> str:
    """Decimal text with 17 significant digits (round-trips every double)."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".16e")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text in which every float is written by ``format_scalar``."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_scalar(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def summary_row(report: InequalityReport, seed: int) -> dict:
    return {
        "inequality_id": report.inequality_id,
        "body": report.body,
        "density": report.density,
        "n": str(report.n),
        "lhs": format_scalar(report.lhs.value),
        "rhs": format_scalar(report.rhs),
        "ratio": format_scalar(report.ratio),
        "constant": format_scalar(report.constant),
        "pass": "true" if report.passed else "false",
        "seed": str(seed),
    }


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


@dataclass
class ExperimentConfig:
    bodies: list[StarBody]
    density_specs: list[dict]
    checks: list[str]
    quad: QuadScheme
    opt: OptConfig
    seed: int


def _load_json(source: Union[str, Path, dict], where: str):
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"{where}: cannot read config: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{where}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def parse_config(source: Union[str, Path, dict], seed: Optional[int] = None,
                 quad_overrides: Optional[dict] = None) -> ExperimentConfig:
    """Validate a config object or file.

    ``seed`` (when given) overrides the config's ``seed`` and is copied into
    both the quadrature scheme and the optimizer settings.
    """
    where = str(source) if not isinstance(source, dict) else "config"
    raw = _load_json(source, where)
    if not isinstance(raw, dict):
        raise UsageError(f"{where}: top level must be an object")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise UsageError(f"{where}: unknown top-level keys {sorted(unknown)}")
    for key in ("bodies", "densities", "checks"):
        if not isinstance(raw.get(key, []), list):
            raise UsageError(f"{where}: '{key}' must be a list")
    registry: dict = {}
    bodies = []
    for i, spec in enumerate(raw.get("bodies", [])):
        body = body_from_spec(spec, registry, f"bodies[{i}]")
        if body.dim < 2:
            raise UsageError(f"bodies[{i}]: n = {body.dim}; hyperplane sections need n >= 2")
        if isinstance(spec, dict) and spec.get("name"):
            registry[spec["name"]] = body
        bodies.append(body)
    densities = []
    for i, spec in enumerate(raw.get("densities", [])):
        density_from_spec(spec, 2, f"densities[{i}]")  # validate once, build per dimension later
        densities.append(spec)
    checks = []
    for i, c in enumerate(raw.get("checks", [])):
        cid = CHECK_ALIASES.get(c, c) if isinstance(c, str) else None
        if cid not in CHECK_ALIASES.values():
            raise UsageError(f"checks[{i}]: unknown check {c!r}; expected one of {sorted(CHECK_ALIASES)}")
        checks.append(cid)
    base_seed = seed if seed is not None else raw.get("seed", (raw.get("quad") or {}).get("seed", 0))
    if not isinstance(base_seed, int) or isinstance(base_seed, bool):
        raise UsageError(f"{where}: seed must be an integer")
    quad = QuadScheme.from_spec(raw.get("quad"))
    if quad_overrides:
        quad = replace(quad, **quad_overrides)
    quad = replace(quad, seed=base_seed)
    opt = replace(OptConfig.from_spec(raw.get("opt")), seed=base_seed)
    return ExperimentConfig(bodies, densities, checks, quad, opt, base_seed)


def applicable(check_id: str, body: StarBody, density: Density) -> Optional[str]:
    """``None`` if the check applies to the cell, otherwise the reason it does not."""
    if check_id == "eq2_unconditional" and not (body.is_convex and body.is_unconditional):
        return "body is not flagged convex and unconditional"
    if check_id in ("eq3_general", "eq1_volume", "thm2_dual_vr") and not body.is_convex:
        return "body is not flagged convex"
    if check_id == "eq1_volume" and not density.is_lebesgue:
        return "the volume form only uses Lebesgue measure"
    if check_id == "thm2_dual_vr" and not polar(body).is_unconditional:
        return "polar body is not unconditional"
    if check_id == "prop1_stability" and not (
        (body.is_convex and body.is_unconditional) or body.is_intersection_body
    ):
        return "body is neither unconditional convex nor flagged as an intersection body"
    return None


def run_cell(check_id: str, body: StarBody, density: Density, quad: QuadScheme,
             opt: OptConfig) -> InequalityReport:
    if check_id == "eq2_unconditional":
        return check_hyperplane_unconditional(body, density, quad, opt)
    if check_id == "eq3_general":
        return check_hyperplane_general(body, density, quad, opt)
    if check_id == "eq1_volume":
        return check_hyperplane_volume(body, quad, opt)
    if check_id == "thm2_dual_vr":
        return check_dual_vr(body, density, quad, opt)
    if body.is_convex and body.is_unconditional:
        spec = composite_stability_spec(body, density, seed=quad.seed)
    else:
        f = density if density.is_lebesgue else shifted_density(density, 1.0, label=f"1+{density.label}")
        spec = StabilitySpec(body, "direct", f, seed=quad.seed)
    return check_stability(spec, quad, opt)


@dataclass
class ExperimentResult:
    reports: list[InequalityReport] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    report_paths: list[Path] = field(default_factory=list)
    summary_path: Optional[Path] = None

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def exit_code(self) -> int:
        return 0 if self.all_passed else 1


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_") or "x"


def run_experiment(config: Union[str, Path, dict], out_dir: Union[str, Path, None] = None,
                   seed: Optional[int] = None, quad_overrides: Optional[dict] = None) -> ExperimentResult:
    """Run every applicable (body, density, check) cell in config order.

    Writes ``reports/NNN_<check>_<body>_<density>.json`` and ``summary.csv``
    under ``out_dir`` when it is given.  Cells whose hypotheses the body does
    not meet are skipped with a warning and listed in ``skipped``.
    """
    cfg = parse_config(config, seed, quad_overrides)
    result = ExperimentResult()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "reports").mkdir(parents=True, exist_ok=True)
    index = 0
    for body in cfg.bodies:
        for di, dspec in enumerate(cfg.density_specs):
            density = density_from_spec(dspec, body.dim, f"densities[{di}]")
            for check_id in cfg.checks:
                reason = applicable(check_id, body, density)
                if reason is not None:
                    log.warning("skipping %s on %s with %s: %s", check_id, body.label, density.label, reason)
                    result.skipped.append({"inequality_id": check_id, "body": body.label,
                                           "density": density.label, "reason": reason})
                    continue
                report = run_cell(check_id, body, density, cfg.quad, cfg.opt)
                result.reports.append(report)
                result.rows.append(summary_row(report, cfg.seed))
                if out is not None:
                    name = f"{index:03d}_{_slug(check_id)}_{_slug(body.label)}_{_slug(density.label)}.json"
                    path = out / "reports" / name
                    path.write_text(dumps(report.to_dict()) + "\n")
                    result.report_paths.append(path)
                index += 1
    if out is not None:
        result.summary_path = out / "summary.csv"
        result.summary_path.write_text(summary_csv(result.rows))
    return result
