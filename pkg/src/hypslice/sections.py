"""Maximal central sections, intersection bodies and the radial metric."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bodies import StarBody
from .errors import UsageError
from .geometry import mc_directions, tangent_bases
from .measures import Density, builtin_density
from .quadrature import Estimate, QuadScheme, integrate_section, section_value, section_values

ORTHANT_MODES = ("auto", "on", "off")


@dataclass(frozen=True)
class OptConfig:
    """Multi-start compass search on the sphere.

    ``starts`` defaults to ``8 (n + 1)``.  ``refine`` is how many distinct
    search endpoints are re-evaluated with the full quadrature scheme.
    """

    starts: Optional[int] = None
    max_iters: int = 200
    step_init: float = 0.25
    step_min: float = 1e-4
    orthant_restrict: str = "auto"
    refine: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.orthant_restrict not in ORTHANT_MODES:
            raise UsageError(f"orthant_restrict must be one of {ORTHANT_MODES}")
        if self.starts is not None and self.starts < 1:
            raise UsageError("starts must be >= 1")
        if not (self.step_init > 0 and self.step_min > 0):
            raise UsageError("compass steps must be positive")

    def n_starts(self, n: int) -> int:
        return self.starts if self.starts is not None else 8 * (n + 1)

    @classmethod
    def from_spec(cls, spec: Optional[dict], path: str = "opt") -> "OptConfig":
        if spec is None:
            return cls()
        if not isinstance(spec, dict):
            raise UsageError(f"{path}: expected an object")
        unknown = set(spec) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"{path}: unknown keys {sorted(unknown)}")
        try:
            return cls(**spec)
        except TypeError as exc:
            raise UsageError(f"{path}: {exc}") from None


@dataclass
class MaxSectionResult:
    """Best section found.  ``value`` is a lower bound on the true maximum.

    ``trace`` holds the search-fidelity value reached from each start.
    """

    xi_star: np.ndarray
    value: Estimate
    starts: int
    trace: list = field(default_factory=list)
    orthant_restricted: bool = False
    lower_bound: bool = True
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "xi_star": [float(v) for v in self.xi_star],
            "value": self.value.to_dict(),
            "starts": self.starts,
            "trace": [float(v) for v in self.trace],
            "orthant_restricted": self.orthant_restricted,
            "lower_bound": self.lower_bound,
            "evaluations": self.evaluations,
        }


def _canonical_sign(xi: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(xi) > 1e-15)
    if nz.size and xi[nz[0]] < 0:
        return -xi
    return xi


def diagonal_directions(n: int, cap: int = 64) -> np.ndarray:
    """``(+-1, ..., +-1)/sqrt(n)``, one per antipodal pair, at most ``cap``."""
    rows = []
    for k in range(min(2 ** (n - 1), cap)):
        rows.append([1.0] + [-1.0 if (k >> j) & 1 else 1.0 for j in range(n - 1)])
    return np.array(rows) / math.sqrt(n)


def _structured_starts(n: int, folded: bool) -> list[np.ndarray]:
    # main diagonal first so that small start budgets still probe it
    diags = diagonal_directions(n, 1 if folded else 64)
    return [diags[0], *np.eye(n), *diags[1:]]


def start_directions(n: int, count: int, folded: bool, seed: int) -> np.ndarray:
    starts = _structured_starts(n, folded)[:count]
    extra = count - len(starts)
    if extra > 0:
        rnd = mc_directions(n, extra, seed ^ 0x57A7)
        if folded:
            rnd = np.abs(rnd)
        starts.extend(rnd)
    return np.array(starts)


def _use_orthant(body: StarBody, density: Density, mode: str) -> bool:
    if mode == "on":
        return True
    if mode == "off":
        return False
    return bool(body.is_unconditional and density.sign_invariant)


def _compass(objective, xi0: np.ndarray, cfg: OptConfig, folded: bool) -> tuple[np.ndarray, float, int]:
    """Compass search on the sphere; ``objective`` maps a batch of unit rows to values."""
    xi = xi0 / np.linalg.norm(xi0)
    val = float(objective(xi[None, :])[0])
    evals = 1
    step = cfg.step_init
    n = xi.shape[0]
    for _ in range(cfg.max_iters):
        if step < cfg.step_min:
            break
        basis = tangent_bases(xi)[0]
        polls = np.vstack([xi + step * basis, xi - step * basis])
        polls /= np.linalg.norm(polls, axis=1, keepdims=True)
        if folded:
            polls = np.abs(polls)
        vals = objective(polls)
        evals += polls.shape[0]
        j = int(np.argmax(vals))
        if vals[j] <= val * (1.0 + 1e-15):
            step *= 0.5
        else:
            xi, val = polls[j], float(vals[j])
    if n > 0:
        xi = _canonical_sign(xi)
    return xi, val, evals


def max_section(body: StarBody, density: Density, s: Optional[QuadScheme] = None,
                opt_cfg: Optional[OptConfig] = None) -> MaxSectionResult:
    """Multi-start maximization of ``xi -> mu(L cap xi^perp)`` over the sphere.

    The search runs on ``s.coarse()``; the best distinct endpoints are then
    re-evaluated with ``s`` and the largest is reported.  The result bounds
    the true maximum from below.
    """
    n = body.dim
    if n < 2:
        raise UsageError("max_section requires n >= 2")
    if density.dim != n:
        raise UsageError("density and body dimensions differ")
    s = s or QuadScheme()
    cfg = opt_cfg or OptConfig()
    folded = _use_orthant(body, density, cfg.orthant_restrict)
    search = s.coarse()

    def objective(xis):
        return section_values(body, density, xis, search)

    starts = start_directions(n, cfg.n_starts(n), folded, cfg.seed)
    ends, trace = [], []
    evals = 0
    for xi0 in starts:
        xi, val, k = _compass(objective, xi0, cfg, folded)
        evals += k
        ends.append(xi)
        trace.append(val)
    order = np.argsort(-np.array(trace), kind="stable")
    chosen: list[np.ndarray] = []
    for i in order:
        if all(min(np.linalg.norm(ends[i] - c), np.linalg.norm(ends[i] + c)) > 1e-3 for c in chosen):
            chosen.append(ends[i])
        if len(chosen) >= max(1, cfg.refine):
            break
    best_xi, best_est = None, None
    for xi in chosen:
        xi = xi / np.linalg.norm(xi)
        est = integrate_section(body, density, xi, s)
        evals += 1
        if best_est is None or est.value > best_est.value or (
            est.value == best_est.value and tuple(xi) < tuple(best_xi)
        ):
            best_xi, best_est = xi, est
    return MaxSectionResult(best_xi, best_est, len(starts), trace, folded, True, evals)


class _SectionRadius:
    """Radial function of the intersection body, cached per direction."""

    def __init__(self, body: StarBody, s: QuadScheme):
        self.body = body
        self.scheme = s
        self.lebesgue = builtin_density("lebesgue", body.dim)
        self.cache: dict = {}

    def __call__(self, theta: np.ndarray) -> float:
        key = tuple(np.round(theta * 1e12).astype(np.int64))
        hit = self.cache.get(key)
        if hit is None:
            hit = section_value(self.body, self.lebesgue, theta, self.scheme)
            self.cache[key] = hit
        return hit


def intersection_body_of(body: StarBody, s: Optional[QuadScheme] = None) -> StarBody:
    """Star body whose radius in direction ``theta`` is ``|L cap theta^perp|``.

    Radii are computed lazily, one section quadrature per queried direction.
    """
    n = body.dim
    if n < 2:
        raise UsageError("intersection bodies need n >= 2")
    radius = _SectionRadius(body, s or QuadScheme())

    def gauge(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        norms = np.linalg.norm(pts, axis=1)
        out = np.zeros(pts.shape[0])
        for i in np.flatnonzero(norms > 0):
            out[i] = norms[i] / radius(pts[i] / norms[i])
        return out

    return StarBody(
        dim=n,
        gauge=gauge,
        label=f"I({body.label})",
        is_convex=False,
        is_unconditional=body.is_unconditional,
        is_intersection_body=True,
    )


def probe_directions(n: int, n_random: int = 4096, seed: int = 0) -> np.ndarray:
    """Coordinate and diagonal directions plus keyed random ones."""
    dirs = [np.eye(n), diagonal_directions(n)]
    if n_random > 0:
        dirs.append(mc_directions(n, n_random, seed ^ 0xD15))
    return np.vstack(dirs)


def radial_distance(a: StarBody, b: StarBody, directions=None, *, n_random: int = 4096,
                    seed: int = 0) -> float:
    """``max |rho_a - rho_b|`` over sampled directions.

    A lower bound on the radial metric (the supremum over the whole sphere).
    """
    if a.dim != b.dim:
        raise UsageError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if directions is None:
        dirs = probe_directions(a.dim, n_random, seed)
    else:
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        if dirs.shape[1] != a.dim:
            raise UsageError("direction sample has the wrong dimension")
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    gap = np.abs(a.radial_unchecked(dirs) - b.radial_unchecked(dirs))
    return float(gap.max())
