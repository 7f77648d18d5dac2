"""Origin-symmetric star and convex bodies given by their gauge.

A body is described by its Minkowski functional ``||x||_K``, evaluated on
batches of points.  Weighted l_p balls and their linear images carry an
explicit structure (``LpStructure``) so that polars, kink locations and the
compiled kernels can be used; anything else is an opaque gauge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _backend
from .errors import UsageError
from .geometry import tangent_bases

UNIT_TOL = 1e-12
SINGULAR_TOL = 1e-12


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise UsageError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return pts, single


def parse_p(p) -> float:
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "oo"):
            return math.inf
        try:
            p = float(key)
        except ValueError:
            raise UsageError(f"invalid exponent p={p!r}") from None
    p = float(p)
    if not p > 0:
        raise UsageError(f"exponent p must be positive, got {p}")
    return p


def conjugate_exponent(p: float) -> float:
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    if p < 1.0:
        raise UsageError("conjugate exponent undefined for p < 1")
    return p / (p - 1.0)


def _fmt_p(p: float) -> str:
    if math.isinf(p):
        return "inf"
    return f"{p:g}"


@dataclass(frozen=True, eq=False)
class LpStructure:
    """Body ``A . B_p^n(w)`` where ``B_p^n(w) = {x : sum |x_i / w_i|^p <= 1}``.

    ``matrix`` is ``None`` for the axis-aligned (weighted) ball.
    """

    p: float
    weights: np.ndarray
    matrix: Optional[np.ndarray] = None
    inverse: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.matrix is None

    def gauge(self, pts: np.ndarray) -> np.ndarray:
        y = pts if self.inverse is None else pts @ self.inverse.T
        return _backend.lp_gauge(np.ascontiguousarray(y), self.p, 1.0 / self.weights)

    def determinant(self) -> float:
        det = float(np.prod(self.weights))
        if self.matrix is not None:
            det *= abs(float(np.linalg.det(self.matrix)))
        return det

    def dual(self) -> "LpStructure":
        q = conjugate_exponent(self.p)
        if self.matrix is None:
            return LpStructure(q, 1.0 / self.weights)
        # (A B)^o = A^{-T} B^o
        return LpStructure(q, 1.0 / self.weights, self.inverse.T.copy(), self.matrix.T.copy())

    def kink_normals(self) -> np.ndarray:
        """Normals of the hyperplanes off which the gauge is smooth."""
        n = self.dim
        rows = np.eye(n) if self.inverse is None else self.inverse.copy()
        rows = rows / self.weights[:, None]
        normals = []
        even_integer = float(self.p).is_integer() and int(self.p) % 2 == 0
        if not even_integer:
            normals.extend(rows)
        if math.isinf(self.p):
            for i in range(n):
                for j in range(i + 1, n):
                    normals.append(rows[i] + rows[j])
                    normals.append(rows[i] - rows[j])
        if not normals:
            return np.zeros((0, n))
        return np.array(normals)


@dataclass(frozen=True, eq=False)
class StarBody:
    """Origin-symmetric star body given by its Minkowski functional.

    ``gauge`` maps an ``(N, n)`` array to the ``N`` gauge values.  The class
    flags are declared by whoever constructs the body and never inferred.
    """

    dim: int
    gauge: Callable[[np.ndarray], np.ndarray]
    label: str = "body"
    is_convex: bool = False
    is_unconditional: bool = False
    is_intersection_body: bool = False
    lp: Optional[LpStructure] = None
    kinks: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise UsageError(f"dimension must be positive, got {self.dim}")

    def minkowski(self, x):
        pts, single = _as_points(x, self.dim)
        vals = np.asarray(self.gauge(pts), dtype=float)
        return float(vals[0]) if single else vals

    def radial_unchecked(self, thetas: np.ndarray) -> np.ndarray:
        return 1.0 / np.asarray(self.gauge(thetas), dtype=float)

    def kink_normals(self) -> np.ndarray:
        if self.kinks is not None:
            return self.kinks
        if self.lp is not None:
            return self.lp.kink_normals()
        return np.zeros((0, self.dim))

    def with_flags(self, **flags) -> "StarBody":
        return replace(self, **flags)


@dataclass(frozen=True)
class DiagonalMap:
    """Positive diagonal operator ``diag(t_1, ..., t_n)``."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).ravel()
        if d.size == 0 or not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise UsageError("diagonal map entries must be finite and strictly positive")
        object.__setattr__(self, "diag", d)

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    @property
    def det(self) -> float:
        return float(np.exp(np.sum(np.log(self.diag))))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    def apply(self, x):
        return np.asarray(x, dtype=float) * self.diag


def minkowski(body: StarBody, x):
    """``||x||_K``; accepts one point or an ``(N, n)`` batch."""
    return body.minkowski(x)


def radial(body: StarBody, theta):
    """Radial function ``rho_K(theta) = 1 / ||theta||_K`` at unit vectors."""
    pts, single = _as_points(theta, body.dim)
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise UsageError("radial() expects unit vectors (|theta| = 1 within 1e-12)")
    vals = body.radial_unchecked(pts)
    return float(vals[0]) if single else vals


def _lp_body(lp: LpStructure, label: str, *, unconditional: bool,
             intersection_body: bool) -> StarBody:
    return StarBody(
        dim=lp.dim,
        gauge=lp.gauge,
        label=label,
        is_convex=lp.p >= 1.0,
        is_unconditional=unconditional,
        is_intersection_body=intersection_body,
        lp=lp,
    )


def make_lp_ball(n: int, p, weights=None, *, intersection_body: Optional[bool] = None,
                 label: Optional[str] = None) -> StarBody:
    """Weighted l_p ball ``{x : sum |x_i / w_i|^p <= 1}`` (max for ``p = inf``).

    Only ``p`` in {1, 2} is flagged as an intersection body by default;
    pass ``intersection_body`` to override.
    """
    n = int(n)
    if n < 1:
        raise UsageError(f"dimension must be >= 1, got {n}")
    p = parse_p(p)
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != (n,):
            raise UsageError(f"weights must have length {n}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise UsageError("weights must be strictly positive")
    if intersection_body is None:
        intersection_body = p in (1.0, 2.0)
    if label is None:
        label = f"B{_fmt_p(p)}^{n}"
        if weights is not None and not np.all(w == 1.0):
            label += "[" + ",".join(f"{v:g}" for v in w) + "]"
    return _lp_body(LpStructure(p, w), label, unconditional=True,
                    intersection_body=bool(intersection_body))


def _check_matrix(matrix, n: int) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.shape != (n, n):
        raise UsageError(f"map must be {n}x{n}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise UsageError("map has non-finite entries")
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0 or s[-1] / s[0] < SINGULAR_TOL:
        raise UsageError("map is numerically singular")
    return a


def _is_diagonal(a: np.ndarray) -> bool:
    return bool(np.all(a[~np.eye(a.shape[0], dtype=bool)] == 0.0))


def linear_image(body: StarBody, matrix, *, label: Optional[str] = None) -> StarBody:
    """The body ``T K`` with gauge ``||x||_{TK} = ||T^{-1} x||_K``."""
    a = _check_matrix(matrix, body.dim)
    diagonal = _is_diagonal(a)
    if label is None:
        if diagonal:
            label = "diag(" + ",".join(f"{v:g}" for v in np.diag(a)) + ")." + body.label
        else:
            label = "T." + body.label
    unconditional = body.is_unconditional and diagonal
    if body.lp is not None:
        lp = body.lp
        if diagonal and lp.matrix is None:
            new = LpStructure(lp.p, lp.weights * np.abs(np.diag(a)))
        else:
            fwd = a if lp.matrix is None else a @ lp.matrix
            new = LpStructure(lp.p, lp.weights, fwd, np.linalg.inv(fwd))
        return replace(
            _lp_body(new, label, unconditional=unconditional,
                     intersection_body=body.is_intersection_body),
            is_convex=body.is_convex,
        )
    inv = np.linalg.inv(a)
    base_gauge = body.gauge
    kinks = body.kink_normals()
    return StarBody(
        dim=body.dim,
        gauge=lambda pts: base_gauge(np.ascontiguousarray(pts @ inv.T)),
        label=label,
        is_convex=body.is_convex,
        is_unconditional=unconditional,
        is_intersection_body=body.is_intersection_body,
        kinks=kinks @ inv if kinks.size else kinks,
    )


def dilate(body: StarBody, factor: float) -> StarBody:
    """``factor * K`` for a positive scalar."""
    factor = float(factor)
    if not factor > 0:
        raise UsageError("dilation factor must be positive")
    return linear_image(body, factor * np.eye(body.dim),
                        label=f"{factor:g}.{body.label}")


@dataclass(frozen=True)
class SearchConfig:
    """Effort for support-function maximization in searched polars."""

    starts: int = 64
    iterations: int = 200
    ascent_starts: int = 4
    step_init: float = 0.5
    step_min: float = 1e-9
    seed: int = 0


def _support_search(body: StarBody, cfg: SearchConfig) -> Callable[[np.ndarray], np.ndarray]:
    n = body.dim
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, 0x5EA5C4]))
    extra = max(cfg.starts - 2 * n, 0)
    starts = np.vstack([np.eye(n), -np.eye(n), rng.standard_normal((extra, n))])
    starts /= np.linalg.norm(starts, axis=1, keepdims=True)
    bpts = starts * body.radial_unchecked(starts)[:, None]

    def objective(x, thetas):
        return body.radial_unchecked(thetas) * np.einsum("ij,ij->i", x, thetas)

    def support(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[0])
        norms = np.linalg.norm(pts, axis=1)
        live = norms > 0
        x = pts[live]
        if x.shape[0] == 0:
            return out
        scores = x @ bpts.T
        k = min(cfg.ascent_starts, bpts.shape[0])
        top = np.argsort(-scores, axis=1, kind="stable")[:, :k]
        # seeds: best boundary samples plus the direction of x itself
        seeds = np.concatenate([starts[top], (x / norms[live, None])[:, None, :]], axis=1)
        m = seeds.shape[1]
        xs = np.repeat(x, m, axis=0)
        th = seeds.reshape(-1, n)
        val = objective(xs, th)
        if n == 1:
            best = val.reshape(-1, m).max(axis=1)
            out[live] = best
            return out
        step = np.full(th.shape[0], cfg.step_init)
        active = np.ones(th.shape[0], dtype=bool)
        for _ in range(cfg.iterations):
            ids = np.flatnonzero(active)
            if ids.size == 0:
                break
            basis = tangent_bases(th[ids])
            polls = np.concatenate([basis, -basis], axis=1) * step[ids, None, None]
            cand = th[ids, None, :] + polls
            cand /= np.linalg.norm(cand, axis=2, keepdims=True)
            npoll = cand.shape[1]
            cv = objective(np.repeat(xs[ids], npoll, axis=0), cand.reshape(-1, n))
            cv = cv.reshape(ids.size, npoll)
            j = np.argmax(cv, axis=1)
            gain = cv[np.arange(ids.size), j]
            better = gain > val[ids]
            mv = ids[better]
            th[mv] = cand[np.flatnonzero(better), j[better]]
            val[mv] = gain[better]
            shrink = ids[~better]
            step[shrink] *= 0.5
            active[shrink[step[shrink] < cfg.step_min]] = False
        out[live] = val.reshape(-1, m).max(axis=1)
        return out

    return support


def polar(body: StarBody, search_cfg: Optional[SearchConfig] = None) -> StarBody:
    """Polar body; its gauge is the support function of ``body``.

    Exact for l_p balls and their linear images, approximate (a lower bound
    on the support function, from multi-start ascent) otherwise.
    """
    if not body.is_convex:
        raise UsageError(f"polar requires a convex body; {body.label} is not flagged convex")
    label = f"polar({body.label})"
    if body.lp is not None:
        dual = body.lp.dual()
        return _lp_body(dual, label, unconditional=body.is_unconditional,
                        intersection_body=dual.p in (1.0, 2.0))
    cfg = search_cfg or SearchConfig()
    return StarBody(
        dim=body.dim,
        gauge=_support_search(body, cfg),
        label=label,
        is_convex=True,
        is_unconditional=body.is_unconditional,
        is_intersection_body=False,
    )


@dataclass(frozen=True)
class UnconditionalityReport:
    max_deviation: float
    worst_point: np.ndarray
    worst_signs: np.ndarray
    sample_count: int


def unconditionality_witness(body: StarBody, sample_count: int = 1000,
                             seed: int = 0) -> UnconditionalityReport:
    """Largest ``| ||delta . x|| - ||x|| |`` over random points and sign patterns."""
    if sample_count < 1:
        raise UsageError("sample_count must be >= 1")
    n = body.dim
    rng = np.random.Generator(np.random.Philox(key=[seed, 0xD1A6]))
    x = rng.standard_normal((sample_count, n))
    signs = rng.choice(np.array([-1.0, 1.0]), size=(sample_count, n))
    dev = np.abs(body.minkowski(x * signs) - body.minkowski(x))
    k = int(np.argmax(dev))
    return UnconditionalityReport(float(dev[k]), x[k], signs[k], sample_count)


def body_from_spec(spec: dict, registry: Optional[dict] = None, path: str = "body") -> StarBody:
    """Build a body from the config grammar.

    ``{"kind": "lp", "n": 3, "p": 1, "weights": [...]}``,
    ``{"kind": "image", "matrix": [[...]], "base": <spec or name>}``,
    ``{"kind": "polar", "base": <spec or name>}``.  Optional keys ``name``
    (label) and ``intersection_body`` (flag override).
    """
    if not isinstance(spec, dict):
        raise UsageError(f"{path}: expected an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    name = spec.get("name")
    override = spec.get("intersection_body")

    def base_of():
        base = spec.get("base")
        if base is None:
            raise UsageError(f"{path}.base: required for kind {kind!r}")
        if isinstance(base, str):
            if registry is None or base not in registry:
                raise UsageError(f"{path}.base: unknown body {base!r}")
            return registry[base]
        return body_from_spec(base, registry, path + ".base")

    if kind == "lp":
        if "n" not in spec or "p" not in spec:
            raise UsageError(f"{path}: lp body needs 'n' and 'p'")
        try:
            n = int(spec["n"])
        except (TypeError, ValueError):
            raise UsageError(f"{path}.n: not an integer: {spec['n']!r}") from None
        try:
            body = make_lp_ball(n, spec["p"], spec.get("weights"), label=name)
        except UsageError as exc:
            raise UsageError(f"{path}: {exc}") from None
    elif kind == "image":
        base = base_of()
        try:
            mat = np.array([[float(v) for v in row] for row in spec["matrix"]])
        except KeyError:
            raise UsageError(f"{path}.matrix: required for kind 'image'") from None
        except (TypeError, ValueError):
            raise UsageError(f"{path}.matrix: rows of decimal numbers expected") from None
        try:
            body = linear_image(base, mat, label=name)
        except UsageError as exc:
            raise UsageError(f"{path}: {exc}") from None
        if "n" in spec and int(spec["n"]) != body.dim:
            raise UsageError(f"{path}.n: {spec['n']} does not match base dimension {body.dim}")
    elif kind == "polar":
        try:
            body = polar(base_of())
        except UsageError as exc:
            raise UsageError(f"{path}: {exc}") from None
        if name:
            body = replace(body, label=name)
    else:
        raise UsageError(f"{path}.kind: expected 'lp', 'image' or 'polar', got {kind!r}")
    if override is not None:
        body = replace(body, is_intersection_body=bool(override))
    return body
