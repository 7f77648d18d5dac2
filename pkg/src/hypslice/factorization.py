"""Box factorization of unconditional bodies, diagonal inscribed ellipsoids,
volume ratios and Mahler volumes.

Both optimization problems here have the form

    maximize sum(log t_i)  subject to  H(t) <= 1,  t > 0,

with ``H`` non-decreasing in every coordinate and ``{u : H(exp(u)) <= 1}``
convex.  They are solved by pairwise exchange in log-coordinates: for a pair
``(i, j)`` put ``u_i = a + s``, ``u_j = a - s``, let ``a(s)`` be the largest
feasible ``a`` (a concave function of ``s``) and move to the maximizer of
``a(s)``.  Updating a single coordinate alone cannot make progress once the
constraint is active, which is why pairs are used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .bodies import DiagonalMap, SearchConfig, StarBody, make_lp_ball, polar
from .constants import ball_volume
from .errors import NumericError, UsageError
from .geometry import mc_directions
from .measures import builtin_density
from .quadrature import Estimate, QuadScheme, integrate_body
from .sections import OptConfig, _compass, diagonal_directions

FEAS_TOL = 1e-13
MAX_SWEEPS = 500
_GRID_POINTS = 33
_GRID_ROUNDS = 10
_FD_STEP = 1e-6
NOISE_FLOOR = 1e-8


def _require_unconditional_convex(body: StarBody, what: str) -> None:
    if not (body.is_convex and body.is_unconditional):
        raise UsageError(f"{what} requires a body flagged convex and unconditional ({body.label})")


def _grid_sup(feasible: Callable[[np.ndarray], np.ndarray], lo: float, hi: float) -> float:
    """Largest ``x`` in ``[lo, hi]`` with ``feasible(x)``, assuming a feasible prefix."""
    if hi <= lo:
        return lo
    for _ in range(_GRID_ROUNDS):
        xs = np.linspace(lo, hi, _GRID_POINTS)
        ok = np.flatnonzero(feasible(xs))
        k = int(ok.max()) if ok.size else 0
        if k == _GRID_POINTS - 1:
            return hi
        lo, hi = xs[k], xs[k + 1]
    return float(lo)


class _LogBoxProblem:
    """``max sum(u)`` subject to ``H(exp(u)) <= 1`` by pairwise exchange."""

    def __init__(self, constraint: Callable[[np.ndarray], np.ndarray], axis_radii: np.ndarray):
        self.constraint = constraint
        self.log_alpha = np.log(axis_radii)
        self.n = axis_radii.shape[0]

    def values(self, rows: np.ndarray) -> np.ndarray:
        return np.asarray(self.constraint(np.exp(rows)), dtype=float)

    def _rows(self, u: np.ndarray, cols: dict, count: int) -> np.ndarray:
        rows = np.repeat(u[None, :], count, axis=0)
        for c, v in cols.items():
            rows[:, c] = v
        return rows

    def _slice_radius(self, u: np.ndarray, i: int, j: int) -> float:
        """Largest feasible ``u_i`` when ``t_j = 0`` and the rest is fixed."""
        def feasible(xs):
            rows = self._rows(u, {i: xs, j: -np.inf}, xs.shape[0])
            return self.values(rows) <= 1.0 + FEAS_TOL
        return _grid_sup(feasible, u[i], self.log_alpha[i])

    def _a_of(self, u, i, j, s, bi, bj) -> float:
        # the segment between the slice radii is feasible by convexity, so
        # a(s) lies within log 2 of the upper bound min(bi - s, bj + s)
        lo = -float(np.logaddexp(s - bi, -s - bj))
        hi = min(bi - s, bj + s)

        def feasible(avals):
            rows = self._rows(u, {i: avals + s, j: avals - s}, avals.shape[0])
            return self.values(rows) <= 1.0 + FEAS_TOL
        return _grid_sup(feasible, lo, hi)

    def _slope(self, u, i, j, s, bi, bj) -> float:
        """``a'(s) = (D_j - D_i) / (D_i + D_j)`` by implicit differentiation."""
        a = self._a_of(u, i, j, s, bi, bj)
        base = u.copy()
        base[i], base[j] = a + s, a - s
        h = _FD_STEP
        rows = np.repeat(base[None, :], 4, axis=0)
        rows[0, i] += h
        rows[1, i] -= h
        rows[2, j] += h
        rows[3, j] -= h
        g = self.values(rows)
        di, dj = g[0] - g[1], g[2] - g[3]
        if di + dj <= 0:
            return 0.0
        return (dj - di) / (di + dj)

    def exchange(self, u: np.ndarray, i: int, j: int) -> tuple[float, float]:
        bi = self._slice_radius(u, i, j)
        bj = self._slice_radius(u, j, i)
        centre = 0.5 * (bi - bj)
        half = 0.5 * math.log(2.0) + 0.01
        lo, hi = centre - half, centre + half
        f_lo = self._slope(u, i, j, lo, bi, bj)
        f_hi = self._slope(u, i, j, hi, bi, bj)
        if f_lo > 0 and f_hi < 0:
            s = brentq(lambda x: self._slope(u, i, j, x, bi, bj), lo, hi, xtol=1e-14, rtol=1e-15)
        else:
            s = hi if self._a_of(u, i, j, hi, bi, bj) > self._a_of(u, i, j, lo, bi, bj) else lo
        return self._a_of(u, i, j, s, bi, bj), s

    def solve(self, u0: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, int]:
        u = u0.copy()
        previous = math.inf
        for sweep in range(1, max_sweeps + 1):
            delta = 0.0
            for i in range(self.n):
                for j in range(i + 1, self.n):
                    a, s = self.exchange(u, i, j)
                    # near the optimum a(s) is flat to second order, so moves
                    # are judged by the root of a'(s), not by the change in a
                    if 2.0 * a > u[i] + u[j] - 1e-12:
                        new_i, new_j = a + s, a - s
                        delta = max(delta, abs(new_i - u[i]), abs(new_j - u[j]))
                        u[i], u[j] = new_i, new_j
            if delta < tol:
                return u, sweep
            # finite-difference slopes leave moves of ~1e-10; once sweeps stop
            # contracting at that level, further sweeps only shuffle noise
            if delta < NOISE_FLOOR and delta > 0.5 * previous:
                return u, sweep
            previous = delta
        return u, max_sweeps


def _solve_log_box(constraint, axis_radii: np.ndarray, start: np.ndarray, tol: float,
                   max_sweeps: int) -> np.ndarray:
    start = np.asarray(start, dtype=float)
    h0 = float(np.asarray(constraint(start[None, :]), dtype=float)[0])
    if not (math.isfinite(h0) and h0 > 0) or np.any(start <= 0):
        raise NumericError("could not find an interior starting corner")
    t0 = start / h0
    if start.shape[0] == 1:
        return t0
    problem = _LogBoxProblem(constraint, axis_radii)
    u, _ = problem.solve(np.log(t0), tol, max_sweeps)
    t = np.exp(u)
    # land exactly inside: undo any overshoot from the feasibility tolerance
    h = float(np.asarray(constraint(t[None, :]), dtype=float)[0])
    return t / max(h, 1.0)


def _axis_radii(body: StarBody) -> np.ndarray:
    r = body.radial_unchecked(np.eye(body.dim))
    if not np.all(np.isfinite(r) & (r > 0)):
        raise NumericError(f"non-positive or infinite axis radius for {body.label}")
    return r


def lozanovskii_box(body: StarBody, tol: float = 1e-10, start=None,
                    max_sweeps: int = MAX_SWEEPS) -> DiagonalMap:
    """Diagonal ``T`` maximizing ``det T`` subject to ``T(B_inf^n)`` inside ``body``.

    For unconditional convex bodies the box ``[-t, t]`` is contained iff its
    positive corner is, so the constraint is ``||t||_L <= 1``.  The optimal
    ``T`` also satisfies ``L`` inside ``n T(B_1^n)``; see ``verify_sandwich``.

    ``start`` is an optional positive vector, rescaled onto the boundary; the
    default is the symmetric corner ``rho_L(e_i) / n``.
    """
    _require_unconditional_convex(body, "lozanovskii_box")
    alpha = _axis_radii(body)
    x0 = alpha / body.dim if start is None else np.asarray(start, dtype=float).ravel()
    if x0.shape[0] != body.dim:
        raise UsageError("start vector has the wrong dimension")
    return DiagonalMap(_solve_log_box(body.gauge, alpha, x0, tol, max_sweeps))


def lozanovskii_outer_body(t: DiagonalMap) -> StarBody:
    """``n T(B_1^n)`` as a weighted cross-polytope."""
    n = t.dim
    return make_lp_ball(n, 1, weights=n * t.diag, label=f"{n}T(B1^{n})")


@dataclass
class SandwichReport:
    """Numerical check of ``T(B_inf^n)`` inside ``L`` inside ``n T(B_1^n)``.

    ``outer_max`` is a sampled lower bound for ``max_{x in L} ||T^-1 x||_1``.
    """

    t: DiagonalMap
    inner_ok: bool
    inner_margin: float
    outer_max: float
    outer_ok: bool
    outer_witness: np.ndarray

    def to_dict(self) -> dict:
        return {
            "t": [float(v) for v in self.t.diag],
            "inner_ok": self.inner_ok,
            "inner_margin": self.inner_margin,
            "outer_max": self.outer_max,
            "outer_ok": self.outer_ok,
            "outer_witness": [float(v) for v in self.outer_witness],
        }


def _boundary_probes(n: int, probes: int, seed: int) -> np.ndarray:
    dirs = [np.eye(n), diagonal_directions(n, 4096)]
    if probes > 0:
        dirs.append(np.abs(mc_directions(n, probes, seed ^ 0x5A4D)))
    return np.vstack(dirs)


def verify_sandwich(body: StarBody, t: DiagonalMap, probes: int = 4096, seed: int = 0) -> SandwichReport:
    """Check the inner box corner exactly and the outer cross-polytope by sampling.

    The outer maximum comes from boundary probes followed by compass ascent
    from the 8 best, so ``outer_ok`` means no witness above ``n`` was found.
    """
    _require_unconditional_convex(body, "verify_sandwich")
    if not isinstance(t, DiagonalMap):
        t = DiagonalMap(t)
    n = body.dim
    if t.dim != n:
        raise UsageError("diagonal map and body dimensions differ")
    inner = float(body.minkowski(t.diag))
    inv_t = 1.0 / t.diag

    def objective(thetas):
        thetas = np.atleast_2d(thetas)
        return (np.abs(thetas) @ inv_t) * body.radial_unchecked(thetas)

    dirs = _boundary_probes(n, probes, seed)
    vals = objective(dirs)
    order = np.argsort(-vals, kind="stable")[:8]
    best, witness = float(vals[order[0]]), dirs[order[0]]
    cfg = OptConfig(step_init=0.05, step_min=1e-10, max_iters=2000)
    for k in order:
        if n == 1:
            break
        xi, val, _ = _compass(objective, dirs[k], cfg, True)
        if val > best:
            best, witness = val, xi
    witness = witness * body.radial_unchecked(witness[None, :])[0]
    return SandwichReport(t, inner <= 1.0 + 1e-9, inner, best, best <= n * (1.0 + 1e-9), witness)


def _lp_john_axes(body: StarBody) -> Optional[np.ndarray]:
    """Closed form for axis-aligned weighted l_p balls, ``None`` otherwise.

    ``E(a)`` lies in ``B_p(w)`` iff the l_2 -> l_p norm of ``diag(a / w)`` is
    at most one: ``max a_i / w_i`` for ``p >= 2`` and ``||a / w||_r`` with
    ``1/r = 1/p - 1/2`` for ``p < 2``.  Maximizing ``prod a_i`` then makes all
    ``a_i / w_i`` equal.
    """
    lp = body.lp
    if lp is None or not lp.is_diagonal:
        return None
    w = lp.weights
    if lp.p >= 2.0:
        return w.copy()
    r = 1.0 / (1.0 / lp.p - 0.5)
    return w * body.dim ** (-1.0 / r)


def _containment_value(body: StarBody, a: np.ndarray, thetas: np.ndarray) -> float:
    return float(body.gauge(thetas * a).max())


def john_diagonal_ellipsoid(body: StarBody, tol: float = 1e-10, samples: int = 512,
                            seed: int = 0) -> np.ndarray:
    """Semi-axes of a large axis-aligned ellipsoid inscribed in ``body``.

    Weighted l_p balls use the exact containment condition.  Other bodies
    use ``H(a) = max ||a * theta||_L`` over sampled unit ``theta`` and the
    same pairwise solver; the answer is then checked by compass ascent over
    ``theta`` and shrunk if a violation turns up, so it is always feasible
    for the sampled and ascended directions.  Maximality is heuristic.
    """
    _require_unconditional_convex(body, "john_diagonal_ellipsoid")
    exact = _lp_john_axes(body)
    if exact is not None:
        return exact
    n = body.dim
    thetas = _boundary_probes(n, samples, seed)

    def constraint(rows):
        rows = np.atleast_2d(rows)
        return np.array([_containment_value(body, a, thetas) for a in rows])

    alpha = _axis_radii(body)
    a = _solve_log_box(constraint, alpha, alpha / math.sqrt(n), max(tol, 1e-9), 100)

    def objective(th):
        return body.gauge(np.atleast_2d(th) * a)

    vals = objective(thetas)
    worst = float(vals.max())
    cfg = OptConfig(step_init=0.05, step_min=1e-10, max_iters=2000)
    for k in np.argsort(-vals, kind="stable")[:8]:
        _, val, _ = _compass(objective, thetas[k], cfg, True)
        worst = max(worst, val)
    return a / max(worst, 1.0)


def mahler_volume(body: StarBody, s: Optional[QuadScheme] = None,
                  search_cfg: Optional[SearchConfig] = None) -> Estimate:
    """``|K| |K°|`` with relative errors added."""
    if not body.is_convex:
        raise UsageError(f"mahler_volume needs a convex body ({body.label})")
    s = s or QuadScheme()
    leb = builtin_density("lebesgue", body.dim)
    v1 = integrate_body(body, leb, s)
    v2 = integrate_body(polar(body, search_cfg), leb, s)
    value = v1.value * v2.value
    return Estimate(value, abs(value) * (v1.rel_err + v2.rel_err), v1.method,
                    v1.n_evals + v2.n_evals)


@dataclass
class VolumeRatioReport:
    """Inscribed diagonal ellipsoid, the volume-ratio bound it gives, and the Mahler volume."""

    semi_axes: np.ndarray
    volume: Estimate
    ellipsoid_volume: float
    vr_upper: float
    mahler: Estimate
    santalo_ratio: float
    # n (|K||K°|)^(1/n); reported only, no lower bound is asserted
    scaled_mahler: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "semi_axes": [float(v) for v in self.semi_axes],
            "volume": self.volume.to_dict(),
            "ellipsoid_volume": self.ellipsoid_volume,
            "vr_upper": self.vr_upper,
            "mahler": self.mahler.to_dict(),
            "santalo_ratio": self.santalo_ratio,
            "scaled_mahler": self.scaled_mahler,
        }


def volume_ratio_report(body: StarBody, s: Optional[QuadScheme] = None,
                        search_cfg: Optional[SearchConfig] = None) -> VolumeRatioReport:
    _require_unconditional_convex(body, "volume_ratio_report")
    s = s or QuadScheme()
    n = body.dim
    axes = john_diagonal_ellipsoid(body)
    e_vol = ball_volume(n) * float(np.prod(axes))
    vol = integrate_body(body, builtin_density("lebesgue", n), s)
    vr = (vol.value / e_vol) ** (1.0 / n)
    mahler = mahler_volume(body, s, search_cfg)
    return VolumeRatioReport(axes, vol, e_vol, vr, mahler, mahler.value / ball_volume(n) ** 2,
                             n * mahler.value ** (1.0 / n))
