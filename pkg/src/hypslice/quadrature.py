"""Integration of densities over star bodies and their central sections.

Everything goes through polar coordinates: for a body ``L`` in an
``m``-dimensional subspace spanned by the rows of ``U``,

    mu(L) = int_{S^(m-1)} int_0^{rho_L(U^T phi)} r^(m-1) g(r U^T phi) dr dphi.

The radial integral is Gauss-Legendre; the sphere integral is either a
deterministic rule on cones aligned with the kinks of the integrand
or Monte Carlo over keyed random directions.  ``auto`` uses the
deterministic rule for bodies in dimension at most 4, volumes and sections
alike, and Monte Carlo above.

For linear images ``A B_p(w)`` the deterministic rule integrates in the
coordinates of the preimage, where the kinks are the coordinate planes:
directions ``phi`` map to the (non-unit) rays ``phi F`` with ``F`` built
from ``A``, and the result is scaled by the Jacobian of ``F``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np
from scipy import special

from . import _backend
from . import _kernels_py as K
from .bodies import LpStructure, StarBody, UNIT_TOL
from .constants import sphere_area
from .errors import UsageError
from .geometry import gauss_legendre01, mc_directions, sphere_rule, tangent_bases
from .measures import Density

ENGINES = ("auto", "deterministic", "monte_carlo", "grid_oracle")
MAX_DETERMINISTIC_SPHERE_DIM = 4
_CUSTOM_CHUNK = 4096


@dataclass(frozen=True)
class Estimate:
    """Numerical value with an error bound (deterministic) or standard error (MC)."""

    value: float
    err: float
    method: str
    n_evals: int = 0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise UsageError(f"non-finite estimate from {self.method}")
        if not self.err >= 0:
            raise UsageError("estimate error must be non-negative")

    @property
    def rel_err(self) -> float:
        if self.value == 0.0:
            return 0.0 if self.err == 0.0 else math.inf
        return self.err / abs(self.value)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class QuadScheme:
    """Quadrature settings.

    ``sphere_nodes`` is the Gauss-Legendre order per cone cell of the
    deterministic engine; ``mc_samples`` the number of directions for Monte
    Carlo.  ``auto`` picks deterministic for bodies in dimension <= 4.
    """

    engine: str = "auto"
    radial_nodes: int = 64
    sphere_nodes: int = 8
    mc_samples: int = 20000
    seed: int = 0
    target_rel_err: Optional[float] = None
    adaptive: bool = False
    kink_aware: bool = True
    grid_resolution: int = 256

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise UsageError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        for name in ("radial_nodes", "sphere_nodes", "mc_samples", "grid_resolution"):
            if int(getattr(self, name)) < 1:
                raise UsageError(f"{name} must be >= 1")

    def engine_for(self, n: int) -> str:
        # keyed on the ambient dimension: sections of a body in R^5 sit on S^3,
        # but their kinks are oblique there and the cone partition explodes
        if self.engine == "auto":
            return "deterministic" if n <= MAX_DETERMINISTIC_SPHERE_DIM else "monte_carlo"
        return self.engine

    def rel_target(self, engine: str) -> float:
        if self.target_rel_err is not None:
            return self.target_rel_err
        return 1e-3 if engine == "monte_carlo" else 1e-6

    def coarse(self) -> "QuadScheme":
        """Cheaper scheme for search loops (no kink alignment, fewer nodes)."""
        return replace(
            self,
            radial_nodes=max(16, self.radial_nodes // 4),
            sphere_nodes=max(4, self.sphere_nodes // 2),
            mc_samples=max(512, self.mc_samples // 16),
            kink_aware=False,
            adaptive=False,
        )

    def scaled(self, factor: int) -> "QuadScheme":
        """Scheme with roughly ``factor`` times the effort."""
        f = max(1, int(factor))
        grow = max(1, int(round(math.sqrt(f))))
        return replace(
            self,
            radial_nodes=self.radial_nodes * grow,
            sphere_nodes=self.sphere_nodes * grow,
            mc_samples=self.mc_samples * f,
            grid_resolution=self.grid_resolution * grow,
        )

    @classmethod
    def from_spec(cls, spec: Optional[dict], path: str = "quad") -> "QuadScheme":
        if spec is None:
            return cls()
        if not isinstance(spec, dict):
            raise UsageError(f"{path}: expected an object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(spec) - known
        if unknown:
            raise UsageError(f"{path}: unknown keys {sorted(unknown)}")
        try:
            return cls(**spec)
        except TypeError as exc:
            raise UsageError(f"{path}: {exc}") from None


_CLOSED_FORM = (K.GAUSSIAN, K.EXP_L1, K.RADIAL_POWER)


def _closed_form_moments(rho, thetas, m, kind, a, b) -> np.ndarray:
    """Radial integrals expressed through the regularized incomplete gamma function.

    Rays need not be unit vectors: ``s`` is the norm of ``theta`` that the
    profile is evaluated in.
    """
    if kind == K.GAUSSIAN:
        # a * int_0^rho r^(m-1) exp(-b s^2 r^2) dr
        h = 0.5 * m
        bs = b * np.einsum("ij,ij->i", thetas, thetas)
        return a * 0.5 * math.exp(special.gammaln(h)) * bs ** (-h) * special.gammainc(h, bs * rho * rho)
    if kind == K.EXP_L1:
        s = np.abs(thetas).sum(axis=1)
        return math.exp(special.gammaln(m)) * s ** (-m) * special.gammainc(m, s * rho)
    s = np.sqrt(np.einsum("ij,ij->i", thetas, thetas))
    return s**a * rho ** (m + a) / (m + a)


def _ray_integrals(body: StarBody, density: Density, thetas: np.ndarray, m: int,
                   radial_nodes: int) -> np.ndarray:
    """``int_0^rho(theta) r^(m-1) g(r theta) dr`` for each direction row."""
    rho = body.radial_unchecked(thetas)
    if density.profile is not None:
        kind, a, b = density.profile
        if kind == K.LEBESGUE:
            return _backend.radial_moments(rho, rho, m, kind, a, b, None, None)
        if kind in _CLOSED_FORM:
            return _closed_form_moments(rho, thetas, m, kind, a, b)
        t, w = gauss_legendre01(radial_nodes)
        if kind == K.EXP_L1:
            s = np.abs(thetas).sum(axis=1)
        else:
            s = np.sqrt(np.einsum("ij,ij->i", thetas, thetas))
        return _backend.radial_moments(rho, s, m, kind, a, b, t, w)
    t, w = gauss_legendre01(radial_nodes)
    out = np.empty(thetas.shape[0])
    k = t.shape[0]
    for lo in range(0, thetas.shape[0], _CUSTOM_CHUNK):
        hi = min(lo + _CUSTOM_CHUNK, thetas.shape[0])
        r = rho[lo:hi, None] * t[None, :]
        pts = r[:, :, None] * thetas[lo:hi, None, :]
        g = np.asarray(density.fn(pts.reshape(-1, thetas.shape[1])), dtype=float).reshape(-1, k)
        out[lo:hi] = rho[lo:hi] * ((g * r ** (m - 1)) @ w)
    return out


@dataclass(frozen=True)
class _Chart:
    """Parametrization ``x = y F`` of the integration subspace (``F`` is ``m x n``)."""

    F: Optional[np.ndarray]
    jacobian: float
    body_normals: np.ndarray


def _chart(body: StarBody, frame: Optional[np.ndarray]) -> _Chart:
    n = body.dim
    lp = body.lp
    if lp is not None and lp.matrix is not None:
        # preimage of the subspace under A, orthonormalized; A maps it back
        pre = np.eye(n) if frame is None else np.linalg.qr((frame @ lp.inverse.T).T)[0].T
        f = pre @ lp.matrix.T
        jac = math.sqrt(abs(np.linalg.det(f @ f.T)))
        base = LpStructure(lp.p, lp.weights).kink_normals()
        return _Chart(f, jac, base @ pre.T if base.size else np.zeros((0, pre.shape[0])))
    normals = body.kink_normals()
    m = n if frame is None else frame.shape[0]
    if normals.size and frame is not None:
        normals = normals @ frame.T
    return _Chart(frame, 1.0, normals if normals.size else np.zeros((0, m)))


def _kink_normals(chart: _Chart, density: Density) -> np.ndarray:
    d = density.kink_normals()
    if d.size and chart.F is not None:
        d = d @ chart.F.T
    parts = [x for x in (chart.body_normals, d) if x.size]
    return np.vstack(parts) if parts else chart.body_normals


def _sphere_value(body, density, chart: _Chart, m, q, radial_nodes, normals) -> tuple[float, int]:
    phi, w = sphere_rule(m, normals, q)
    thetas = phi if chart.F is None else phi @ chart.F
    vals = _ray_integrals(body, density, np.ascontiguousarray(thetas), m, radial_nodes)
    return chart.jacobian * float(vals @ w), int(thetas.shape[0] * (1 if density.is_lebesgue else radial_nodes))


def _deterministic(body, density, frame, m, s: QuadScheme) -> Estimate:
    if m > MAX_DETERMINISTIC_SPHERE_DIM:
        raise UsageError(
            f"deterministic engine supports spheres of dimension <= {MAX_DETERMINISTIC_SPHERE_DIM - 1} "
            f"(ambient {MAX_DETERMINISTIC_SPHERE_DIM}); use monte_carlo for dimension {m}"
        )
    chart = _chart(body, frame) if s.kink_aware else _Chart(frame, 1.0, np.zeros((0, m)))
    normals = _kink_normals(chart, density) if s.kink_aware else np.zeros((0, m))
    q, k = s.sphere_nodes, s.radial_nodes
    target = s.rel_target("deterministic")
    evals = 0
    for _ in range(5):
        fine, e1 = _sphere_value(body, density, chart, m, q, k, normals)
        coarse, e2 = _sphere_value(body, density, chart, m, max(2, q // 2), max(2, k // 2), normals)
        evals += e1 + e2
        err = abs(fine - coarse)
        if not s.adaptive or err <= target * abs(fine):
            break
        q, k = 2 * q, 2 * k
    return Estimate(fine, err, "deterministic", evals)


def _monte_carlo(body, density, frame, m, s: QuadScheme) -> Estimate:
    count = s.mc_samples
    target = s.rel_target("monte_carlo")
    area = sphere_area(m)
    for _ in range(5):
        phi = mc_directions(m, count, s.seed)
        thetas = phi if frame is None else phi @ frame
        vals = _ray_integrals(body, density, np.ascontiguousarray(thetas), m, s.radial_nodes)
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(count)) if count > 1 else abs(mean)
        est = Estimate(area * mean, area * se, "monte_carlo",
                       count * (1 if density.is_lebesgue else s.radial_nodes))
        if not s.adaptive or est.rel_err <= target:
            break
        count *= 4
    return est


def _line_section(body, density, frame, s: QuadScheme) -> Estimate:
    phi = np.array([[1.0], [-1.0]])
    thetas = np.ascontiguousarray(phi @ frame)
    fine = float(_ray_integrals(body, density, thetas, 1, s.radial_nodes).sum())
    coarse = float(_ray_integrals(body, density, thetas, 1, max(2, s.radial_nodes // 2)).sum())
    return Estimate(fine, abs(fine - coarse), "deterministic", 2 * s.radial_nodes)


def _integrate(body: StarBody, density: Density, frame: Optional[np.ndarray],
               s: QuadScheme) -> Estimate:
    if density.dim != body.dim:
        raise UsageError(f"density dimension {density.dim} != body dimension {body.dim}")
    m = body.dim if frame is None else frame.shape[0]
    engine = s.engine_for(body.dim)
    if engine == "grid_oracle":
        return _grid_integral(body, density, frame, s.grid_resolution)
    if m == 1:
        if frame is None:
            frame = np.ones((1, 1))
        return _line_section(body, density, frame, s)
    if engine == "deterministic":
        return _deterministic(body, density, frame, m, s)
    return _monte_carlo(body, density, frame, m, s)


def integrate_body(body: StarBody, density: Density, s: Optional[QuadScheme] = None) -> Estimate:
    """``mu(L) = int_L g``."""
    return _integrate(body, density, None, s or QuadScheme())


def hyperplane_basis(xi) -> np.ndarray:
    """Rows form an orthonormal basis of ``xi^perp`` (``xi`` and ``-xi`` share it)."""
    xi = _unit(xi)
    if xi.shape[0] < 2:
        raise UsageError("hyperplane sections need dimension >= 2")
    return tangent_bases(xi)[0]


def _unit(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size == 0 or abs(np.linalg.norm(xi) - 1.0) > UNIT_TOL:
        raise UsageError("xi must be a unit vector (|xi| = 1 within 1e-12)")
    return xi


def integrate_section(body: StarBody, density: Density, xi,
                      s: Optional[QuadScheme] = None) -> Estimate:
    """``mu(L cap xi^perp)``: the (n-1)-dimensional integral over the central section."""
    xi = _unit(xi)
    if xi.shape[0] != body.dim:
        raise UsageError(f"xi has dimension {xi.shape[0]}, body has {body.dim}")
    frame = hyperplane_basis(xi)
    return _integrate(body, density, frame, s or QuadScheme())


def section_value(body: StarBody, density: Density, xi: np.ndarray, s: QuadScheme) -> float:
    """Section integral without error estimate (single rule); for search loops."""
    frame = tangent_bases(xi)[0]
    m = frame.shape[0]
    engine = s.engine_for(body.dim)
    if m == 1 or engine == "grid_oracle":
        return _integrate(body, density, frame, s).value
    if engine == "deterministic":
        if m > MAX_DETERMINISTIC_SPHERE_DIM:
            raise UsageError(f"deterministic engine cannot integrate over S^{m - 1}")
        if not s.kink_aware:
            return _sphere_value(body, density, _Chart(frame, 1.0, np.zeros((0, m))), m,
                                 s.sphere_nodes, s.radial_nodes, np.zeros((0, m)))[0]
        chart = _chart(body, frame)
        return _sphere_value(body, density, chart, m, s.sphere_nodes, s.radial_nodes,
                             _kink_normals(chart, density))[0]
    phi = mc_directions(m, s.mc_samples, s.seed)
    vals = _ray_integrals(body, density, np.ascontiguousarray(phi @ frame), m, s.radial_nodes)
    return sphere_area(m) * float(vals.mean())


def section_values(body: StarBody, density: Density, xis: np.ndarray, s: QuadScheme) -> np.ndarray:
    """Batched ``section_value`` for kink-unaware deterministic or MC schemes.

    All sections share one rule on ``S^(n-2)`` (common random numbers for MC),
    so nearby ``xi`` give smoothly varying values.
    """
    xis = np.atleast_2d(xis)
    n = xis.shape[1]
    m = n - 1
    engine = s.engine_for(n)
    if m == 1 or engine == "grid_oracle" or (engine == "deterministic" and s.kink_aware):
        return np.array([section_value(body, density, xi, s) for xi in xis])
    frames = tangent_bases(xis)
    if engine == "deterministic":
        if m > MAX_DETERMINISTIC_SPHERE_DIM:
            raise UsageError(f"deterministic engine cannot integrate over S^{m - 1}")
        phi, w = sphere_rule(m, np.zeros((0, m)), s.sphere_nodes)
    else:
        phi = mc_directions(m, s.mc_samples, s.seed)
        w = np.full(phi.shape[0], sphere_area(m) / phi.shape[0])
    thetas = np.matmul(phi[None, :, :], frames).reshape(-1, n)
    vals = _ray_integrals(body, density, np.ascontiguousarray(thetas), m, s.radial_nodes)
    return vals.reshape(xis.shape[0], -1) @ w


def sample_radii(body: StarBody, count: int = 4096, seed: int = 0) -> np.ndarray:
    """Radial values at coordinate, diagonal and random directions."""
    n = body.dim
    dirs = [np.eye(n)]
    if n <= 12:
        signs = np.array(np.meshgrid(*([[1.0, -1.0]] * n), indexing="ij")).reshape(n, -1).T
        dirs.append(signs / math.sqrt(n))
    dirs.append(mc_directions(n, count, seed ^ 0xB0B))
    return body.radial_unchecked(np.vstack(dirs))


def _grid_integral(body: StarBody, density: Density, frame: Optional[np.ndarray],
                   resolution: int) -> Estimate:
    m = body.dim if frame is None else frame.shape[0]
    if m > 3:
        raise UsageError("grid oracle is limited to dimension <= 3")
    if resolution < 16:
        raise UsageError("grid oracle resolution must be >= 16")
    radii = sample_radii(body)
    big = float(radii.max()) * 1.01
    lip = 1.0 / (0.99 * float(radii.min()))
    h = 2.0 * big / resolution
    centers = -big + (np.arange(resolution) + 0.5) * h
    band = lip * h * math.sqrt(m) / 2.0
    cell = h**m
    total = 0.0
    boundary = 0.0
    # slab over the first coordinate keeps memory at resolution^(m-1) points
    rest = np.stack(np.meshgrid(*([centers] * (m - 1)), indexing="ij"), axis=-1).reshape(-1, m - 1) \
        if m > 1 else np.zeros((1, 0))
    for c0 in centers:
        y = np.hstack([np.full((rest.shape[0], 1), c0), rest])
        x = y if frame is None else y @ frame
        gv = body.gauge(np.ascontiguousarray(x))
        near = gv <= 1.0 + band
        if not near.any():
            continue
        dens = density.fn(x[near])
        inside = gv[near] <= 1.0
        total += float(dens[inside].sum())
        boundary += float(dens[np.abs(gv[near] - 1.0) <= band].sum())
    return Estimate(total * cell, boundary * cell, "grid_oracle", resolution**m)


def grid_oracle_volume(body: StarBody, density: Density, resolution: int = 256) -> Estimate:
    """Midpoint Riemann sum of ``g * 1_L`` on a uniform grid over ``[-R, R]^n``.

    ``err`` is the density mass of the cells whose centre lies within the
    gauge's Lipschitz band around the boundary (an O(1/resolution) bound).
    Independent of the polar-coordinate engines; used to cross-check them.
    """
    if body.dim > 3:
        raise UsageError("grid oracle is limited to n <= 3")
    return _grid_integral(body, density, None, int(resolution))


def grid_oracle_section(body: StarBody, density: Density, xi, resolution: int = 256) -> Estimate:
    """Grid oracle on the section ``L cap xi^perp`` (dimension ``n - 1 <= 3``)."""
    xi = _unit(xi)
    return _grid_integral(body, density, hyperplane_basis(xi), int(resolution))
