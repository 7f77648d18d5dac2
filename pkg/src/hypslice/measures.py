"""Even, non-negative densities and the measures they define."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels_py as K
from .errors import UsageError

EVENNESS_SAMPLES = 1000


@dataclass(frozen=True, eq=False)
class Density:
    """Density ``g`` of a measure ``mu(B) = int_B g``.

    Built-in densities are radial profiles ``h(r * s(theta))`` along rays,
    where ``s`` is the Euclidean or l_1 norm of the direction; ``profile``
    holds the kernel code and parameters used by the quadrature fast path.
    ``sign_invariant`` records invariance under coordinate sign flips.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    label: str
    is_even: bool = True
    sign_invariant: bool = False
    kind: str = "custom"
    profile: Optional[tuple] = None
    params: dict = field(default_factory=dict)
    kinks: Optional[np.ndarray] = field(default=None, repr=False)

    def __call__(self, x):
        return density_eval(self, x)

    @property
    def is_lebesgue(self) -> bool:
        return self.kind == "lebesgue"

    def kink_normals(self) -> np.ndarray:
        if self.kinks is None:
            return np.zeros((0, self.dim))
        return self.kinks


def density_eval(d: Density, x):
    """``g(x)`` for one point or an ``(N, n)`` batch."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[1] != d.dim:
        raise UsageError(f"density is {d.dim}-dimensional, got points of shape {arr.shape}")
    vals = np.asarray(d.fn(pts), dtype=float)
    return float(vals[0]) if single else vals


def builtin_density(kind: str, n: int, **params) -> Density:
    """One of the built-in even densities on ``R^n``.

    ``lebesgue``: 1.  ``gaussian``: standard normal density with scale
    ``sigma``.  ``exp_l1``: ``exp(-|x|_1)``.  ``radial_power``: ``|x|_2**alpha``.
    ``bump``: ``exp(1 - 1/(1 - |x|^2/R^2))`` inside ``|x| < R`` (``radius``),
    zero outside.
    """
    n = int(n)
    if n < 1:
        raise UsageError("density dimension must be >= 1")
    if kind == "lebesgue":
        return Density(n, lambda x: np.ones(x.shape[0]), "lebesgue", sign_invariant=True,
                       kind=kind, profile=(K.LEBESGUE, 0.0, 0.0))
    if kind == "gaussian":
        sigma = float(params.get("sigma", 1.0))
        if not sigma > 0:
            raise UsageError("gaussian sigma must be positive")
        norm = (2.0 * math.pi * sigma * sigma) ** (-n / 2.0)
        b = 1.0 / (2.0 * sigma * sigma)
        return Density(n, lambda x: norm * np.exp(-b * np.einsum("ij,ij->i", x, x)),
                       f"gaussian({sigma:g})", sign_invariant=True, kind=kind,
                       profile=(K.GAUSSIAN, norm, b), params={"sigma": sigma})
    if kind == "exp_l1":
        return Density(n, lambda x: np.exp(-np.abs(x).sum(axis=1)), "exp_l1",
                       sign_invariant=True, kind=kind, profile=(K.EXP_L1, 0.0, 0.0),
                       kinks=np.eye(n))
    if kind == "radial_power":
        alpha = float(params.get("alpha", 2.0))
        if alpha < 0:
            raise UsageError("radial_power exponent alpha must be >= 0")
        return Density(n, lambda x: np.power(np.sqrt(np.einsum("ij,ij->i", x, x)), alpha),
                       f"radial_power({alpha:g})", sign_invariant=True, kind=kind,
                       profile=(K.RADIAL_POWER, alpha, 0.0), params={"alpha": alpha})
    if kind == "bump":
        radius = float(params.get("radius", 1.0))
        if not radius > 0:
            raise UsageError("bump radius must be positive")

        def bump(x):
            q = np.einsum("ij,ij->i", x, x) / (radius * radius)
            out = np.zeros(x.shape[0])
            inside = q < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
            return out

        return Density(n, bump, f"bump({radius:g})", sign_invariant=True, kind=kind,
                       profile=(K.BUMP, radius, 0.0), params={"radius": radius})
    raise UsageError(f"unknown density kind {kind!r}")


def custom_density(n: int, fn: Callable[[np.ndarray], np.ndarray], label: str = "custom",
                   *, sign_invariant: bool = False, seed: int = 0,
                   kink_normals=None) -> Density:
    """Wrap a user density, rejecting it unless it is even and non-negative.

    ``fn`` takes an ``(N, n)`` array.  Evenness and non-negativity are
    checked on sampled points; continuity is assumed.
    """
    d = Density(int(n), fn, label, sign_invariant=sign_invariant,
                kinks=None if kink_normals is None else np.atleast_2d(kink_normals))
    rng = np.random.Generator(np.random.Philox(key=[seed, 0xE7E7]))
    x = rng.standard_normal((EVENNESS_SAMPLES, d.dim)) * rng.exponential(1.0, (EVENNESS_SAMPLES, 1))
    gx = density_eval(d, x)
    if np.any(gx < 0) or not np.all(np.isfinite(gx)):
        raise UsageError(f"density {label!r} is negative or non-finite on sampled points")
    if not np.array_equal(gx, density_eval(d, -x)):
        raise UsageError(f"density {label!r} is not even on sampled points")
    return d


def shifted_density(d: Density, offset: float, label: Optional[str] = None) -> Density:
    """``g + offset`` (used for densities bounded below by one).

    ``params`` keeps ``base`` and ``offset`` so integrals can be split into
    ``offset * volume + int g``.
    """
    base = d.fn
    return Density(d.dim, lambda x: base(x) + offset, label or f"{offset:g}+{d.label}",
                   is_even=d.is_even, sign_invariant=d.sign_invariant, kinks=d.kinks,
                   params={"base": d, "offset": float(offset)})


def density_from_spec(spec: dict, n: int, path: str = "density") -> Density:
    """Config grammar ``{"kind": ..., "sigma"?, "alpha"?, "radius"?}``."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict):
        raise UsageError(f"{path}: expected an object")
    kind = spec.get("kind")
    params = {k: spec[k] for k in ("sigma", "alpha", "radius") if k in spec}
    try:
        params = {k: float(v) for k, v in params.items()}
        return builtin_density(kind, n, **params)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None
