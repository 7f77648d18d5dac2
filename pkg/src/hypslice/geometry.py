"""Rules on the unit sphere: Householder bases, keyed random directions,
Gauss-Legendre rules on simplices and kink-aligned cone partitions."""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.spatial import Delaunay, QhullError

_MASK64 = (1 << 64) - 1
MC_CHUNK = 8192


def tangent_bases(thetas: np.ndarray) -> np.ndarray:
    """Orthonormal bases of ``theta^perp`` for each row, shape ``(N, n-1, n)``.

    Uses the sign-stable Householder reflector keyed on the last non-zero
    coordinate, so ``theta`` and ``-theta`` get bit-identical bases.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n = thetas.shape[1]
    idx = np.arange(thetas.shape[0])
    nz = thetas != 0.0
    last = np.where(nz.any(axis=1), n - 1 - np.argmax(nz[:, ::-1], axis=1), n - 1)
    s = np.sign(thetas[idx, last])
    s[s == 0] = 1.0
    v = thetas * s[:, None]
    v[:, n - 1] += 1.0
    # H = I - 2 v v^T / |v|^2 with v = s*theta + e_n maps e_n to -s*theta
    coef = 2.0 / np.einsum("ij,ij->i", v, v)
    h = np.eye(n)[None, :, :] - coef[:, None, None] * v[:, :, None] * v[:, None, :]
    return np.transpose(h[:, :, : n - 1], (0, 2, 1))


def keyed_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, int(stream) & _MASK64]))


@lru_cache(maxsize=32)
def _mc_directions_cached(m: int, count: int, seed: int) -> np.ndarray:
    out = _mc_directions(m, count, seed)
    out.setflags(write=False)
    return out


def mc_directions(m: int, count: int, seed: int) -> np.ndarray:
    """Uniform directions on ``S^(m-1)`` (read-only, cached); see ``_mc_directions``."""
    return _mc_directions_cached(int(m), int(count), int(seed))


def _mc_directions(m: int, count: int, seed: int) -> np.ndarray:
    """Uniform directions on ``S^(m-1)``; block ``i // MC_CHUNK`` has its own key,
    so direction ``i`` depends only on ``(seed, i)``."""
    out = np.empty((count, m))
    for block, lo in enumerate(range(0, count, MC_CHUNK)):
        hi = min(lo + MC_CHUNK, count)
        z = keyed_generator(seed, block).standard_normal((hi - lo, m))
        out[lo:hi] = z / np.linalg.norm(z, axis=1, keepdims=True)
    return out


@lru_cache(maxsize=None)
def gauss_legendre01(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on ``(0, 1)`` with weights summing to one."""
    x, w = np.polynomial.legendre.leggauss(int(k))
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def simplex_rule(d: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed-coordinate Gauss-Legendre rule on the standard ``d``-simplex.

    Returns barycentric points ``(P, d+1)`` and weights summing to ``1/d!``.
    """
    x, w = gauss_legendre01(q)
    if d == 0:
        return np.ones((1, 1)), np.ones(1)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    wprod = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    lam = np.empty((u.shape[0], d + 1))
    rest = np.ones(u.shape[0])
    for k in range(d):
        lam[:, k] = rest * u[:, k]
        rest = rest * (1.0 - u[:, k])
    lam[:, d] = rest
    # Jacobian of the collapsed map: prod_k (1 - u_k)^(d - 1 - k)
    jac = np.ones(u.shape[0])
    for k in range(d - 1):
        jac *= (1.0 - u[:, k]) ** (d - 1 - k)
    return lam, wprod * jac


def orthant_cones(m: int) -> np.ndarray:
    """The ``2^m`` coordinate orthants as simplicial cones, shape ``(2^m, m, m)``."""
    return np.array([np.diag(s) for s in itertools.product((1.0, -1.0), repeat=m)])


def canonical_normals(normals: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Unit normals with a fixed sign, duplicates and near-zero rows removed."""
    if normals.size == 0:
        return normals.reshape(0, normals.shape[-1] if normals.ndim == 2 else 0)
    nrm = np.linalg.norm(normals, axis=1)
    keep = nrm > tol
    a = normals[keep] / nrm[keep, None]
    if a.shape[0] == 0:
        return a
    first = np.argmax(np.abs(a) > 1e-9, axis=1)
    sgn = np.sign(a[np.arange(a.shape[0]), first])
    a = a * sgn[:, None]
    key = np.round(a, 10)
    _, idx = np.unique(key, axis=0, return_index=True)
    return a[np.sort(idx)]


def _triangulate_cone(gens: np.ndarray) -> list[np.ndarray]:
    # a cut generator can coincide with an existing one; Qhull mishandles repeats
    _, idx = np.unique(np.round(gens, 12), axis=0, return_index=True)
    gens = gens[np.sort(idx)]
    k, m = gens.shape
    if k < m:
        return []
    if k == m:
        return [gens]
    c = gens.sum(axis=0)
    c /= np.linalg.norm(c)
    basis = tangent_bases(c)[0]
    chart = (gens @ basis.T) / (gens @ c)[:, None]
    try:
        tri = Delaunay(chart)
    except QhullError:
        return []
    return [gens[s] for s in tri.simplices if s.max() < k]


def _split_cone(cone: np.ndarray, d: np.ndarray, tol: float) -> list[np.ndarray]:
    pos = np.flatnonzero(d > tol)
    neg = np.flatnonzero(d < -tol)
    zero = np.flatnonzero(np.abs(d) <= tol)
    cut = []
    for i in pos:
        for j in neg:
            w = d[i] * cone[j] - d[j] * cone[i]
            cut.append(w / np.linalg.norm(w))
    cut = np.array(cut)
    pieces = []
    for side in (pos, neg):
        gens = np.vstack([cone[side], cone[zero], cut])
        pieces.extend(_triangulate_cone(gens))
    return pieces


def cone_partition(m: int, normals: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Simplicial cones covering ``R^m``, none crossing any hyperplane ``a.x = 0``.

    Starts from the orthants and splits each cone crossed by a hyperplane.
    Rows of each ``(m, m)`` block are unit generators.
    """
    cones = orthant_cones(m)
    for a in normals:
        d = cones @ a
        crossing = (d > tol).any(axis=1) & (d < -tol).any(axis=1)
        if not crossing.any():
            continue
        new = [cones[~crossing]]
        for cone, dc in zip(cones[crossing], d[crossing]):
            pieces = _split_cone(cone, dc, tol)
            if pieces:
                new.append(np.array(pieces))
        cones = np.concatenate(new)
    return cones


def cone_rule(cones: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions and weights integrating over the sphere pieces cut out by ``cones``.

    For a cone with generators ``V`` the spherical integral is
    ``|det V| * int_simplex F(x/|x|) |x|^-m`` over ``x = sum lam_i v_i``.
    """
    m = cones.shape[1]
    lam, w = simplex_rule(m - 1, q)
    x = np.einsum("pk,ckm->cpm", lam, cones)
    r = np.linalg.norm(x, axis=2)
    dets = np.abs(np.linalg.det(cones))
    wt = w[None, :] * dets[:, None] / r**m
    dirs = x / r[:, :, None]
    keep = dets > 1e-300
    return dirs[keep].reshape(-1, m), wt[keep].reshape(-1)


_RULE_CACHE: dict = {}
_RULE_CACHE_MAX = 256


@lru_cache(maxsize=None)
def base_refinement(m: int) -> np.ndarray:
    """Planes ``x_i = +-x_j``; cutting by them gives ``2^m m!`` congruent cells."""
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            for s in (1.0, -1.0):
                a = np.zeros(m)
                a[i], a[j] = 1.0, s
                out.append(a)
    return np.array(out).reshape(-1, m)


@lru_cache(maxsize=None)
def _plain_rule(m: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    return cone_rule(cone_partition(m, base_refinement(m)), q)


def sphere_rule(m: int, normals: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic rule on ``S^(m-1)`` aligned with the given kink hyperplanes.

    The returned weights integrate ``F`` against surface measure; ``F`` is
    expected to be smooth inside every cell of the hyperplane arrangement.
    """
    if m == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    normals = np.asarray(normals, dtype=float).reshape(-1, m)
    if normals.shape[0] == 0:
        return _plain_rule(m, int(q))
    normals = canonical_normals(np.vstack([base_refinement(m), normals]))
    key = (m, int(q), np.round(normals, 12).tobytes())
    hit = _RULE_CACHE.get(key)
    if hit is not None:
        return hit
    rule = cone_rule(cone_partition(m, normals), q)
    if len(_RULE_CACHE) >= _RULE_CACHE_MAX:
        _RULE_CACHE.pop(next(iter(_RULE_CACHE)))
    _RULE_CACHE[key] = rule
    return rule
