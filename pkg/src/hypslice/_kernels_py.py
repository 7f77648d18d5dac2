"""Numpy implementations of the hot kernels.

Same call signatures as the compiled ``_kernels`` extension; used when the
extension is not built or ``HYPSLICE_PURE_PYTHON=1`` is set.
"""
import numpy as np

LEBESGUE = 0
GAUSSIAN = 1
EXP_L1 = 2
RADIAL_POWER = 3
BUMP = 4

_CHUNK = 32768


def lp_gauge(y, p, inv_w):
    """Weighted l_p gauge of each row of ``y``: ``(sum |y_i * inv_w_i|**p)**(1/p)``."""
    a = np.abs(np.asarray(y, dtype=float)) * np.asarray(inv_w, dtype=float)
    if p == 1.0:
        return a.sum(axis=-1)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=-1))
    mx = a.max(axis=-1)
    if np.isinf(p):
        return mx
    out = np.zeros_like(mx)
    pos = mx > 0.0
    scaled = a[pos] / mx[pos, None]
    out[pos] = mx[pos] * np.power(np.power(scaled, p).sum(axis=-1), 1.0 / p)
    return out


def radial_moments(rho, snorm, m, kind, a, b, nodes, weights):
    """Per-direction integral of ``r**(m-1) * h(r * snorm)`` over ``[0, rho]``.

    ``nodes``/``weights`` are a Gauss-Legendre rule on ``[0, 1]`` (weights sum
    to one). ``h`` is the radial profile selected by ``kind``; ``a`` and ``b``
    are its parameters (see ``measures``).
    """
    rho = np.asarray(rho, dtype=float)
    if kind == LEBESGUE:
        return rho**m / m
    snorm = np.asarray(snorm, dtype=float)
    out = np.empty_like(rho)
    for lo in range(0, rho.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, rho.shape[0])
        rmax = rho[lo:hi].copy()
        s = snorm[lo:hi]
        if kind == BUMP:
            with np.errstate(divide="ignore"):
                reach = np.where(s > 0.0, a / s, np.inf)
            rmax = np.minimum(rmax, reach)
        r = rmax[:, None] * nodes[None, :]
        u = r * s[:, None]
        if kind == GAUSSIAN:
            h = a * np.exp(-b * u * u)
        elif kind == EXP_L1:
            h = np.exp(-u)
        elif kind == RADIAL_POWER:
            h = np.power(u, a)
        elif kind == BUMP:
            q = u / a
            q = q * q
            h = np.zeros_like(q)
            inside = q < 1.0
            h[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        else:
            raise ValueError(f"unknown radial profile {kind}")
        if m > 1:
            h = h * r ** (m - 1)
        out[lo:hi] = rmax * (h @ weights)
    return out
