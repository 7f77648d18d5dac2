"""Volumes of Euclidean balls and the slicing constants built from them."""
import math

from .errors import UsageError


def log_ball_volume(n: int) -> float:
    if n < 0:
        raise UsageError("ball dimension must be >= 0")
    return 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)


def ball_volume(n: int) -> float:
    """Volume of the unit Euclidean ball in ``R^n``: ``pi^(n/2) / Gamma(n/2 + 1)``."""
    return math.exp(log_ball_volume(int(n)))


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in ``R^n``."""
    if n < 1:
        raise UsageError("sphere ambient dimension must be >= 1")
    return n * ball_volume(n)


def c_n(n: int) -> float:
    """``|B_2^n|^((n-1)/n) / |B_2^(n-1)|``; strictly below one for every ``n >= 2``."""
    n = int(n)
    if n < 2:
        raise UsageError("c_n is defined for n >= 2")
    return math.exp((n - 1) / n * log_ball_volume(n) - log_ball_volume(n - 1))


def stability_coefficient(n: int) -> float:
    """``n/(n-1) * c_n``, the factor in front of ``|K|^(1/n) * eps``."""
    return n / (n - 1) * c_n(n)


def general_constant(n: int) -> float:
    """``sqrt(n) * n/(n-1) * c_n``: the constant for arbitrary symmetric convex bodies."""
    return math.sqrt(n) * stability_coefficient(n)


def lp_ball_volume(n: int, p: float) -> float:
    """``2^n Gamma(1 + 1/p)^n / Gamma(1 + n/p)``."""
    if math.isinf(p):
        return 2.0**n
    return math.exp(n * math.log(2.0) + n * math.lgamma(1.0 + 1.0 / p) - math.lgamma(1.0 + n / p))


def cross_polytope_volume(n: int) -> float:
    return 2.0**n / math.factorial(n)


def unconditional_proof_constant(n: int, *, corrected: bool = True) -> float:
    """Constant produced by the box-factorization argument in dimension ``n``.

    With ``K = n T(B_1^n)`` and ``T(B_inf^n)`` inside ``L``,
    ``(|K| / |L|)^(1/n) <= n / (n!)^(1/n)``, so the argument gives
    ``n/(n-1) c_n n/(n!)^(1/n)`` (tends to sqrt(e)).  ``corrected=False``
    uses the coarser ``e/2`` volume factor instead (tends to sqrt(e)/2).
    """
    if corrected:
        factor = n / math.exp(math.lgamma(n + 1.0) / n)
    else:
        factor = math.e / 2.0
    return stability_coefficient(n) * factor
