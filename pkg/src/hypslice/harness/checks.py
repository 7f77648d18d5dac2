"""Numerical checks of the slicing inequalities for arbitrary measures.

Every check compares ``lhs`` against ``rhs`` built from a maximal section.
The maximal section is a lower bound, so the computed ``rhs`` underestimates
the true one and a pass holds a fortiori.  A failing check is recomputed
once with four times the quadrature effort before it is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..bodies import StarBody, polar
from ..constants import (
    ball_volume,
    general_constant,
    stability_coefficient,
    unconditional_proof_constant,
)
from ..errors import UsageError
from ..factorization import (
    lozanovskii_box,
    lozanovskii_outer_body,
    verify_sandwich,
    volume_ratio_report,
)
from ..geometry import mc_directions
from ..measures import Density, builtin_density
from ..quadrature import Estimate, QuadScheme, integrate_body
from ..sections import OptConfig, max_section

INEQUALITY_IDS = ("eq2_unconditional", "eq3_general", "prop1_stability", "thm2_dual_vr", "eq1_volume")
SLACK = 1e-3
RERUN_FACTOR = 4


@dataclass
class InequalityReport:
    """One evaluated inequality ``lhs <= rhs``.

    ``rhs_components`` holds every factor of ``rhs`` so that it can be
    recomputed with ``recompute_rhs``; ``extras`` carries report-only data
    that does not enter the pass decision.
    """

    inequality_id: str
    body: str
    density: str
    n: int
    lhs: Estimate
    rhs: float
    rhs_components: dict
    ratio: float
    passed: bool
    error_budget: float
    constant: float
    witnesses: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "body": self.body,
            "density": self.density,
            "n": self.n,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs,
            "rhs_components": dict(self.rhs_components),
            "ratio": self.ratio,
            "pass": self.passed,
            "error_budget": self.error_budget,
            "constant": self.constant,
            "witnesses": _plain(self.witnesses),
            "provenance": _plain(self.provenance),
            "extras": _plain(self.extras),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def recompute_rhs(components: dict) -> float:
    """``rhs`` from its stored factors.

    Stability checks have the additive form ``base + C vol_root eps``; all
    others are products ``C * vr * max_section * vol_root``.
    """
    c = components["constant"]
    if "epsilon" in components:
        return components["base_volume"] + c * components["volume_root"] * components["epsilon"]
    return c * components.get("vr_factor", 1.0) * components["max_section"] * components["volume_root"]


def _finish(inequality_id, body_label, density_label, n, lhs, components, budget, witnesses,
            provenance, extras) -> InequalityReport:
    rhs = recompute_rhs(components)
    ratio = lhs.value / rhs if rhs > 0 else (0.0 if lhs.value <= 0 else math.inf)
    return InequalityReport(inequality_id, body_label, density_label, n, lhs, rhs, components,
                            ratio, ratio <= 1.0 + budget, budget, components["constant"],
                            witnesses, provenance, extras)


def _provenance(s: QuadScheme, cfg: OptConfig, rerun: bool) -> dict:
    return {
        "quad": {k: getattr(s, k) for k in s.__dataclass_fields__},
        "opt": {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
        "seed": s.seed,
        "rerun_at_higher_effort": rerun,
    }


def _with_rerun(run, s: QuadScheme, cfg: OptConfig) -> InequalityReport:
    report = run(s, cfg)
    report.provenance = _provenance(s, cfg, False)
    if not report.passed:
        bigger = s.scaled(RERUN_FACTOR)
        report = run(bigger, cfg)
        report.provenance = _provenance(bigger, cfg, True)
    return report


def _check_pair(body: StarBody, density: Density) -> None:
    if body.dim != density.dim:
        raise UsageError(f"body is {body.dim}-dimensional but density is {density.dim}-dimensional")
    if body.dim < 2:
        raise UsageError("hyperplane sections need n >= 2")
    if not density.is_even:
        raise UsageError(f"density {density.label!r} is not even")


def _slicing_parts(body: StarBody, density: Density, s: QuadScheme, cfg: OptConfig):
    n = body.dim
    lhs = integrate_body(body, density, s)
    ms = max_section(body, density, s, cfg)
    vol = integrate_body(body, builtin_density("lebesgue", n), s)
    budget = lhs.rel_err + ms.value.rel_err + vol.rel_err / n + SLACK
    return lhs, ms, vol, budget


def _slicing_report(inequality_id, body, density, s, cfg, constant) -> InequalityReport:
    lhs, ms, vol, budget = _slicing_parts(body, density, s, cfg)
    components = {
        "constant": constant,
        "max_section": ms.value.value,
        "volume_root": vol.value ** (1.0 / body.dim),
        "volume": vol.value,
    }
    extras = {"empirical_constant": lhs.value / (ms.value.value * components["volume_root"])}
    return _finish(inequality_id, body.label, density.label, body.dim, lhs, components, budget,
                   {"xi_star": ms.xi_star, "max_section": ms.to_dict()}, {}, extras)


def check_hyperplane_unconditional(body: StarBody, density: Density, s: Optional[QuadScheme] = None,
                                   opt_cfg: Optional[OptConfig] = None) -> InequalityReport:
    """``mu(L) <= e * max_xi mu(L cap xi^perp) * |L|^(1/n)`` for unconditional convex ``L``.

    Extras record the sharper bound from the box factorization: with
    ``K = n T(B_1^n)``, ``mu(L) <= n/(n-1) c_n |K|^(1/n) max_xi mu(L cap xi^perp)``.
    """
    _check_pair(body, density)
    if not (body.is_convex and body.is_unconditional):
        raise UsageError(f"{body.label} must be flagged convex and unconditional")
    n = body.dim

    def run(sc, cfg):
        rep = _slicing_report("eq2_unconditional", body, density, sc, cfg, math.e)
        t = lozanovskii_box(body)
        k_volume = float(np.exp(n * math.log(2.0 * n) + np.log(t.diag).sum() - math.lgamma(n + 1.0)))
        ms = rep.rhs_components["max_section"]
        proof_rhs = stability_coefficient(n) * k_volume ** (1.0 / n) * ms
        rep.witnesses["t"] = t.diag
        rep.extras.update({
            "outer_body_volume": k_volume,
            "proof_bound": proof_rhs,
            "proof_bound_ratio": rep.lhs.value / proof_rhs,
            "proof_constant_measured": stability_coefficient(n) * (k_volume / rep.rhs_components["volume"]) ** (1.0 / n),
            "proof_constant_corrected": unconditional_proof_constant(n, corrected=True),
            "proof_constant_coarse": unconditional_proof_constant(n, corrected=False),
            "half_sqrt_e": 0.5 * math.sqrt(math.e),
        })
        return rep

    return _with_rerun(run, s or QuadScheme(), opt_cfg or OptConfig())


def check_hyperplane_general(body: StarBody, density: Density, s: Optional[QuadScheme] = None,
                             opt_cfg: Optional[OptConfig] = None) -> InequalityReport:
    """``mu(K) <= sqrt(n) n/(n-1) c_n max_xi mu(K cap xi^perp) |K|^(1/n)`` for convex ``K``."""
    _check_pair(body, density)
    if not body.is_convex:
        raise UsageError(f"{body.label} must be flagged convex")
    constant = general_constant(body.dim)
    return _with_rerun(lambda sc, cfg: _slicing_report("eq3_general", body, density, sc, cfg, constant),
                       s or QuadScheme(), opt_cfg or OptConfig())


def check_hyperplane_volume(body: StarBody, s: Optional[QuadScheme] = None,
                            opt_cfg: Optional[OptConfig] = None) -> InequalityReport:
    """Volume form: ``|K| <= C max_xi |K cap xi^perp| |K|^(1/n)``.

    ``C`` is ``e`` for unconditional bodies and the general constant
    otherwise; no other constant for the volume case is used.
    """
    density = builtin_density("lebesgue", body.dim)
    _check_pair(body, density)
    if not body.is_convex:
        raise UsageError(f"{body.label} must be flagged convex")
    constant = math.e if body.is_unconditional else general_constant(body.dim)
    return _with_rerun(lambda sc, cfg: _slicing_report("eq1_volume", body, density, sc, cfg, constant),
                       s or QuadScheme(), opt_cfg or OptConfig())


@dataclass
class StabilitySpec:
    """Input of the stability check.

    ``direct``: ``density`` is ``f`` itself (``f >= 1`` on ``base_body``).
    ``composite``: ``f = chi_K + g chi_L`` with ``g = density`` and
    ``L = inner_body`` contained in ``K = base_body``.
    """

    base_body: StarBody
    mode: str
    density: Density
    inner_body: Optional[StarBody] = None
    samples: int = 2000
    seed: int = 0

    def validate(self) -> None:
        k = self.base_body
        if not k.is_intersection_body:
            raise UsageError(f"{k.label} is not flagged as an intersection body")
        if self.mode not in ("direct", "composite"):
            raise UsageError("stability mode must be 'direct' or 'composite'")
        if self.density.dim != k.dim:
            raise UsageError("density and body dimensions differ")
        if not self.density.is_even:
            raise UsageError(f"density {self.density.label!r} is not even")
        dirs = mc_directions(k.dim, self.samples, self.seed ^ 0x57AB)
        if self.mode == "composite":
            if self.inner_body is None or self.inner_body.dim != k.dim:
                raise UsageError("composite mode needs an inner body of the same dimension")
            # L inside K  <=>  ||x||_K <= ||x||_L
            if np.any(k.gauge(dirs) > self.inner_body.gauge(dirs) * (1.0 + 1e-9)):
                raise UsageError(f"{self.inner_body.label} is not contained in {k.label}")
        else:
            if self.density.is_lebesgue:
                return
            radii = np.linspace(0.0, 1.0, 9)[:, None, None]
            pts = (radii * (dirs * k.radial_unchecked(dirs)[:, None])[None]).reshape(-1, k.dim)
            if np.any(self.density(pts) < 1.0 - 1e-12):
                raise UsageError(f"density {self.density.label!r} drops below 1 on {k.label}")


def _excess(f: Density) -> Optional[Density]:
    """``f - 1`` without losing fast paths; ``None`` when it is identically zero."""
    if f.is_lebesgue:
        return None
    if f.params.get("offset") == 1.0 and isinstance(f.params.get("base"), Density):
        return f.params["base"]
    from ..measures import shifted_density

    return shifted_density(f, -1.0, label=f"{f.label}-1")


def check_stability(spec: StabilitySpec, s: Optional[QuadScheme] = None,
                    opt_cfg: Optional[OptConfig] = None) -> InequalityReport:
    """``int_K f <= |K| + n/(n-1) c_n |K|^(1/n) eps`` with
    ``eps = max_xi (int_{K cap xi^perp} f - |K cap xi^perp|)``.

    In composite mode both integrals are split exactly:
    ``int_K f = |K| + int_L g`` and ``eps = max_xi int_{L cap xi^perp} g``.
    """
    spec.validate()
    k = spec.base_body
    n = k.dim
    coef = stability_coefficient(n)
    leb = builtin_density("lebesgue", n)

    def run(sc, cfg):
        vol = integrate_body(k, leb, sc)
        witnesses = {}
        if spec.mode == "composite":
            extra = integrate_body(spec.inner_body, spec.density, sc)
            ms = max_section(spec.inner_body, spec.density, sc, cfg)
            eps, eps_rel = ms.value.value, ms.value.rel_err
            witnesses["xi_star"] = ms.xi_star
        else:
            g = _excess(spec.density)
            if g is None:
                extra = Estimate(0.0, 0.0, "exact")
                eps, eps_rel = 0.0, 0.0
            else:
                extra = integrate_body(k, g, sc)
                ms = max_section(k, g, sc, cfg)
                eps, eps_rel = ms.value.value, ms.value.rel_err
                witnesses["xi_star"] = ms.xi_star
        total = vol.value + extra.value
        lhs = Estimate(total, vol.err + extra.err, vol.method, vol.n_evals + extra.n_evals)
        components = {
            "constant": coef,
            "base_volume": vol.value,
            "volume_root": vol.value ** (1.0 / n),
            "epsilon": eps,
        }
        budget = lhs.rel_err + vol.rel_err + eps_rel + SLACK
        extras = {"excess_integral": extra.value, "mode": spec.mode}
        label = k.label if spec.inner_body is None else f"{spec.inner_body.label} in {k.label}"
        return _finish("prop1_stability", label, spec.density.label, n, lhs, components, budget,
                       witnesses, {}, extras)

    return _with_rerun(run, s or QuadScheme(), opt_cfg or OptConfig())


def composite_stability_spec(inner: StarBody, g: Density, seed: int = 0) -> StabilitySpec:
    """Stability input built from the box factorization of ``inner``: ``K = n T(B_1^n)``."""
    t = lozanovskii_box(inner)
    return StabilitySpec(lozanovskii_outer_body(t), "composite", g, inner, seed=seed)


def check_dual_vr(body: StarBody, density: Density, s: Optional[QuadScheme] = None,
                  opt_cfg: Optional[OptConfig] = None) -> InequalityReport:
    """``mu(L) <= C vr(L°) max_xi mu(L cap xi^perp) |L|^(1/n)`` gated at ``C = e``.

    ``vr(L°)`` is replaced by the upper bound from an inscribed diagonal
    ellipsoid, which again makes the check conservative.  The absolute
    constant is not fixed by the underlying theorem; ``e`` is a policy.
    """
    _check_pair(body, density)
    if not body.is_convex:
        raise UsageError(f"{body.label} must be flagged convex")
    dual = polar(body)
    if not dual.is_unconditional:
        raise UsageError(f"polar of {body.label} is not unconditional; diagonal ellipsoids do not apply")
    n = body.dim
    coef = stability_coefficient(n)

    def run(sc, cfg):
        lhs, ms, vol, budget = _slicing_parts(body, density, sc, cfg)
        vr = volume_ratio_report(dual, sc)
        budget += vr.volume.rel_err / n
        components = {
            "constant": math.e,
            "vr_factor": vr.vr_upper,
            "max_section": ms.value.value,
            "volume_root": vol.value ** (1.0 / n),
            "volume": vol.value,
        }
        # E inside L° gives L inside E°, and |E°| = |B_2^n|^2 / |E|
        e_polar_volume = ball_volume(n) ** 2 / vr.ellipsoid_volume
        proof_rhs = coef * ms.value.value * e_polar_volume ** (1.0 / n)
        c_emp = lhs.value / (vr.vr_upper * ms.value.value * components["volume_root"])
        extras = {
            "empirical_constant": c_emp,
            "proof_bound": proof_rhs,
            "proof_bound_ratio": lhs.value / proof_rhs,
            "mahler_root_times_n": n * vr.mahler.value ** (1.0 / n),
            "santalo_ratio": vr.santalo_ratio,
        }
        witnesses = {"xi_star": ms.xi_star, "semi_axes": vr.semi_axes, "volume_ratio": vr.to_dict()}
        return _finish("thm2_dual_vr", body.label, density.label, n, lhs, components, budget,
                       witnesses, {}, extras)

    return _with_rerun(run, s or QuadScheme(), opt_cfg or OptConfig())


def sandwich_witness(body: StarBody, probes: int = 4096, seed: int = 0):
    """Box factorization of ``body`` together with its containment check."""
    t = lozanovskii_box(body)
    return t, verify_sandwich(body, t, probes, seed)
