"""Contraction and curvature bounds for pooled group orbits, checked numerically.

Each check returns a :class:`VerificationReport` whose ``passed`` flag is
``lhs <= rhs * (1 + epsilon) + abs_floor``.  ``epsilon`` is the sum of
measured slack components:

* ``quadrature``    -- change of the LHS when all node counts are doubled
* ``interpolation`` -- change of the LHS when bicubic resampling is replaced
  by bilinear (plus the gradient-stencil change where derivatives enter)
* ``monte_carlo``   -- three standard errors of the RHS where it is estimated

all expressed relative to the RHS.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateBasisError, InvalidArgumentError, UnsupportedMethodError
from .groups import GroupElement, GroupId, LieAlgebraElement, bracket, exponential, jacobian_sup
from .haar import MonteCarloSpec, PoolingRegion, measure, symdiff_measure, symdiff_rate
from .images import ImageGrid, act, inner, norm2
from .pooling import QuadratureSpec, pool, pooled_generator_field, quadrature_nodes

__all__ = [
    "VerificationReport",
    "CurvatureEstimate",
    "pooling_lambda",
    "theorem1_check",
    "bracket_field",
    "theorem2_check",
    "sectional_curvature",
    "contraction_profile",
    "ProfileRow",
    "lemma_discrepancy",
    "BRACKET_SIGN_CONVENTION",
    "orthonormal_gaussian",
    "se2_small_angle_curvature_bound",
]

BRACKET_SIGN_CONVENTION = "[X~xi, X~xi'] at pool(f) = -pool(X_[xi,xi'] f)"
THEOREM1_FLOOR = 1e-12
THEOREM2_FLOOR = 1e-10


def _json_float(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _from_json_float(x):
    return float(x)


@dataclass
class VerificationReport:
    experiment: str
    measured_lhs: float
    analytic_rhs: float
    epsilon_components: dict
    abs_floor: float = 0.0
    provenance: dict = field(default_factory=dict)
    ratio: float = field(init=False)
    epsilon: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.measured_lhs = float(self.measured_lhs)
        self.analytic_rhs = float(self.analytic_rhs)
        self.epsilon_components = {k: float(v) for k, v in self.epsilon_components.items()}
        self.epsilon = float(sum(self.epsilon_components.values()))
        self.ratio = self.compute_ratio(self.measured_lhs, self.analytic_rhs)
        self.passed = self.recompute_pass()

    @staticmethod
    def compute_ratio(lhs, rhs):
        if rhs > 0:
            return lhs / rhs
        return math.inf if lhs > 0 else 0.0

    def recompute_pass(self) -> bool:
        return bool(self.measured_lhs <= self.analytic_rhs * (1.0 + self.epsilon) + self.abs_floor)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "measured_lhs": self.measured_lhs,
            "analytic_rhs": self.analytic_rhs,
            "ratio": _json_float(self.ratio),
            "epsilon": self.epsilon,
            "epsilon_components": dict(self.epsilon_components),
            "abs_floor": self.abs_floor,
            "pass": self.passed,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        rep = cls(
            d["experiment"],
            d["measured_lhs"],
            d["analytic_rhs"],
            d["epsilon_components"],
            d.get("abs_floor", 0.0),
            d.get("provenance", {}),
        )
        stored = d.get("pass")
        if stored is not None and bool(stored) != rep.passed:
            raise InvalidArgumentError(f"report {d['experiment']!r}: stored pass flag disagrees with its fields")
        if _from_json_float(d.get("ratio", rep.ratio)) != rep.ratio and not (
            math.isnan(rep.ratio)
        ):
            raise InvalidArgumentError(f"report {d['experiment']!r}: stored ratio disagrees with its fields")
        return rep

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls.from_dict(json.loads(text))


@dataclass
class CurvatureEstimate:
    kappa_hat: float
    bound: float
    gram: np.ndarray
    bracket_norm: float
    rate: float
    f_norm: float

    @property
    def gram_det(self) -> float:
        return float(np.linalg.det(self.gram))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gram"] = [[float(x) for x in row] for row in np.asarray(self.gram)]
        d["gram_det"] = self.gram_det
        return d


def _grid_provenance(f: ImageGrid) -> dict:
    return {"half_width": f.half_width, "n": f.n}


def pooling_lambda(region: PoolingRegion, quad: QuadratureSpec) -> float:
    """``sup |J_g|`` over the pooling nodes (1 for every supported group)."""
    return max(jacobian_sup(g) for g in quadrature_nodes(region, quad))


def _rel(delta, rhs):
    if rhs > 0:
        return abs(delta) / rhs
    return 0.0


def theorem1_check(
    f: ImageGrid,
    g: GroupElement,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    mc: MonteCarloSpec | None = None,
    interp: str = "bicubic",
    experiment: str = "theorem1",
    extra: dict | None = None,
) -> VerificationReport:
    """Compare ``||pool(L_g f) - pool(f)||`` with the symmetric-difference bound."""
    quad = quad or QuadratureSpec()
    mc = mc or MonteCarloSpec()

    def lhs_at(q, ip):
        return norm2(pool(f, region, q, ip, pre=g) - pool(f, region, q, ip))

    lhs = lhs_at(quad, interp)
    lam = pooling_lambda(region, quad)
    jg = jacobian_sup(g)
    if region.group is GroupId.TRANSLATIONS:
        sd = symdiff_measure(region, g, "exact")
        sd_method = "exact"
    else:
        sd = symdiff_measure(region, g, "monte_carlo", mc)
        sd_method = "monte_carlo"
    mu = measure(region)
    fn = norm2(f)
    rhs = math.sqrt(lam) * max(1.0, math.sqrt(jg)) * sd.value / mu * fn
    if rhs > 0:
        eps = {
            "quadrature": _rel(lhs_at(quad.refined(2), interp) - lhs, rhs),
            "interpolation": _rel(lhs_at(quad, "bilinear") - lhs, rhs),
            "monte_carlo": 3.0 * sd.std_error / sd.value if sd.value > 0 else 0.0,
        }
    else:
        eps = {"quadrature": 0.0, "interpolation": 0.0, "monte_carlo": 0.0}
    prov = {
        "grid": _grid_provenance(f),
        "quadrature": quad.to_dict(),
        "interp": interp,
        "region": region.to_dict(),
        "group_element": g.to_dict(),
        "monte_carlo": mc.to_dict() if sd_method == "monte_carlo" else None,
        "symdiff_method": sd_method,
        "symdiff": sd.value,
        "symdiff_std_error": sd.std_error,
        "region_measure": mu,
        "lambda": lam,
        "jacobian_sup_g": jg,
        "f_norm": fn,
    }
    if extra:
        prov.update(extra)
    return VerificationReport(experiment, lhs, rhs, eps, THEOREM1_FLOOR * fn, prov)


def bracket_field(
    xi: LieAlgebraElement,
    xi2: LieAlgebraElement,
    f: ImageGrid,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    interp: str = "bicubic",
    accuracy: int = 2,
) -> ImageGrid:
    """``[X~xi, X~xi']`` at ``pool(f)``, i.e. ``-pool(X_[xi,xi'] f)``."""
    return -pooled_generator_field(bracket(xi, xi2), f, region, quad, interp, accuracy)


def _rate(region, b, mc):
    try:
        return symdiff_rate(region, b, "closed_form")
    except UnsupportedMethodError:
        return symdiff_rate(region, b, "slope_fit", mc)


def theorem2_check(
    f: ImageGrid,
    xi: LieAlgebraElement,
    xi2: LieAlgebraElement,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    mc: MonteCarloSpec | None = None,
    interp: str = "bicubic",
    experiment: str = "theorem2",
    extra: dict | None = None,
) -> VerificationReport:
    """Compare ``||[X~xi, X~xi']||^2`` with ``lambda * rate^2 * ||f||^2``."""
    quad = quad or QuadratureSpec()
    mc = mc or MonteCarloSpec()
    b = bracket(xi, xi2)

    def lhs_at(q, ip, acc=2):
        return norm2(bracket_field(xi, xi2, f, region, q, ip, acc)) ** 2

    lhs = lhs_at(quad, interp)
    lam = pooling_lambda(region, quad)
    rate = _rate(region, b, mc)
    fn = norm2(f)
    rhs = lam * rate.value**2 * fn**2
    if rhs > 0:
        eps = {
            "quadrature": _rel(lhs_at(quad.refined(2), interp) - lhs, rhs),
            "interpolation": _rel(lhs_at(quad, "bilinear") - lhs, rhs)
            + _rel(lhs_at(quad, interp, 4) - lhs, rhs),
            "monte_carlo": 6.0 * rate.std_error / rate.value if rate.value > 0 else 0.0,
        }
    else:
        eps = {"quadrature": 0.0, "interpolation": 0.0, "monte_carlo": 0.0}
    prov = {
        "grid": _grid_provenance(f),
        "quadrature": quad.to_dict(),
        "interp": interp,
        "region": region.to_dict(),
        "xi": xi.to_dict(),
        "xi2": xi2.to_dict(),
        "bracket": b.to_dict(),
        "bracket_sign_convention": BRACKET_SIGN_CONVENTION,
        "rate": rate.value,
        "rate_method": rate.method,
        "rate_std_error": rate.std_error,
        "monte_carlo": mc.to_dict() if rate.method == "slope_fit" else None,
        "lambda": lam,
        "f_norm": fn,
    }
    if extra:
        prov.update(extra)
    return VerificationReport(experiment, lhs, rhs, eps, THEOREM2_FLOOR * fn**2, prov)


def sectional_curvature(
    f: ImageGrid,
    xi: LieAlgebraElement,
    xi2: LieAlgebraElement,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    mc: MonteCarloSpec | None = None,
    interp: str = "bicubic",
) -> CurvatureEstimate:
    """Sectional curvature of the pooled orbit on the plane of ``X~xi, X~xi'``.

    For a bi-invariant metric ``R(X, Y, Y, X) = |[X, Y]|^2 / 4``; dividing by
    the Gram determinant normalizes to an orthonormal basis of the same plane.
    The bound follows from the bracket bound, normalized the same way.
    """
    quad = quad or QuadratureSpec()
    if abs(pooling_lambda(region, quad) - 1.0) > 1e-12:
        raise InvalidArgumentError("curvature bound needs an area-preserving group (|J_g| = 1)")
    f1 = pooled_generator_field(xi, f, region, quad, interp)
    f2 = pooled_generator_field(xi2, f, region, quad, interp)
    gram = np.array([[inner(f1, f1), inner(f1, f2)], [inner(f2, f1), inner(f2, f2)]])
    det = float(gram[0, 0] * gram[1, 1] - gram[0, 1] * gram[1, 0])
    if not det > 1e-10 * gram[0, 0] * gram[1, 1]:
        raise DegenerateBasisError(
            f"pooled fields are linearly dependent (Gram determinant {det:.3g})"
        )
    bf = bracket_field(xi, xi2, f, region, quad, interp)
    bnorm = norm2(bf)
    rate = _rate(region, bracket(xi, xi2), mc or MonteCarloSpec()).value
    fn = norm2(f)
    kappa = 0.25 * bnorm**2 / det
    bound = (0.5 * rate) ** 2 * fn**2 / det
    return CurvatureEstimate(kappa, bound, gram, bnorm, rate, fn)


@dataclass
class ProfileRow:
    a: float
    t: float
    raw: float
    pooled: float
    ratio: float
    theorem1_rhs: float
    report: VerificationReport

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "t": self.t,
            "raw": self.raw,
            "pooled": self.pooled,
            "ratio": self.ratio,
            "theorem1_rhs": self.theorem1_rhs,
            "epsilon": self.report.epsilon,
            "pass": self.report.passed,
        }


def contraction_profile(
    f: ImageGrid,
    a_values,
    xi: LieAlgebraElement,
    t_values,
    quad: QuadratureSpec | None = None,
    mc: MonteCarloSpec | None = None,
    theta: float | None = None,
    interp: str = "bicubic",
) -> list[ProfileRow]:
    """Raw versus pooled displacement along ``exp(t xi)`` for a family of regions.

    Regions are ``[0, a]^2`` translation boxes, or ``[-theta, theta] x [0, a]^2``
    in SE(2) when ``theta`` is given.  ``ratio`` is ``pooled / raw`` (1 when
    both vanish); each row carries the Theorem-1 report for its ``(a, t)``.
    """
    rows = []
    for a in a_values:
        if theta is None:
            region = PoolingRegion.translation_box(a)
        else:
            region = PoolingRegion.se2_box(theta, a)
        if xi.group is not region.group:
            raise InvalidArgumentError("generator group does not match the region family")
        for t in t_values:
            g = exponential(xi, t)
            raw = norm2(act(g, f, interp) - f)
            rep = theorem1_check(
                f, g, region, quad, mc, interp,
                experiment="contraction_profile",
                extra={"a": float(a), "t": float(t)},
            )
            pooled = rep.measured_lhs
            ratio = 1.0 if raw == 0.0 else pooled / raw
            rows.append(ProfileRow(float(a), float(t), raw, pooled, ratio, rep.analytic_rhs, rep))
    return rows


def lemma_discrepancy(
    f: ImageGrid,
    xi: LieAlgebraElement,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    t: float = 1e-3,
    interp: str = "bicubic",
) -> float:
    """Relative gap between ``(pool(L_exp(t xi) f) - pool(f)) / t`` and ``pool(X_xi f)``."""
    g = exponential(xi, t)
    fd = (pool(f, region, quad, interp, pre=g) - pool(f, region, quad, interp)) * (1.0 / t)
    rhs = pooled_generator_field(xi, f, region, quad, interp)
    denom = norm2(rhs)
    if denom == 0.0:
        return norm2(fd)
    return norm2(fd - rhs) / denom


def orthonormal_gaussian(
    xi: LieAlgebraElement,
    xi2: LieAlgebraElement,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    half_width: float = 6.0,
    n: int = 512,
    start=(0.6, 1.0, 0.0),
    interp: str = "bicubic",
):
    """Find a unit-norm isotropic Gaussian whose pooled fields are orthonormal.

    Solves for ``(sigma, cx, cy)`` so that the Gram matrix of
    ``(X~xi, X~xi')`` at ``pool(f)`` is the identity, with ``f`` rescaled to
    ``||f|| = 1``.  Returns ``(spec, f, gram)``.
    """
    from scipy.optimize import least_squares

    from .images import ImageSpec, synthesize

    def build(p):
        sigma, cx, cy = (float(v) for v in p)
        spec = ImageSpec(kind="gaussian", sigma=sigma, center=(cx, cy), margin=0.0)
        f0 = synthesize(spec, half_width, n)
        amp = 1.0 / norm2(f0)
        spec = ImageSpec(kind="gaussian", sigma=sigma, center=(cx, cy), amplitude=amp, margin=0.0)
        return spec, synthesize(spec, half_width, n)

    def gram_of(f):
        f1 = pooled_generator_field(xi, f, region, quad, interp)
        f2 = pooled_generator_field(xi2, f, region, quad, interp)
        return np.array([[inner(f1, f1), inner(f1, f2)], [inner(f2, f1), inner(f2, f2)]])

    def resid(p):
        g = gram_of(build(p)[1])
        return [g[0, 0] - 1.0, g[1, 1] - 1.0, g[0, 1]]

    sol = least_squares(resid, np.asarray(start, dtype=float), x_scale=0.1, xtol=1e-12, ftol=1e-12, gtol=1e-12)
    spec, f = build(sol.x)
    return spec, f, gram_of(f)


def se2_small_angle_curvature_bound(xi: LieAlgebraElement, xi2: LieAlgebraElement, a: float) -> float:
    """``(zeta (x' - y') - zeta' (x - y))^2 / a^2`` for SE(2) generators and side ``a``.

    The small-angle form of the curvature bound for ``[-theta, theta] x [0, a]^2``;
    :func:`sectional_curvature` reports the exact-rate bound, which tends to
    this value as ``theta -> 0``.
    """
    if xi.group is not GroupId.SE2 or xi2.group is not GroupId.SE2:
        raise InvalidArgumentError("the small-angle bound is stated for SE(2) generators")
    return (xi.zeta * (xi2.vx - xi2.vy) - xi2.zeta * (xi.vx - xi.vy)) ** 2 / a**2
