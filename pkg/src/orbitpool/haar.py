"""Pooling regions in group-parameter space and their Haar measure.

A region is a coordinate box in canonical parameters ``(linear, tx, ty)``.  For
every supported group the Haar measure is Lebesgue measure in these
coordinates, so region volumes are products of interval lengths.

The quantity that controls pooling contraction is the measure of the
symmetric difference between the region and its right translate ``G0 g``.
It is available in closed form for translation boxes and by Monte Carlo for
every group.  Monte Carlo draws come from a counter-based generator keyed by
``(seed, batch index)`` so estimates do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, UnsupportedMethodError
from .groups import GroupElement, GroupId, LieAlgebraElement, exponential

__all__ = [
    "PoolingRegion",
    "MonteCarloSpec",
    "Estimate",
    "RateEstimate",
    "measure",
    "contains",
    "symdiff_measure",
    "symdiff_rate",
    "right_translate_measure",
]

TWO_PI = 2.0 * math.pi
MIN_MC_SAMPLES = 10_000


def _interval(iv, name):
    if iv is None:
        return None
    lo, hi = (float(x) for x in iv)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise InvalidArgumentError(f"{name} must satisfy lo <= hi, got {iv}")
    return (lo, hi)


@dataclass(frozen=True)
class PoolingRegion:
    """Compact box ``G0`` around the identity in canonical group coordinates."""

    group: GroupId
    theta_interval: tuple | None = None
    tx_interval: tuple | None = None
    ty_interval: tuple | None = None
    shear_interval: tuple | None = None
    degenerate: bool = field(default=False, repr=False)

    def __post_init__(self):
        group = GroupId(self.group)
        object.__setattr__(self, "group", group)
        for name in ("theta_interval", "tx_interval", "ty_interval", "shear_interval"):
            object.__setattr__(self, name, _interval(getattr(self, name), name))
        need = {
            GroupId.TRANSLATIONS: ("tx_interval", "ty_interval"),
            GroupId.ROTATIONS: ("theta_interval",),
            GroupId.SE2: ("theta_interval", "tx_interval", "ty_interval"),
            GroupId.SHEAR: ("shear_interval", "tx_interval", "ty_interval"),
        }[group]
        for name in ("theta_interval", "tx_interval", "ty_interval", "shear_interval"):
            present = getattr(self, name) is not None
            if present != (name in need):
                state = "requires" if name in need else "does not take"
                raise InvalidArgumentError(f"{group.value} region {state} {name}")
        if self.theta_interval is not None:
            lo, hi = self.theta_interval
            if hi - lo > TWO_PI + 1e-12:
                raise InvalidArgumentError("theta interval longer than a full turn")
        if not self.degenerate and any(hi <= lo for lo, hi in self.intervals()):
            raise InvalidArgumentError(
                "region intervals must have positive length (use PoolingRegion.point)"
            )

    @classmethod
    def point(cls, group: GroupId | str) -> "PoolingRegion":
        """Degenerate region ``{e}``; pooling over it is the identity."""
        group = GroupId(group)
        z = (0.0, 0.0)
        kw = {
            GroupId.TRANSLATIONS: dict(tx_interval=z, ty_interval=z),
            GroupId.ROTATIONS: dict(theta_interval=z),
            GroupId.SE2: dict(theta_interval=z, tx_interval=z, ty_interval=z),
            GroupId.SHEAR: dict(shear_interval=z, tx_interval=z, ty_interval=z),
        }[group]
        return cls(group, degenerate=True, **kw)

    @classmethod
    def translation_box(cls, a: float, ay: float | None = None) -> "PoolingRegion":
        """``[0, a] x [0, ay]`` in the translation group."""
        return cls(GroupId.TRANSLATIONS, tx_interval=(0.0, a), ty_interval=(0.0, a if ay is None else ay))

    @classmethod
    def se2_box(cls, theta: float, a: float) -> "PoolingRegion":
        """``[-theta, theta] x [0, a]^2`` in SE(2)."""
        return cls(GroupId.SE2, (-theta, theta), (0.0, a), (0.0, a))

    @classmethod
    def rotation_arc(cls, lo: float = -math.pi, hi: float = math.pi) -> "PoolingRegion":
        return cls(GroupId.ROTATIONS, theta_interval=(lo, hi))

    @property
    def linear_interval(self):
        return self.shear_interval if self.group is GroupId.SHEAR else self.theta_interval

    def intervals(self) -> list:
        """Intervals of the group's own coordinates, linear part first."""
        out = []
        if self.group.has_linear_part:
            out.append(self.linear_interval)
        if self.group.has_translation:
            out += [self.tx_interval, self.ty_interval]
        return out

    @property
    def full_circle(self) -> bool:
        if self.group not in (GroupId.SE2, GroupId.ROTATIONS):
            return False
        lo, hi = self.theta_interval
        return hi - lo >= TWO_PI - 1e-12

    def to_dict(self) -> dict:
        d = {"group": self.group.value}
        for name in ("theta_interval", "tx_interval", "ty_interval", "shear_interval"):
            iv = getattr(self, name)
            if iv is not None:
                d[name] = list(iv)
        if self.degenerate:
            d["degenerate"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PoolingRegion":
        d = dict(d)
        group = GroupId(d.pop("group"))
        if d.pop("degenerate", False):
            return cls.point(group)
        return cls(group, **{k: tuple(v) for k, v in d.items()})


@dataclass(frozen=True)
class MonteCarloSpec:
    sample_count: int = 1_000_000
    seed: int = 0
    batch: int = 250_000

    def __post_init__(self):
        if int(self.sample_count) < MIN_MC_SAMPLES:
            raise InvalidArgumentError(f"sample_count must be >= {MIN_MC_SAMPLES}")
        if int(self.batch) < 1:
            raise InvalidArgumentError("batch must be positive")

    def batches(self):
        """Yield ``(batch_index, size)`` covering ``sample_count`` samples."""
        total, size = int(self.sample_count), int(self.batch)
        for b, start in enumerate(range(0, total, size)):
            yield b, min(size, total - start)

    def generator(self, batch_index: int) -> np.random.Generator:
        """Stream for one batch: Philox keyed by the seed, counter offset by the batch index."""
        bitgen = np.random.Philox(key=int(self.seed) % 2**64, counter=int(batch_index) << 192)
        return np.random.Generator(bitgen)

    def to_dict(self) -> dict:
        return {"sample_count": int(self.sample_count), "seed": int(self.seed), "batch": int(self.batch)}


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "std_error", float(self.std_error))


@dataclass(frozen=True)
class RateEstimate:
    value: float
    std_error: float = 0.0
    residual: float = 0.0
    method: str = "closed_form"

    def __post_init__(self):
        for name in ("value", "std_error", "residual"):
            object.__setattr__(self, name, float(getattr(self, name)))


def _check_group(region: PoolingRegion, group: GroupId):
    if region.group is not group:
        raise InvalidArgumentError(f"group mismatch: region {region.group.value} vs {group.value}")


def measure(region: PoolingRegion) -> float:
    """Haar volume: product of the coordinate interval lengths."""
    return float(np.prod([hi - lo for lo, hi in region.intervals()]))


# -- vectorized parameter arithmetic ------------------------------------------------


def _rotation_like(group: GroupId) -> bool:
    return group in (GroupId.SE2, GroupId.ROTATIONS)


def _lin_apply(group: GroupId, p, x, y):
    """Apply the linear part with parameter(s) ``p`` to vectors ``(x, y)``."""
    if _rotation_like(group):
        c, s = np.cos(p), np.sin(p)
        return c * x - s * y, s * x + c * y
    if group is GroupId.SHEAR:
        return x + p * y, y + 0.0 * p
    return x + 0.0 * p, y + 0.0 * p


def _contains_arrays(region: PoolingRegion, p, tx, ty) -> np.ndarray:
    ok = np.ones(np.shape(p) if np.ndim(p) else np.shape(tx), dtype=bool)
    group = region.group
    if group.has_linear_part:
        lo, hi = region.linear_interval
        if _rotation_like(group):
            ok &= np.mod(p - lo, TWO_PI) <= hi - lo
        else:
            ok &= (p >= lo) & (p <= hi)
    if group.has_translation:
        (xlo, xhi), (ylo, yhi) = region.tx_interval, region.ty_interval
        ok &= (tx >= xlo) & (tx <= xhi) & (ty >= ylo) & (ty <= yhi)
    return ok


def contains(region: PoolingRegion, g: GroupElement) -> bool:
    """Closed-interval membership; angles compared on the circle."""
    _check_group(region, g.group)
    return bool(_contains_arrays(region, np.float64(g.linear_param), np.float64(g.tx), np.float64(g.ty)))


def _right_inverse_apply(group, p, tx, ty, g: GroupElement):
    """Parameters of ``h g^{-1}`` for sample arrays ``h = (p, tx, ty)``."""
    q = p - g.linear_param
    dx, dy = _lin_apply(group, q, g.tx, g.ty)
    return q, tx - dx, ty - dy


def _translate_extent(group, lin_iv, tvec):
    """Min/max of ``M(p) t`` over ``p`` in ``lin_iv``; returns ``((xmin, xmax), (ymin, ymax))``."""
    tx, ty = tvec
    if lin_iv is None:
        return (tx, tx), (ty, ty)
    lo, hi = lin_iv
    cands = [lo, hi]
    if _rotation_like(group):
        phi = math.atan2(ty, tx)
        # critical angles where a component of R(p) t is extremal
        k0 = math.floor((lo + phi) / (math.pi / 2)) - 1
        for k in range(k0, k0 + 8):
            p = k * math.pi / 2 - phi
            if lo <= p <= hi:
                cands.append(p)
    pc = np.array(cands)
    x, y = _lin_apply(group, pc, tx, ty)
    return (float(np.min(x)), float(np.max(x))), (float(np.min(y)), float(np.max(y)))


def _sampling_box(region: PoolingRegion, gs) -> list:
    """Smallest parameter box containing ``G0`` and every ``G0 g``."""
    group = region.group
    box = []
    if group.has_linear_part:
        lo, hi = region.linear_interval
        plo = min([lo] + [lo + g.linear_param for g in gs])
        phi = max([hi] + [hi + g.linear_param for g in gs])
        if _rotation_like(group) and phi - plo >= TWO_PI:
            plo, phi = lo, lo + TWO_PI
        box.append((plo, phi))
    if group.has_translation:
        (xlo, xhi), (ylo, yhi) = region.tx_interval, region.ty_interval
        lin_iv = region.linear_interval if group.has_linear_part else None
        bx, by = [xlo, xhi], [ylo, yhi]
        for g in gs:
            (ex0, ex1), (ey0, ey1) = _translate_extent(group, lin_iv, (g.tx, g.ty))
            bx += [xlo + ex0, xhi + ex1]
            by += [ylo + ey0, yhi + ey1]
        box += [(min(bx), max(bx)), (min(by), max(by))]
    return box


def _draw(region, box, rng, size):
    group = region.group
    cols = [lo + (hi - lo) * rng.random(size) for lo, hi in box]
    k = 0
    if group.has_linear_part:
        p = cols[0]
        k = 1
    else:
        p = np.zeros(size)
    if group.has_translation:
        tx, ty = cols[k], cols[k + 1]
    else:
        tx = ty = np.zeros(size)
    return p, tx, ty


def _mc_counts(region: PoolingRegion, gs, mc: MonteCarloSpec, kind: str):
    """Shared-sample hit counts for each ``g``; returns (counts, box volume)."""
    box = _sampling_box(region, gs)
    volume = float(np.prod([hi - lo for lo, hi in box]))
    counts = np.zeros(len(gs), dtype=np.int64)
    for b, size in mc.batches():
        p, tx, ty = _draw(region, box, mc.generator(b), size)
        in_a = _contains_arrays(region, p, tx, ty)
        for k, g in enumerate(gs):
            in_b = _contains_arrays(region, *_right_inverse_apply(region.group, p, tx, ty, g))
            hit = (in_a ^ in_b) if kind == "symdiff" else in_b
            counts[k] += int(np.count_nonzero(hit))
    return counts, volume


def _to_estimates(counts, volume, n):
    out = []
    for c in counts:
        frac = c / n
        out.append(Estimate(volume * frac, volume * math.sqrt(frac * (1.0 - frac) / n)))
    return out


def _exact_translation_symdiff(region: PoolingRegion, g: GroupElement) -> float:
    lx = region.tx_interval[1] - region.tx_interval[0]
    ly = region.ty_interval[1] - region.ty_interval[0]
    overlap = max(0.0, lx - abs(g.tx)) * max(0.0, ly - abs(g.ty))
    return 2.0 * (lx * ly - overlap)


def symdiff_measure(
    region: PoolingRegion,
    g: GroupElement,
    method: str = "exact",
    mc: MonteCarloSpec | None = None,
) -> Estimate:
    """Haar measure of ``(G0 g) delta G0``.

    ``method="exact"`` uses the box-overlap formula (translation groups only);
    ``method="monte_carlo"`` tests ``h g^{-1} in G0`` on uniform samples over a
    box containing both sets.
    """
    _check_group(region, g.group)
    if method == "exact":
        if region.group is not GroupId.TRANSLATIONS:
            raise UnsupportedMethodError(
                f"exact symmetric difference only for translation boxes, not {region.group.value}"
            )
        return Estimate(_exact_translation_symdiff(region, g), 0.0)
    if method != "monte_carlo":
        raise InvalidArgumentError(f"unknown method {method!r}")
    mc = mc or MonteCarloSpec()
    counts, volume = _mc_counts(region, [g], mc, "symdiff")
    return _to_estimates(counts, volume, mc.sample_count)[0]


def right_translate_measure(region: PoolingRegion, g: GroupElement, mc: MonteCarloSpec | None = None) -> Estimate:
    """Monte Carlo estimate of ``mu(G0 g)``; equals ``mu(G0)`` for unimodular groups."""
    _check_group(region, g.group)
    mc = mc or MonteCarloSpec()
    counts, volume = _mc_counts(region, [g], mc, "translate")
    return _to_estimates(counts, volume, mc.sample_count)[0]


# -- rates ------------------------------------------------------------------------


def _abs_cos_integral(a: float, b: float) -> float:
    def prim(x):
        k = math.floor((x + math.pi / 2) / math.pi)
        return 2.0 * k + math.sin(x - k * math.pi)

    return prim(b) - prim(a)


def _abs_sin_integral(a: float, b: float) -> float:
    def prim(x):
        k = math.floor(x / math.pi)
        return 2.0 * k + 1.0 - math.cos(x - k * math.pi)

    return prim(b) - prim(a)


def _abs_linear_integral(alpha: float, beta: float, a: float, b: float) -> float:
    """Integral of ``|alpha + beta s|`` over ``[a, b]``."""
    if beta == 0.0:
        return abs(alpha) * (b - a)

    def prim(s):
        z = alpha + beta * s
        return z * abs(z) / (2.0 * beta)

    return prim(b) - prim(a)


def _closed_form_rate(region: PoolingRegion, xi: LieAlgebraElement) -> float:
    group = region.group
    if xi.is_zero():
        return 0.0
    if xi.vx == 0.0 and xi.vy == 0.0:
        lo, hi = region.linear_interval
        if region.full_circle:
            return 0.0
        return 2.0 * abs(xi.zeta) / (hi - lo)
    if xi.zeta != 0.0:
        raise UnsupportedMethodError("closed-form rate needs a pure translation or pure linear generator")
    lx = region.tx_interval[1] - region.tx_interval[0]
    ly = region.ty_interval[1] - region.ty_interval[0]
    u, v = xi.vx, xi.vy
    if group is GroupId.TRANSLATIONS:
        return 2.0 * (abs(u) / lx + abs(v) / ly)
    lo, hi = region.linear_interval
    width = hi - lo
    if group is GroupId.SHEAR:
        ix = _abs_linear_integral(u, v, lo, hi)
        return 2.0 * (ix / lx + abs(v) * width / ly) / width
    # SE(2): the shift R(theta) (u, v) rotates with the pooled angle
    r = math.hypot(u, v)
    phi = math.atan2(v, u)
    ix = r * _abs_cos_integral(lo + phi, hi + phi)
    iy = r * _abs_sin_integral(lo + phi, hi + phi)
    return 2.0 * (ix / lx + iy / ly) / width


def symdiff_rate(
    region: PoolingRegion,
    xi: LieAlgebraElement,
    method: str = "closed_form",
    mc: MonteCarloSpec | None = None,
    s0: float = 0.02,
) -> RateEstimate:
    """One-sided derivative at ``s=0`` of ``mu((G0 exp(s xi)) delta G0) / mu(G0)``.

    ``closed_form`` covers pure translation generators (translations, SE(2)
    and shear boxes) and pure rotation/shear generators.  ``slope_fit``
    estimates the ratio by Monte Carlo at ``s0, s0/2, s0/4, s0/8`` with common
    random numbers and fits a line through the origin.
    """
    _check_group(region, xi.group)
    if method == "closed_form":
        return RateEstimate(_closed_form_rate(region, xi), 0.0, 0.0, "closed_form")
    if method != "slope_fit":
        raise InvalidArgumentError(f"unknown method {method!r}")
    if xi.is_zero():
        return RateEstimate(0.0, 0.0, 0.0, "slope_fit")
    mc = mc or MonteCarloSpec()
    s = s0 / np.array([1.0, 2.0, 4.0, 8.0])
    gs = [exponential(xi, float(si)) for si in s]
    vol0 = measure(region)
    counts, volume = _mc_counts(region, gs, mc, "symdiff")
    est = _to_estimates(counts, volume, mc.sample_count)
    F = np.array([e.value for e in est]) / vol0
    se = np.array([e.std_error for e in est]) / vol0
    ss = float(np.dot(s, s))
    slope = float(np.dot(s, F) / ss)
    slope_se = float(math.sqrt(np.dot(s**2, se**2)) / ss)
    fnorm = float(np.linalg.norm(F))
    residual = float(np.linalg.norm(F - slope * s) / fnorm) if fnorm > 0 else 0.0
    return RateEstimate(slope, slope_se, residual, "slope_fit")
