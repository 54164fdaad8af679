"""The averaging operator over a pooling region, by midpoint quadrature.

``pool(f)`` approximates ``(1/mu(G0)) * integral over G0 of L_g f dmu(g)`` by
the equal-weight average of ``L_{g_k} f`` over a uniform product grid of
midpoint nodes (the Haar density is constant in box coordinates).

Every node is ``g_k = T(t) M(p)`` with ``M`` the linear part.  The default
``separable`` evaluation resamples ``f`` once per linear node ``p`` and then
averages all translations of the box at once with two 1-D stencils; the sum
of shifted cubic kernels over a product grid is separable, so the translation
average costs the same for any number of translation nodes.  ``direct``
resamples every node independently and is kept as a reference path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._fallback import cubic_weights
from .errors import InvalidArgumentError
from .groups import GroupElement, GroupId, LieAlgebraElement, compose, identity, inverse, linear_matrix
from .haar import PoolingRegion
from .images import ImageGrid, _order, check_support, generator_field, warp

__all__ = ["QuadratureSpec", "pool", "pooled_generator_field", "quadrature_nodes"]


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint nodes per group coordinate (``n_theta`` counts shear nodes for shears)."""

    n_theta: int = 9
    n_x: int = 9
    n_y: int = 9
    rule: str = "midpoint"

    def __post_init__(self):
        if min(self.n_theta, self.n_x, self.n_y) < 1:
            raise InvalidArgumentError("quadrature node counts must be positive")
        if self.rule != "midpoint":
            raise InvalidArgumentError(f"unsupported quadrature rule {self.rule!r}")

    def refined(self, factor: int = 2) -> "QuadratureSpec":
        return QuadratureSpec(self.n_theta * factor, self.n_x * factor, self.n_y * factor)

    def node_count(self, group: GroupId) -> int:
        return len(_linear_nodes(group, None, self)) * (
            (self.n_x * self.n_y) if group.has_translation else 1
        )

    def to_dict(self) -> dict:
        return {"n_theta": self.n_theta, "n_x": self.n_x, "n_y": self.n_y, "rule": self.rule}


def _midpoints(iv, n):
    lo, hi = iv
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def _linear_nodes(group, region, quad):
    if not group.has_linear_part:
        return np.zeros(1)
    if region is None:
        return np.zeros(quad.n_theta)
    return _midpoints(region.linear_interval, quad.n_theta)


def _translation_nodes(region, quad):
    if not region.group.has_translation:
        return np.zeros(1), np.zeros(1)
    return _midpoints(region.tx_interval, quad.n_x), _midpoints(region.ty_interval, quad.n_y)


def quadrature_nodes(region: PoolingRegion, quad: QuadratureSpec) -> list[GroupElement]:
    """All nodes in evaluation order: linear parameter outermost, then tx, then ty."""
    group = region.group
    lin = _linear_nodes(group, region, quad)
    txs, tys = _translation_nodes(region, quad)
    out = []
    for p in lin:
        for tx in txs:
            for ty in tys:
                if group is GroupId.SHEAR:
                    out.append(GroupElement(group, 0.0, tx, ty, p))
                elif group is GroupId.TRANSLATIONS:
                    out.append(GroupElement(group, 0.0, tx, ty))
                elif group is GroupId.ROTATIONS:
                    out.append(GroupElement(group, p))
                else:
                    out.append(GroupElement(group, p, tx, ty))
    return out


def _shift_stencil(shifts, h, order):
    """1-D stencil averaging ``f(x - t)`` over ``shifts``: ``(offsets, weights)``."""
    acc = {}
    w_node = 1.0 / len(shifts)
    for t in shifts:
        pos = -t / h
        base = np.floor(pos)
        frac = pos - base
        base = int(base)
        if order == 3:
            ws = cubic_weights(frac)
            offs = range(base - 1, base + 3)
        else:
            ws = (1.0 - frac, frac)
            offs = range(base, base + 2)
        for o, w in zip(offs, ws):
            if w != 0.0:
                acc[o] = acc.get(o, 0.0) + w_node * w
    offsets = np.array(sorted(acc), dtype=np.int64)
    weights = np.array([acc[o] for o in offsets], dtype=np.float64)
    return offsets, weights


def _support_maps(region, quad, pre):
    group = region.group
    lin = _linear_nodes(group, region, quad)
    txs, tys = _translation_nodes(region, quad)
    maps = []
    for p in lin:
        a = linear_matrix(group, p)
        delta = a @ pre.translation
        q = p + pre.linear_param
        aq = linear_matrix(group, q)
        for tx in (txs[0], txs[-1]):
            for ty in (tys[0], tys[-1]):
                maps.append((aq, np.array([tx, ty]) + delta))
    return maps


def pool(
    f: ImageGrid,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    interp: str = "bicubic",
    pre: GroupElement | None = None,
    method: str = "separable",
) -> ImageGrid:
    """Average of ``L_{g_k} f`` over the quadrature nodes of ``region``.

    With ``pre = g`` the result is the pooled image of ``L_g f``, evaluated as
    the average of ``L_{g_k g} f`` so ``f`` is resampled only once per node.
    """
    quad = quad or QuadratureSpec()
    group = region.group
    pre = identity(group) if pre is None else pre
    if pre.group is not group:
        raise InvalidArgumentError(f"group mismatch: region {group.value} vs {pre.group.value}")
    check_support(f, _support_maps(region, quad, pre), what="pooling region")
    order = _order(interp)
    if method == "direct":
        return _pool_direct(f, region, quad, interp, pre)
    if method != "separable":
        raise InvalidArgumentError(f"unknown pooling method {method!r}")

    h = f.spacing
    lin = _linear_nodes(group, region, quad)
    txs, tys = _translation_nodes(region, quad)
    acc = np.zeros_like(f.values)
    for p in lin:
        a = linear_matrix(group, p)
        dx, dy = a @ pre.translation
        q = p + pre.linear_param
        warped = warp(f, np.linalg.inv(linear_matrix(group, q)), (0.0, 0.0), interp).values
        offx, wx = _shift_stencil(txs + dx, h, order)
        offy, wy = _shift_stencil(tys + dy, h, order)
        if not (len(offx) == 1 and offx[0] == 0 and wx[0] == 1.0):
            warped = kernels.correlate_axis(warped, offx, wx, 1)
        if not (len(offy) == 1 and offy[0] == 0 and wy[0] == 1.0):
            warped = kernels.correlate_axis(warped, offy, wy, 0)
        acc += warped
    return f.like(acc / len(lin))


def _pool_direct(f, region, quad, interp, pre):
    nodes = quadrature_nodes(region, quad)
    acc = np.zeros_like(f.values)
    for g in nodes:
        gi = inverse(compose(g, pre))
        acc += warp(f, gi.linear(), gi.translation, interp).values
    return f.like(acc / len(nodes))


def pooled_generator_field(
    xi: LieAlgebraElement,
    f: ImageGrid,
    region: PoolingRegion,
    quad: QuadratureSpec | None = None,
    interp: str = "bicubic",
    accuracy: int = 2,
) -> ImageGrid:
    """Pooled field ``X~_xi`` at ``pool(f)``, computed as ``pool(X_xi f)``."""
    if xi.group is not region.group:
        raise InvalidArgumentError(f"group mismatch: {xi.group.value} vs {region.group.value}")
    field = generator_field(xi, f, accuracy)
    if xi.is_zero():
        return field
    return pool(field, region, quad, interp)
