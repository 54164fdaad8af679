"""Unimodular transformation groups of the plane and their Lie algebras.

Four families are supported, all acting affinely on R^2:

* ``translations``  -- R^2, elements ``(tx, ty)``
* ``rotations``     -- SO(2) about the origin, elements ``theta``
* ``se2``           -- rigid motions ``g(theta, tx, ty) = T(t) R(theta)``
* ``shear``         -- ``T(t) S(s)`` with ``S(s): (x, y) -> (x + s y, y)``

Elements are stored in canonical parameters; 3x3 homogeneous matrices are
derived views.  The Lie algebra element ``xi(zeta, vx, vy)`` uses ``zeta`` for
the rotational rate (se2/rotations) or the shear rate (shear group).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "GroupId",
    "GroupElement",
    "LieAlgebraElement",
    "identity",
    "compose",
    "inverse",
    "exponential",
    "bracket",
    "apply_to_point",
    "jacobian_sup",
    "normalize_angle",
    "from_matrix",
    "expm_numeric",
]

# |t*zeta| below which the left Jacobian switches to its Taylor series
_SERIES_THRESHOLD = 1e-4


class GroupId(str, enum.Enum):
    TRANSLATIONS = "translations"
    ROTATIONS = "rotations"
    SE2 = "se2"
    SHEAR = "shear"

    @property
    def has_linear_part(self) -> bool:
        return self is not GroupId.TRANSLATIONS

    @property
    def has_translation(self) -> bool:
        return self is not GroupId.ROTATIONS

    @property
    def dimension(self) -> int:
        return {"translations": 2, "rotations": 1, "se2": 3, "shear": 3}[self.value]


def normalize_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    theta = float(theta)
    if -math.pi < theta <= math.pi:
        return theta
    return theta - 2.0 * math.pi * math.ceil((theta - math.pi) / (2.0 * math.pi))


def _check_same(a, b) -> GroupId:
    if a.group is not b.group:
        raise InvalidArgumentError(f"group mismatch: {a.group.value} vs {b.group.value}")
    return a.group


def linear_matrix(group: GroupId, param: float) -> np.ndarray:
    """2x2 linear part of an element with linear parameter ``param``."""
    if group in (GroupId.SE2, GroupId.ROTATIONS):
        c, s = math.cos(param), math.sin(param)
        return np.array([[c, -s], [s, c]])
    if group is GroupId.SHEAR:
        return np.array([[1.0, param], [0.0, 1.0]])
    return np.eye(2)


@dataclass(frozen=True)
class GroupElement:
    """Element of one of the supported groups, in canonical parameters."""

    group: GroupId
    theta: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    shear: float = 0.0

    def __post_init__(self):
        group = GroupId(self.group)
        object.__setattr__(self, "group", group)
        vals = (self.theta, self.tx, self.ty, self.shear)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidArgumentError(f"non-finite group parameters {vals}")
        if group in (GroupId.TRANSLATIONS, GroupId.SHEAR) and self.theta != 0.0:
            raise InvalidArgumentError(f"{group.value} elements carry no rotation")
        if group is GroupId.ROTATIONS and (self.tx != 0.0 or self.ty != 0.0):
            raise InvalidArgumentError("rotations group elements carry no translation")
        if group is not GroupId.SHEAR and self.shear != 0.0:
            raise InvalidArgumentError(f"{group.value} elements carry no shear")
        object.__setattr__(self, "theta", normalize_angle(self.theta))
        for name in ("tx", "ty", "shear"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def linear_param(self) -> float:
        """Rotation angle or shear, whichever parametrizes the linear part."""
        return self.shear if self.group is GroupId.SHEAR else self.theta

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.tx, self.ty])

    def linear(self) -> np.ndarray:
        return linear_matrix(self.group, self.linear_param)

    def matrix(self) -> np.ndarray:
        """3x3 homogeneous matrix ``[[A, t], [0, 1]]``."""
        m = np.eye(3)
        m[:2, :2] = self.linear()
        m[:2, 2] = (self.tx, self.ty)
        return m

    def params(self) -> tuple[float, float, float]:
        """``(linear_param, tx, ty)``."""
        return (self.linear_param, self.tx, self.ty)

    def to_dict(self) -> dict:
        d = {"group": self.group.value, "theta": self.theta, "tx": self.tx, "ty": self.ty}
        if self.group is GroupId.SHEAR:
            d["shear"] = self.shear
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GroupElement":
        return cls(
            GroupId(d["group"]),
            d.get("theta", 0.0),
            d.get("tx", 0.0),
            d.get("ty", 0.0),
            d.get("shear", 0.0),
        )


def _make(group: GroupId, lin: float, tx: float, ty: float) -> GroupElement:
    if group is GroupId.SHEAR:
        return GroupElement(group, 0.0, tx, ty, lin)
    if group is GroupId.TRANSLATIONS:
        return GroupElement(group, 0.0, tx, ty)
    if group is GroupId.ROTATIONS:
        return GroupElement(group, lin)
    return GroupElement(group, lin, tx, ty)


def identity(group: GroupId | str) -> GroupElement:
    return GroupElement(GroupId(group))


def from_matrix(group: GroupId | str, m: np.ndarray) -> GroupElement:
    """Recover canonical parameters from a homogeneous matrix."""
    group = GroupId(group)
    m = np.asarray(m, dtype=float)
    if group in (GroupId.SE2, GroupId.ROTATIONS):
        lin = math.atan2(m[1, 0], m[0, 0])
    elif group is GroupId.SHEAR:
        lin = float(m[0, 1])
    else:
        lin = 0.0
    tx, ty = float(m[0, 2]), float(m[1, 2])
    if group is GroupId.ROTATIONS:
        tx = ty = 0.0
    return _make(group, lin, tx, ty)


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """Group product ``g1 . g2`` (apply ``g2`` first when acting on points)."""
    group = _check_same(g1, g2)
    dx, dy = g1.linear() @ g2.translation
    return _make(group, g1.linear_param + g2.linear_param, g1.tx + dx, g1.ty + dy)


def inverse(g: GroupElement) -> GroupElement:
    inv_lin = -g.linear_param
    tx, ty = -(linear_matrix(g.group, inv_lin) @ g.translation)
    return _make(g.group, inv_lin, tx, ty)


def apply_to_point(g: GroupElement, p) -> np.ndarray:
    """Plane action ``g . p`` of the homogeneous matrix on ``(px, py, 1)``."""
    p = np.asarray(p, dtype=float)
    return p @ g.linear().T + g.translation


def jacobian_sup(g: GroupElement) -> float:
    """``sup_x |det J_g(x)|``; every supported group is area-preserving."""
    m = g.linear()
    return abs(float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))


@dataclass(frozen=True)
class LieAlgebraElement:
    """Generator ``xi(zeta, vx, vy)`` of a one-parameter subgroup."""

    group: GroupId
    zeta: float = 0.0
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self):
        group = GroupId(self.group)
        object.__setattr__(self, "group", group)
        for name in ("zeta", "vx", "vy"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(math.isfinite(v) for v in (self.zeta, self.vx, self.vy)):
            raise InvalidArgumentError("non-finite Lie algebra coordinates")
        if group is GroupId.TRANSLATIONS and self.zeta != 0.0:
            raise InvalidArgumentError("translation generators have zeta = 0")
        if group is GroupId.ROTATIONS and (self.vx != 0.0 or self.vy != 0.0):
            raise InvalidArgumentError("rotation generators have no translational rate")

    def matrix(self) -> np.ndarray:
        m = np.zeros((3, 3))
        if self.group is GroupId.SHEAR:
            m[0, 1] = self.zeta
        else:
            m[0, 1], m[1, 0] = -self.zeta, self.zeta
        m[0, 2], m[1, 2] = self.vx, self.vy
        return m

    def coords(self) -> tuple[float, float, float]:
        return (self.zeta, self.vx, self.vy)

    def is_zero(self) -> bool:
        return self.zeta == 0.0 and self.vx == 0.0 and self.vy == 0.0

    def velocity(self, x, y):
        """Plane velocity field ``xi . (x, y, 1)`` (broadcasts over arrays)."""
        if self.group is GroupId.SHEAR:
            return self.vx + self.zeta * y, self.vy + 0.0 * x
        return self.vx - self.zeta * y, self.vy + self.zeta * x

    def scale(self, c: float) -> "LieAlgebraElement":
        return LieAlgebraElement(self.group, c * self.zeta, c * self.vx, c * self.vy)

    def __add__(self, other: "LieAlgebraElement") -> "LieAlgebraElement":
        group = _check_same(self, other)
        return LieAlgebraElement(
            group, self.zeta + other.zeta, self.vx + other.vx, self.vy + other.vy
        )

    def __neg__(self) -> "LieAlgebraElement":
        return self.scale(-1.0)

    def to_dict(self) -> dict:
        return {"group": self.group.value, "zeta": self.zeta, "vx": self.vx, "vy": self.vy}

    @classmethod
    def from_dict(cls, d: dict) -> "LieAlgebraElement":
        return cls(GroupId(d["group"]), d.get("zeta", 0.0), d.get("vx", 0.0), d.get("vy", 0.0))


def bracket(xi: LieAlgebraElement, xi2: LieAlgebraElement) -> LieAlgebraElement:
    """Matrix commutator ``xi xi2 - xi2 xi`` in closed form."""
    group = _check_same(xi, xi2)
    z1, x1, y1 = xi.coords()
    z2, x2, y2 = xi2.coords()
    if group is GroupId.SHEAR:
        return LieAlgebraElement(group, 0.0, z1 * y2 - z2 * y1, 0.0)
    if group is GroupId.ROTATIONS:
        return LieAlgebraElement(group)
    return LieAlgebraElement(group, 0.0, z2 * y1 - z1 * y2, z1 * x2 - z2 * x1)


def _left_jacobian(phi: float) -> np.ndarray:
    if abs(phi) < _SERIES_THRESHOLD:
        p2 = phi * phi
        a = 1.0 - p2 / 6.0 + p2 * p2 / 120.0 - p2 * p2 * p2 / 5040.0
        b = phi / 2.0 - phi * p2 / 24.0 + phi * p2 * p2 / 720.0 - phi * p2 * p2 * p2 / 40320.0
    else:
        a = math.sin(phi) / phi
        b = (1.0 - math.cos(phi)) / phi
    return np.array([[a, -b], [b, a]])


def exponential(xi: LieAlgebraElement, t: float = 1.0) -> GroupElement:
    """Closed-form ``exp(t xi)``."""
    group = xi.group
    lin = t * xi.zeta
    v = np.array([t * xi.vx, t * xi.vy])
    if group is GroupId.SHEAR:
        # A^2 = zeta*vy*E13 and A^3 = 0
        tx = v[0] + 0.5 * lin * v[1]
        return _make(group, lin, tx, v[1])
    if group is GroupId.TRANSLATIONS:
        return _make(group, 0.0, v[0], v[1])
    if group is GroupId.ROTATIONS:
        return _make(group, lin, 0.0, 0.0)
    tx, ty = _left_jacobian(lin) @ v
    return _make(group, lin, tx, ty)


def expm_numeric(a: np.ndarray, terms: int = 20) -> np.ndarray:
    """Scaling-and-squaring Taylor matrix exponential; independent of :func:`exponential`."""
    a = np.asarray(a, dtype=float)
    norm = np.abs(a).sum(axis=1).max()
    k = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    b = a / (2.0**k)
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for j in range(1, terms):
        term = term @ b / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out
