"""Discretized L^2(R^2) images, the group action by resampling, and generator fields.

An :class:`ImageGrid` samples a function on the square ``[-L, L]^2`` with ``n``
nodes per axis.  Row index ``i`` is the y coordinate, column index ``j`` the x
coordinate: ``values[i, j] = f(-L + j h, -L + i h)`` with ``h = 2L / (n - 1)``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .errors import DegenerateInputError, InvalidArgumentError
from .groups import GroupElement, LieAlgebraElement, inverse

__all__ = [
    "ImageGrid",
    "ImageSpec",
    "PlaneVectorField",
    "synthesize",
    "inner",
    "norm2",
    "act",
    "gradient",
    "generator_field",
    "check_support",
    "affine_index_coeffs",
    "save_grid",
    "load_grid",
    "export_csv",
    "SIGNIFICANCE",
    "MIN_RESOLUTION",
]

# relative amplitude below which a sample counts as outside the support
SIGNIFICANCE = 1e-6
MIN_RESOLUTION = 16
INTERP_ORDERS = {"bilinear": 1, "bicubic": 3}
GRID_MAGIC = b"OPGRID1\x00"
_HEADER = struct.Struct("<8sId")


@dataclass(frozen=True, eq=False)
class ImageGrid:
    half_width: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InvalidArgumentError(f"image values must be square, got {v.shape}")
        if v.shape[0] < 2:
            raise DegenerateInputError(f"resolution {v.shape[0]} too small")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("image values must be finite")
        if not self.half_width > 0:
            raise InvalidArgumentError("half_width must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)

    def mesh(self):
        """``(X, Y)`` coordinate arrays shaped like ``values``."""
        ax = self.axis
        return np.meshgrid(ax, ax, indexing="xy")

    def same_geometry(self, other: "ImageGrid") -> bool:
        return self.n == other.n and self.half_width == other.half_width

    def like(self, values) -> "ImageGrid":
        return ImageGrid(self.half_width, values)

    def zeros_like(self) -> "ImageGrid":
        return ImageGrid(self.half_width, np.zeros_like(self.values))

    def _check(self, other):
        if not isinstance(other, ImageGrid) or not self.same_geometry(other):
            raise InvalidArgumentError("image grid geometry mismatch")

    def __add__(self, other):
        self._check(other)
        return self.like(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self.like(self.values - other.values)

    def __mul__(self, c):
        return self.like(float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.values)

    @cached_property
    def peak(self) -> float:
        return float(np.abs(self.values).max())

    @cached_property
    def significant_points(self) -> np.ndarray:
        """World coordinates ``(k, 2)`` of samples above the significance level."""
        if self.peak == 0.0:
            return np.zeros((0, 2))
        ii, jj = np.nonzero(np.abs(self.values) > SIGNIFICANCE * self.peak)
        h, L = self.spacing, self.half_width
        return np.column_stack([-L + jj * h, -L + ii * h])

    @cached_property
    def support_hull(self) -> np.ndarray:
        """Vertices of the convex hull of :attr:`significant_points`."""
        pts = self.significant_points
        if len(pts) < 4:
            return pts
        try:
            return pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear support
            return pts

    def margin(self) -> float:
        """Distance from the significant support to the grid boundary."""
        pts = self.significant_points
        if len(pts) == 0:
            return self.half_width
        return float(self.half_width - np.abs(pts).max())

    def margin_ok(self, m: float) -> bool:
        """True iff every sample within distance ``m`` of the boundary is insignificant."""
        return self.margin() >= m


@dataclass(frozen=True)
class PlaneVectorField:
    x: ImageGrid
    y: ImageGrid

    def __post_init__(self):
        if not self.x.same_geometry(self.y):
            raise InvalidArgumentError("vector field components on different grids")


@dataclass(frozen=True)
class ImageSpec:
    """Recipe for a synthetic test image.

    ``kind`` is one of ``gaussian``, ``anisotropic_gaussian``, ``gabor`` or
    ``bandlimited_noise``.  Gaussians are ``amplitude * exp(-r^2 / (2 sigma^2))``.
    ``margin`` is the support margin the synthesized image must satisfy.
    """

    kind: str = "gaussian"
    center: tuple = (0.0, 0.0)
    sigma: float = 1.0
    sigmas: tuple = (1.0, 0.5)
    orientation: float = 0.0
    frequency: float = 1.0
    phase: float = 0.0
    correlation: float = 0.25
    window: float = 0.8
    amplitude: float = 1.0
    seed: int = 0
    margin: float = 1.0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["center"] = list(self.center)
        d["sigmas"] = list(self.sigmas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ImageSpec":
        d = dict(d)
        for key in ("center", "sigmas"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def _rotated(spec: ImageSpec, X, Y):
    cx, cy = spec.center
    c, s = math.cos(spec.orientation), math.sin(spec.orientation)
    dx, dy = X - cx, Y - cy
    return c * dx + s * dy, -s * dx + c * dy


def synthesize(spec: ImageSpec, L: float = 6.0, n: int = 512) -> ImageGrid:
    if n < MIN_RESOLUTION:
        raise DegenerateInputError(f"resolution n={n} below minimum {MIN_RESOLUTION}")
    grid = ImageGrid(L, np.zeros((n, n)))
    X, Y = grid.mesh()
    cx, cy = spec.center
    kind = spec.kind
    if kind == "gaussian":
        vals = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * spec.sigma**2))
    elif kind == "anisotropic_gaussian":
        u, v = _rotated(spec, X, Y)
        sx, sy = spec.sigmas
        vals = np.exp(-(u**2) / (2.0 * sx**2) - v**2 / (2.0 * sy**2))
    elif kind == "gabor":
        u, _ = _rotated(spec, X, Y)
        env = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * spec.sigma**2))
        vals = env * np.cos(2.0 * math.pi * spec.frequency * u + spec.phase)
    elif kind == "bandlimited_noise":
        vals = _smoothed_noise(spec.seed, n, spec.correlation / grid.spacing)
        peak = np.abs(vals).max()
        vals = vals / peak if peak > 0 else vals
        vals = vals * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * spec.window**2))
    else:
        raise InvalidArgumentError(f"unknown image kind {kind!r}")
    f = grid.like(spec.amplitude * vals)
    if not f.margin_ok(spec.margin):
        raise DegenerateInputError(
            f"{kind} image violates support margin {spec.margin:g} "
            f"(significant support reaches {f.margin():.3g} from the boundary)"
        )
    return f


def _smoothed_noise(seed: int, n: int, sigma_px: float) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=int(seed) % 2**64))
    white = rng.standard_normal((n, n))
    return ndimage.gaussian_filter(white, sigma_px, mode="wrap")


def inner(f: ImageGrid, g: ImageGrid) -> float:
    """Quadrature inner product ``h^2 sum f g``."""
    f._check(g)
    return float(f.spacing**2 * np.sum(f.values * g.values))


def norm2(f: ImageGrid) -> float:
    return math.sqrt(max(inner(f, f), 0.0))


def affine_index_coeffs(f: ImageGrid, a: np.ndarray, b) -> tuple:
    """Kernel coefficients reading ``f`` at ``a @ p + b`` for each output point ``p``."""
    L, h = f.half_width, f.spacing
    a = np.asarray(a, dtype=float)
    b1 = (b[0] + L - L * (a[0, 0] + a[0, 1])) / h
    b2 = (b[1] + L - L * (a[1, 0] + a[1, 1])) / h
    return (a[0, 0], a[0, 1], b1, a[1, 0], a[1, 1], b2)


def check_support(f: ImageGrid, maps, what: str = "group action") -> None:
    """Raise unless every affine map ``(A, b)`` keeps the support inside the grid.

    The guard band is two samples wide, the reach of the cubic kernel.
    """
    hull = f.support_hull
    if len(hull) == 0:
        return
    limit = f.half_width - 2.0 * f.spacing
    worst = -np.inf
    for a, b in maps:
        moved = hull @ np.asarray(a, dtype=float).T + np.asarray(b, dtype=float)
        worst = max(worst, float(np.abs(moved).max()))
    if worst > limit:
        raise DegenerateInputError(
            f"{what} moves the image support to {worst:.3g}, beyond the usable "
            f"half-width {limit:.3g}; support margin is {f.margin():.3g}"
        )


def _order(interp: str) -> int:
    try:
        return INTERP_ORDERS[interp]
    except KeyError:
        raise InvalidArgumentError(f"unknown interpolation {interp!r}") from None


def warp(f: ImageGrid, a, b, interp: str = "bicubic") -> ImageGrid:
    """Sample ``f`` at ``a @ p + b`` on every grid point ``p`` (no support check)."""
    coeffs = affine_index_coeffs(f, a, b)
    if coeffs == (1.0, 0.0, 0.0, 0.0, 1.0, 0.0):
        return f
    return f.like(kernels.warp_affine(f.values, coeffs, _order(interp)))


def act(g: GroupElement, f: ImageGrid, interp: str = "bicubic") -> ImageGrid:
    """``(L_g f)(x) = f(g^{-1} x)`` by resampling; zero outside the grid."""
    check_support(f, [(g.linear(), g.translation)])
    gi = inverse(g)
    return warp(f, gi.linear(), gi.translation, interp)


def gradient(f: ImageGrid, accuracy: int = 2) -> PlaneVectorField:
    """Central differences inside, one-sided at the boundary.

    ``accuracy=4`` uses the five-point stencil wherever it fits.
    """
    h = f.spacing
    gy, gx = np.gradient(f.values, h)
    if accuracy == 4:
        v = f.values
        gx[:, 2:-2] = (v[:, :-4] - 8.0 * v[:, 1:-3] + 8.0 * v[:, 3:-1] - v[:, 4:]) / (12.0 * h)
        gy[2:-2, :] = (v[:-4, :] - 8.0 * v[1:-3, :] + 8.0 * v[3:-1, :] - v[4:, :]) / (12.0 * h)
    elif accuracy != 2:
        raise InvalidArgumentError(f"accuracy must be 2 or 4, got {accuracy}")
    return PlaneVectorField(f.like(gx), f.like(gy))


def generator_field(xi: LieAlgebraElement, f: ImageGrid, accuracy: int = 2) -> ImageGrid:
    """``X_xi f = d/dt L_{exp(t xi)} f |_{t=0} = -<grad f, xi . x>``."""
    if xi.is_zero():
        return f.zeros_like()
    grad = gradient(f, accuracy)
    X, Y = f.mesh()
    vx, vy = xi.velocity(X, Y)
    return f.like(-(grad.x.values * vx + grad.y.values * vy))


def save_grid(path, f: ImageGrid) -> None:
    """Dense little-endian float64 file with an ``OPGRID1`` header."""
    header = _HEADER.pack(GRID_MAGIC, f.n, f.half_width)
    Path(path).write_bytes(header + f.values.astype("<f8").tobytes(order="C"))


def load_grid(path) -> ImageGrid:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InvalidArgumentError(f"{path}: truncated grid header")
    magic, n, L = _HEADER.unpack_from(data)
    if magic != GRID_MAGIC:
        raise InvalidArgumentError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size :]
    if len(body) != 8 * n * n:
        raise InvalidArgumentError(f"{path}: expected {n * n} samples, got {len(body) // 8}")
    return ImageGrid(L, np.frombuffer(body, dtype="<f8").reshape(n, n))


def export_csv(path, f: ImageGrid) -> None:
    """Write ``x,y,value`` rows for plotting."""
    X, Y = f.mesh()
    table = np.column_stack([X.ravel(), Y.ravel(), f.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="x,y,value", comments="", fmt="%.17g")
