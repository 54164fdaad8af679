"""Reproducible random instances for the verification suites.

Every instance is drawn from its own Philox stream keyed by ``(seed, index)``,
so instance ``i`` is the same whatever the instance count or the number of
worker threads.  Images are placed so that the pooled support stays inside the
default grid: the centre sits near ``-(a/2, a/2)``, which puts the middle of
the translation box over the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError
from .groups import GroupElement, GroupId, LieAlgebraElement
from .haar import PoolingRegion
from .images import ImageGrid, ImageSpec, synthesize

__all__ = [
    "instance_rng",
    "random_region",
    "random_image_spec",
    "random_element",
    "random_generator",
    "Theorem1Instance",
    "theorem1_instance",
    "IMAGE_KINDS",
]

IMAGE_KINDS = ("gaussian", "anisotropic_gaussian", "gabor", "bandlimited_noise")
_MAX_ATTEMPTS = 20


def instance_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Independent stream for instance ``index`` of suite ``stream``."""
    key = (int(seed) + 0x9E3779B97F4A7C15 * (stream + 1)) % 2**64
    return np.random.Generator(np.random.Philox(key=key, counter=int(index) << 192))


def random_region(rng: np.random.Generator, group: GroupId) -> PoolingRegion:
    """Box region with side ``a`` in [0.5, 1] and angle half-width in [0.1, 0.5]."""
    group = GroupId(group)
    a = float(rng.uniform(0.5, 1.0))
    if group is GroupId.TRANSLATIONS:
        return PoolingRegion.translation_box(a)
    if group is GroupId.SE2:
        return PoolingRegion.se2_box(float(rng.uniform(0.1, 0.5)), a)
    if group is GroupId.SHEAR:
        s = float(rng.uniform(0.1, 0.4))
        return PoolingRegion(group, tx_interval=(0.0, a), ty_interval=(0.0, a), shear_interval=(-s, s))
    th = float(rng.uniform(0.1, 0.5))
    return PoolingRegion.rotation_arc(-th, th)


def _side(region: PoolingRegion) -> float:
    if region.group.has_translation:
        return region.tx_interval[1] - region.tx_interval[0]
    return 0.0


def random_image_spec(rng: np.random.Generator, kind: str, region: PoolingRegion, margin: float = 0.2) -> ImageSpec:
    if kind not in IMAGE_KINDS:
        raise InvalidArgumentError(f"unknown image kind {kind!r}")
    a = _side(region)
    c = (-0.5 * a + float(rng.uniform(-0.2, 0.2)), -0.5 * a + float(rng.uniform(-0.2, 0.2)))
    common = dict(kind=kind, center=c, margin=margin, orientation=float(rng.uniform(-math.pi, math.pi)))
    if kind == "gaussian":
        return ImageSpec(sigma=float(rng.uniform(0.4, 0.7)), **common)
    if kind == "anisotropic_gaussian":
        return ImageSpec(sigmas=(float(rng.uniform(0.45, 0.7)), float(rng.uniform(0.3, 0.45))), **common)
    if kind == "gabor":
        return ImageSpec(
            sigma=float(rng.uniform(0.45, 0.7)),
            frequency=float(rng.uniform(0.2, 0.6)),
            phase=float(rng.uniform(0.0, 2 * math.pi)),
            **common,
        )
    return ImageSpec(
        window=float(rng.uniform(0.45, 0.6)),
        correlation=0.3,
        seed=int(rng.integers(0, 2**31)),
        **common,
    )


def random_element(rng: np.random.Generator, region: PoolingRegion, lo: float = 0.1, hi: float = 0.3) -> GroupElement:
    """Element whose displacement is a fraction in [lo, hi] of the region side.

    The translation part has sup-norm ``frac * a``; the linear parameter is at
    most ``frac`` times the width of the linear interval.
    """
    group = region.group
    frac = float(rng.uniform(lo, hi))
    lin = 0.0
    if group.has_linear_part:
        plo, phi = region.linear_interval
        lin = frac * (phi - plo) * float(rng.choice([-1.0, 1.0])) * float(rng.uniform(0.5, 1.0))
    tx = ty = 0.0
    if group.has_translation:
        a = _side(region)
        ang = float(rng.uniform(-math.pi, math.pi))
        d = np.array([math.cos(ang), math.sin(ang)])
        d = d / np.abs(d).max() * frac * a
        tx, ty = float(d[0]), float(d[1])
    if group is GroupId.SHEAR:
        return GroupElement(group, 0.0, tx, ty, lin)
    if group is GroupId.ROTATIONS:
        return GroupElement(group, lin)
    if group is GroupId.TRANSLATIONS:
        return GroupElement(group, 0.0, tx, ty)
    return GroupElement(group, lin, tx, ty)


def random_generator(rng: np.random.Generator, group: GroupId) -> LieAlgebraElement:
    group = GroupId(group)
    z, vx, vy = (float(v) for v in rng.uniform(-1.0, 1.0, size=3))
    if group is GroupId.TRANSLATIONS:
        z = 0.0
    if group is GroupId.ROTATIONS:
        vx = vy = 0.0
    return LieAlgebraElement(group, z, vx, vy)


@dataclass(frozen=True)
class Theorem1Instance:
    index: int
    spec: ImageSpec
    region: PoolingRegion
    element: GroupElement

    def image(self, half_width: float = 6.0, n: int = 512) -> ImageGrid:
        return synthesize(self.spec, half_width, n)


def theorem1_instance(
    seed: int,
    index: int,
    groups=(GroupId.TRANSLATIONS, GroupId.SE2),
    kinds=IMAGE_KINDS,
    half_width: float = 6.0,
    n: int = 512,
    region: PoolingRegion | None = None,
    image: ImageSpec | None = None,
    displacement=(0.1, 0.3),
) -> Theorem1Instance:
    """Instance ``index``: groups and image kinds cycle, parameters are random.

    Draws are repeated (on the same stream) until the synthesized image meets
    its margin; a fixed ``image`` or ``region`` is used as given.
    """
    rng = instance_rng(seed, index, stream=1)
    group = GroupId(groups[index % len(groups)])
    kind = kinds[(index // len(groups)) % len(kinds)]
    for _ in range(_MAX_ATTEMPTS):
        reg = region or random_region(rng, group)
        spec = image or random_image_spec(rng, kind, reg)
        g = random_element(rng, reg, *displacement)
        try:
            synthesize(spec, half_width, n)
        except DegenerateInputError:
            if image is not None:
                raise
            continue
        return Theorem1Instance(index, spec, reg, g)
    raise DegenerateInputError(f"could not draw a valid image for instance {index}")
