"""Orbit-averaged template signatures.

For templates ``t_k`` and pointwise nonlinearities ``eta_n`` the signature of
an image ``f`` over a pooling region is the matrix

    h[k, n] = mean over pooling nodes g of  eta_n(<L_g f, t_k>)

i.e. a moment of the distribution of template responses along the (partial)
orbit.  With ``eta = |x|^2`` and the same nodes, ``sqrt(N h[k])`` is exactly
the L2-pooled response of channel ``k``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidArgumentError
from .groups import GroupElement
from .haar import PoolingRegion
from .images import ImageGrid, act, check_support, inner, norm2
from .pooling import QuadratureSpec, quadrature_nodes

__all__ = [
    "TemplateSet",
    "Nonlinearity",
    "Signature",
    "draw_templates",
    "responses",
    "signature",
    "invariance_error",
    "l2_pooled_response",
    "export_signature_csv",
]


@dataclass(frozen=True)
class TemplateSet:
    templates: tuple
    seed: int
    correlation: float = 0.25

    def __len__(self):
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    def negated(self, k: int) -> "TemplateSet":
        """Copy with template ``k`` replaced by its negative."""
        ts = list(self.templates)
        ts[k] = -ts[k]
        return TemplateSet(tuple(ts), self.seed, self.correlation)


def draw_templates(K: int, half_width: float = 6.0, n: int = 512, seed: int = 0, correlation: float = 0.25) -> TemplateSet:
    """``K`` unit-norm band-limited noise templates on the ``[-L, L]^2`` grid.

    Template ``k`` is white noise from the Philox stream ``(seed, k)`` smoothed
    with a Gaussian of width ``correlation`` (plane units), then normalized.
    """
    if K < 1:
        raise InvalidArgumentError("need at least one template")
    grid = ImageGrid(half_width, np.zeros((n, n)))
    sigma_px = correlation / grid.spacing
    out = []
    for k in range(K):
        rng = np.random.Generator(np.random.Philox(key=int(seed) % 2**64, counter=k << 192))
        vals = ndimage.gaussian_filter(rng.standard_normal((n, n)), sigma_px, mode="wrap")
        t = grid.like(vals)
        out.append(t * (1.0 / norm2(t)))
    return TemplateSet(tuple(out), int(seed), float(correlation))


_TAGS = ("sigmoid", "relu", "modulus", "tanh", "abs_power")


@dataclass(frozen=True)
class Nonlinearity:
    tag: str
    p: float = 2.0

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise InvalidArgumentError(f"unknown nonlinearity {self.tag!r}")
        if self.tag == "abs_power" and not self.p >= 1.0:
            raise InvalidArgumentError("abs_power needs p >= 1")

    @classmethod
    def parse(cls, text: str) -> "Nonlinearity":
        """``"relu"``, ``"abs_power(2)"``, ..."""
        text = text.strip()
        if text.startswith("abs_power"):
            inside = text[len("abs_power"):].strip()
            p = float(inside.strip("()")) if inside else 2.0
            return cls("abs_power", p)
        return cls(text)

    @property
    def name(self) -> str:
        return f"abs_power({self.p:g})" if self.tag == "abs_power" else self.tag

    @property
    def nonnegative(self) -> bool:
        return self.tag != "tanh"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "sigmoid":
            return 0.5 * (1.0 + np.tanh(0.5 * x))
        if self.tag == "relu":
            return np.maximum(x, 0.0)
        if self.tag == "modulus":
            return np.abs(x)
        if self.tag == "tanh":
            return np.tanh(x)
        return np.abs(x) ** self.p


@dataclass(frozen=True)
class Signature:
    values: np.ndarray
    nonlinearities: tuple
    node_count: int

    @property
    def shape(self):
        return self.values.shape

    def to_rows(self) -> list[list]:
        header = ["k"] + [eta.name for eta in self.nonlinearities]
        rows = [header]
        for k, row in enumerate(self.values):
            rows.append([k] + [repr(float(v)) for v in row])
        return rows


def _nodes(f: ImageGrid, region: PoolingRegion, quad: QuadratureSpec | None) -> list[GroupElement]:
    nodes = quadrature_nodes(region, quad or QuadratureSpec())
    check_support(f, [(g.linear(), g.translation) for g in nodes], what="signature pooling region")
    return nodes


def responses(f: ImageGrid, templates: TemplateSet, region: PoolingRegion, quad: QuadratureSpec | None = None) -> np.ndarray:
    """``K x N`` matrix of ``<L_{g_i} f, t_k>`` over the pooling nodes."""
    nodes = _nodes(f, region, quad)
    out = np.empty((len(templates), len(nodes)))
    for i, g in enumerate(nodes):
        moved = act(g, f)
        for k, t in enumerate(templates):
            out[k, i] = inner(moved, t)
    return out


def signature(f, templates, nonlins, region, quad=None) -> Signature:
    """Average of ``eta_n(<L_g f, t_k>)`` over the quadrature nodes of ``region``."""
    nonlins = tuple(nonlins)
    if not nonlins:
        raise InvalidArgumentError("need at least one nonlinearity")
    r = responses(f, templates, region, quad)
    vals = np.stack([eta(r).mean(axis=1) for eta in nonlins], axis=1)
    return Signature(vals, nonlins, r.shape[1])


def l2_pooled_response(f, templates, region, quad=None) -> np.ndarray:
    """Per-channel L2 pooling ``sqrt(sum_i <L_{g_i} f, t_k>^2)`` over the same nodes."""
    r = responses(f, templates, region, quad)
    return np.linalg.norm(r, axis=1)


def relative_difference(h1: np.ndarray, h2: np.ndarray) -> float:
    return float(np.max(np.abs(h1 - h2) / (np.abs(h1) + 1e-12)))


def invariance_error(f, g: GroupElement, templates, nonlins, region, quad=None) -> float:
    """Largest relative entry change between the signatures of ``f`` and ``L_g f``."""
    h1 = signature(f, templates, nonlins, region, quad).values
    h2 = signature(act(g, f), templates, nonlins, region, quad).values
    return relative_difference(h1, h2)


def export_signature_csv(path, sig: Signature) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(sig.to_rows())
