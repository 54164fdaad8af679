import math

import numpy as np
import pytest

from orbitpool.errors import InvalidArgumentError
from orbitpool.groups import GroupElement, GroupId, identity
from orbitpool.haar import PoolingRegion
from orbitpool.images import ImageSpec, act, inner, norm2, synthesize
from orbitpool.pooling import QuadratureSpec
from orbitpool.signatures import (
    Nonlinearity,
    draw_templates,
    export_signature_csv,
    invariance_error,
    l2_pooled_response,
    responses,
    signature,
)

ROT = GroupId.ROTATIONS
CIRCLE = PoolingRegion(ROT, theta_interval=(-math.pi, math.pi))
Q72 = QuadratureSpec(72, 1, 1)
NONNEG = [Nonlinearity.parse(s) for s in ("sigmoid", "relu", "modulus", "abs_power(2)")]


@pytest.fixture(scope="module")
def templates():
    return draw_templates(4, seed=11)


@pytest.fixture(scope="module")
def gabor_img():
    return synthesize(ImageSpec(kind="gabor", sigma=0.8, center=(0.7, -0.4), frequency=0.6, orientation=0.3, margin=0.5))


def test_templates_unit_norm_and_reproducible(templates):
    assert len(templates) == 4
    for t in templates:
        assert norm2(t) == pytest.approx(1.0, abs=1e-12)
    again = draw_templates(4, seed=11)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(templates, again))
    other = draw_templates(4, seed=12)
    assert not np.array_equal(templates.templates[0].values, other.templates[0].values)


def test_templates_nearly_orthogonal():
    ts = draw_templates(8, seed=0)
    worst = max(abs(inner(ts.templates[i], ts.templates[j])) for i in range(8) for j in range(i))
    assert worst < 0.5


def test_template_prefix_stable():
    # template k depends only on (seed, k), not on how many are drawn
    a, b = draw_templates(2, seed=5), draw_templates(5, seed=5)
    assert np.array_equal(a.templates[1].values, b.templates[1].values)


def test_nonlinearity_parse():
    assert Nonlinearity.parse("abs_power(3)") == Nonlinearity("abs_power", 3.0)
    assert Nonlinearity.parse("abs_power(2)").name == "abs_power(2)"
    assert Nonlinearity.parse("relu")(np.array([-1.0, 2.0])).tolist() == [0.0, 2.0]
    assert Nonlinearity("sigmoid")(0.0) == 0.5
    assert not Nonlinearity("tanh").nonnegative
    with pytest.raises(InvalidArgumentError):
        Nonlinearity.parse("softplus")
    with pytest.raises(InvalidArgumentError):
        Nonlinearity("abs_power", 0.5)


def test_zero_image(templates):
    zero = synthesize(ImageSpec(sigma=0.8)) * 0.0
    sig = signature(zero, templates, [Nonlinearity("relu"), Nonlinearity("abs_power")], CIRCLE, QuadratureSpec(8, 1, 1))
    assert np.all(sig.values == 0.0)
    sig = signature(zero, templates, [Nonlinearity("sigmoid")], CIRCLE, QuadratureSpec(8, 1, 1))
    assert np.all(sig.values == 0.5)


def test_l2_identity(templates, gabor_img):
    q = QuadratureSpec(12, 1, 1)
    sig = signature(gabor_img, templates, [Nonlinearity("abs_power", 2.0)], CIRCLE, q)
    l2 = l2_pooled_response(gabor_img, templates, CIRCLE, q)
    assert np.allclose(np.sqrt(sig.node_count * sig.values[:, 0]), l2, rtol=1e-10, atol=0)


def test_full_circle_invariance(templates, gabor_img):
    for theta in (0.37, -1.9):
        err = invariance_error(gabor_img, GroupElement(ROT, theta), templates, NONNEG, CIRCLE, Q72)
        assert err <= 1e-2


def test_node_aligned_rotation_is_exact_permutation(templates, gabor_img):
    # rotating by a node spacing permutes the nodes, up to interpolation error
    step = 2 * math.pi / 72
    r1 = responses(gabor_img, templates, CIRCLE, Q72)
    r2 = responses(act(GroupElement(ROT, step), gabor_img), templates, CIRCLE, Q72)
    assert np.allclose(np.sort(r1, axis=1), np.sort(r2, axis=1), rtol=0, atol=2e-3 * np.abs(r1).max())


def test_identity_transform_gives_zero(templates, gabor_img):
    assert invariance_error(gabor_img, identity(ROT), templates, NONNEG, CIRCLE, QuadratureSpec(8, 1, 1)) == 0.0


def test_partial_region_is_not_invariant(templates, gabor_img):
    arc = PoolingRegion(ROT, theta_interval=(-0.3, 0.3))
    err = invariance_error(gabor_img, GroupElement(ROT, 1.2), templates, NONNEG, arc, QuadratureSpec(9, 1, 1))
    assert err > 1e-2


def test_sign_flip_invariance_even_nonlinearity(templates, gabor_img):
    q = QuadratureSpec(8, 1, 1)
    eta = [Nonlinearity("abs_power", 2.0), Nonlinearity("modulus")]
    a = signature(gabor_img, templates, eta, CIRCLE, q).values
    b = signature(gabor_img, templates.negated(2), eta, CIRCLE, q).values
    assert np.array_equal(a, b)


def test_homogeneity(templates, gabor_img):
    q = QuadratureSpec(8, 1, 1)
    eta = [Nonlinearity("relu"), Nonlinearity("abs_power", 2.0), Nonlinearity("sigmoid")]
    a = signature(gabor_img, templates, eta, CIRCLE, q).values
    b = signature(gabor_img * 3.0, templates, eta, CIRCLE, q).values
    assert np.allclose(b[:, 0], 3.0 * a[:, 0], rtol=1e-12)
    assert np.allclose(b[:, 1], 9.0 * a[:, 1], rtol=1e-12)
    # sigmoid is monotone: moments move away from 1/2 but keep their side
    assert np.all(np.sign(b[:, 2] - 0.5) == np.sign(a[:, 2] - 0.5))


def test_signature_csv(tmp_path, templates, gabor_img):
    sig = signature(gabor_img, templates, NONNEG, CIRCLE, QuadratureSpec(4, 1, 1))
    p = tmp_path / "sig.csv"
    export_signature_csv(p, sig)
    lines = p.read_text().splitlines()
    assert lines[0] == "k,sigmoid,relu,modulus,abs_power(2)"
    assert len(lines) == 5
    assert float(lines[1].split(",")[3]) == sig.values[0, 2]
