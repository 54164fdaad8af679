import json
import math

import numpy as np
import pytest

from orbitpool import geometry as G
from orbitpool.errors import DegenerateBasisError, InvalidArgumentError
from orbitpool.groups import GroupElement, GroupId, LieAlgebraElement, identity
from orbitpool.haar import MonteCarloSpec, PoolingRegion
from orbitpool.images import ImageSpec, gradient, norm2, synthesize
from orbitpool.pooling import QuadratureSpec, pool, pooled_generator_field
from orbitpool.reporting import validate_report

SE2 = GroupId.SE2
T2 = GroupId.TRANSLATIONS
Q = QuadratureSpec(5, 5, 5)
MC = MonteCarloSpec(200_000, seed=1)


def rel(a, b):
    return norm2(a - b) / norm2(b)


@pytest.fixture(scope="module")
def narrow():
    return synthesize(ImageSpec(sigma=0.5, margin=0.5))


# ------------------------------------------------------------ reports


def test_report_pass_and_ratio():
    r = G.VerificationReport("x", 1.0, 2.0, {"quadrature": 0.01, "monte_carlo": 0.02})
    assert r.ratio == 0.5 and r.epsilon == pytest.approx(0.03) and r.passed
    r = G.VerificationReport("x", 1.0, 0.0, {})
    assert r.ratio == math.inf and not r.passed
    r = G.VerificationReport("x", 0.0, 0.0, {})
    assert r.ratio == 0.0 and r.passed
    r = G.VerificationReport("x", 1.02, 1.0, {"interpolation": 0.03})
    assert r.passed


def test_report_json_roundtrip():
    r = G.VerificationReport("y", 3.0, 0.0, {"quadrature": 0.0}, 1e-9, {"seed": 4, "grid": {"n": 512}})
    doc = json.loads(r.to_json())
    assert doc["ratio"] == "inf"
    validate_report(doc)
    back = G.VerificationReport.from_json(r.to_json())
    assert back.to_dict() == r.to_dict()


def test_report_tampering_detected():
    doc = G.VerificationReport("z", 2.0, 1.0, {}).to_dict()
    doc["pass"] = True
    with pytest.raises(InvalidArgumentError):
        G.VerificationReport.from_dict(doc)


# ------------------------------------------------------------ theorem 1


def test_theorem1_identity(narrow):
    r = G.theorem1_check(narrow, identity(T2), PoolingRegion.translation_box(1.0), Q)
    assert r.measured_lhs == 0.0 and r.analytic_rhs == 0.0 and r.passed


def test_theorem1_translation_example(narrow):
    r = G.theorem1_check(narrow, GroupElement(T2, 0.0, 0.1, 0.0), PoolingRegion.translation_box(1.0))
    assert r.analytic_rhs == pytest.approx(0.2 * math.sqrt(math.pi) / 2, rel=1e-6)
    assert r.provenance["symdiff"] == pytest.approx(0.2)
    assert r.passed
    assert set(r.epsilon_components) == {"quadrature", "interpolation", "monte_carlo"}
    validate_report(r.to_dict())


def test_theorem1_se2_prefactor_is_one(narrow):
    g = GroupElement(SE2, 0.05, 0.05, -0.03)
    r = G.theorem1_check(narrow, g, PoolingRegion.se2_box(0.3, 1.0), Q, MC)
    assert r.provenance["lambda"] == pytest.approx(1.0, abs=1e-15)
    assert r.provenance["jacobian_sup_g"] == pytest.approx(1.0, abs=1e-15)
    assert r.provenance["symdiff_method"] == "monte_carlo"
    assert r.passed


# ------------------------------------------------------------ brackets and theorem 2


def test_bracket_field_abelian_is_zero(narrow):
    box = PoolingRegion.translation_box(1.0)
    bf = G.bracket_field(LieAlgebraElement(T2, 0, 1, 0), LieAlgebraElement(T2, 0, 0, 1), narrow, box, Q)
    assert norm2(bf) == 0.0


def test_bracket_field_rotation_translation(narrow):
    r = PoolingRegion.se2_box(0.02, 1.0)
    xi, xi2 = LieAlgebraElement(SE2, 1, 0, 0), LieAlgebraElement(SE2, 0, 1, 0)
    bf = G.bracket_field(xi, xi2, narrow, r, Q)
    # -pool(X_(0,0,1) f) = pool(df/dy); for a thin angle range this is d/dy of the pooled image
    assert np.array_equal(bf.values, (-pooled_generator_field(LieAlgebraElement(SE2, 0, 0, 1), narrow, r, Q)).values)
    assert rel(bf, gradient(pool(narrow, r, Q)).y) <= 1e-2


def test_bracket_field_bilinear(narrow):
    r = PoolingRegion.se2_box(0.3, 1.0)
    xi, xi2 = LieAlgebraElement(SE2, 0.5, 0.2, -0.1), LieAlgebraElement(SE2, -0.3, 0.4, 0.9)
    a = G.bracket_field(xi.scale(2.0), xi2, narrow, r, Q)
    b = G.bracket_field(xi, xi2, narrow, r, Q)
    assert np.allclose(a.values, 2.0 * b.values, atol=1e-14 * np.abs(b.values).max())


def test_theorem2_commuting(narrow):
    r = PoolingRegion.se2_box(0.3, 1.0)
    rep = G.theorem2_check(narrow, LieAlgebraElement(SE2, 0, 1, 0), LieAlgebraElement(SE2, 0, 0.5, 2.0), r, Q)
    assert rep.analytic_rhs == 0.0
    assert rep.measured_lhs <= 1e-10 * norm2(narrow) ** 2
    assert rep.passed


def test_theorem2_unit_pair(narrow):
    xi, xi2 = LieAlgebraElement(SE2, 1, 0, 0), LieAlgebraElement(SE2, 0, 1, 0)
    thin = G.theorem2_check(narrow, xi, xi2, PoolingRegion.se2_box(1e-3, 1.0), Q)
    assert thin.provenance["rate"] == pytest.approx(2.0, rel=1e-3)
    assert thin.analytic_rhs == pytest.approx(4 * norm2(narrow) ** 2, rel=1e-3)
    assert thin.passed
    wide = G.theorem2_check(narrow, xi, xi2, PoolingRegion.se2_box(0.5, 1.0), Q)
    assert wide.passed
    assert wide.provenance["bracket_sign_convention"] == G.BRACKET_SIGN_CONVENTION


def test_theorem2_homogeneity(narrow):
    r = PoolingRegion.se2_box(0.3, 1.0)
    xi, xi2 = LieAlgebraElement(SE2, 1, 0.2, 0), LieAlgebraElement(SE2, -0.5, 1, 0.3)
    a = G.theorem2_check(narrow, xi, xi2, r, Q)
    b = G.theorem2_check(narrow * 2.0, xi, xi2, r, Q)
    assert b.measured_lhs == pytest.approx(4 * a.measured_lhs, rel=1e-12)
    assert b.analytic_rhs == pytest.approx(4 * a.analytic_rhs, rel=1e-12)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-12)


# ------------------------------------------------------------ curvature


@pytest.fixture(scope="module")
def off_centre():
    return synthesize(ImageSpec(sigma=0.55, center=(1.0, 0.2), margin=0.3))


def test_curvature_abelian_is_flat(narrow):
    box = PoolingRegion.translation_box(1.0)
    est = G.sectional_curvature(narrow, LieAlgebraElement(T2, 0, 1, 0), LieAlgebraElement(T2, 0, 0, 1), box, Q)
    assert est.kappa_hat <= 1e-8


def test_curvature_swap_invariant_and_nonnegative(off_centre):
    r = PoolingRegion.se2_box(0.2, 1.0)
    xi, xi2 = LieAlgebraElement(SE2, 1, 0, 0), LieAlgebraElement(SE2, 0, 1, 0)
    a = G.sectional_curvature(off_centre, xi, xi2, r, Q)
    b = G.sectional_curvature(off_centre, xi2, xi, r, Q)
    assert a.kappa_hat >= 0.0
    assert b.kappa_hat == pytest.approx(a.kappa_hat, rel=1e-12)
    assert np.all(np.linalg.eigvalsh(a.gram) >= 0)
    assert a.kappa_hat <= a.bound


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_curvature_scaling_law(off_centre, c):
    # |bracket|^2 scales as c^2 and det(Gram) as c^4, so kappa_hat scales as 1/c^2;
    # the ratio to the normalized bound is scale invariant
    r = PoolingRegion.se2_box(0.2, 1.0)
    xi, xi2 = LieAlgebraElement(SE2, 1, 0, 0), LieAlgebraElement(SE2, 0, 1, 0)
    a = G.sectional_curvature(off_centre, xi, xi2, r, Q)
    b = G.sectional_curvature(off_centre * c, xi, xi2, r, Q)
    assert b.kappa_hat == pytest.approx(a.kappa_hat / c**2, rel=1e-10)
    assert b.kappa_hat / b.bound == pytest.approx(a.kappa_hat / a.bound, rel=1e-10)


def test_curvature_degenerate_basis(off_centre):
    r = PoolingRegion.se2_box(0.2, 1.0)
    xi = LieAlgebraElement(SE2, 0.3, 1, 0)
    with pytest.raises(DegenerateBasisError):
        G.sectional_curvature(off_centre, xi, xi.scale(2.0), r, Q)


def test_small_angle_bound():
    xi, xi2 = LieAlgebraElement(SE2, 1, 0, 0), LieAlgebraElement(SE2, 0, 1, 0)
    assert G.se2_small_angle_curvature_bound(xi, xi2, 1.0) == 1.0
    assert G.se2_small_angle_curvature_bound(xi, xi2, 2.0) == 0.25


# ------------------------------------------------------------ contraction profile


def test_contraction_profile(narrow):
    rows = G.contraction_profile(
        narrow, [0.5, 1.0, 1.5], LieAlgebraElement(T2, 0, 1, 0), [0.0, 0.05, 0.2], QuadratureSpec(1, 9, 9)
    )
    assert len(rows) == 9
    zero = [r for r in rows if r.t == 0.0]
    assert all(r.raw == 0.0 and r.pooled == 0.0 and r.ratio == 1.0 for r in zero)
    for t in (0.05, 0.2):
        ratios = [r.ratio for r in rows if r.t == t]
        assert ratios == sorted(ratios, reverse=True)
    assert all(r.report.passed for r in rows)
    assert set(rows[0].as_dict()) >= {"a", "t", "raw", "pooled", "ratio", "theorem1_rhs"}


def test_contraction_profile_group_mismatch(narrow):
    with pytest.raises(InvalidArgumentError):
        G.contraction_profile(narrow, [1.0], LieAlgebraElement(SE2, 1, 0, 0), [0.1])
