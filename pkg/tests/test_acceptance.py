"""Acceptance criteria at the default scale (n=512, L=6).

Each test records one ``ACCEPTANCE <k> PASS|FAIL`` line; the lines are printed
together in the terminal summary (see conftest.py).
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from orbitpool import suites
from orbitpool.config import parse_config
from orbitpool.geometry import lemma_discrepancy, orthonormal_gaussian, sectional_curvature
from orbitpool.groups import (
    GroupElement,
    GroupId,
    LieAlgebraElement,
    bracket,
    compose,
    expm_numeric,
    exponential,
    identity,
    inverse,
)
from orbitpool.haar import (
    MonteCarloSpec,
    PoolingRegion,
    measure,
    right_translate_measure,
    symdiff_measure,
    symdiff_rate,
)
from orbitpool.images import ImageSpec, synthesize
from orbitpool.pooling import QuadratureSpec
from orbitpool.reporting import validate_report
from orbitpool.runner import run_experiment
from orbitpool.signatures import Nonlinearity, draw_templates, invariance_error, responses, signature

from .conftest import ACCEPTANCE

pytestmark = pytest.mark.acceptance


def record(k, ok, detail):
    line = f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


def reports(out):
    docs = [json.loads(p.read_text()) for p in sorted(Path(out, "reports").glob("*.json"))]
    for d in docs:
        validate_report(d)
    return docs


# ------------------------------------------------------------------ 1


def _random_element(rng, group):
    th, x, y, s = rng.uniform(-math.pi, math.pi), *rng.uniform(-5, 5, 2), rng.uniform(-3, 3)
    if group is GroupId.TRANSLATIONS:
        return GroupElement(group, 0.0, x, y)
    if group is GroupId.ROTATIONS:
        return GroupElement(group, th)
    if group is GroupId.SHEAR:
        return GroupElement(group, 0.0, x, y, s)
    return GroupElement(group, th, x, y)


def test_1_group_algebra():
    rng = np.random.default_rng(20240101)
    worst_axiom = worst_bracket = worst_exp = 0.0
    groups = list(GroupId)
    for i in range(1000):
        group = groups[i % len(groups)]
        a, b, c = (_random_element(rng, group) for _ in range(3))
        e = identity(group).matrix()
        worst_axiom = max(
            worst_axiom,
            np.abs(compose(compose(a, b), c).matrix() - compose(a, compose(b, c)).matrix()).max(),
            np.abs(compose(a, inverse(a)).matrix() - e).max(),
            np.abs(compose(inverse(a), a).matrix() - e).max(),
            np.abs(compose(a, identity(group)).matrix() - a.matrix()).max(),
        )
        x, y, z = (suites.random_generator(rng, group) for _ in range(3))
        comm = x.matrix() @ y.matrix() - y.matrix() @ x.matrix()
        jac = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))
        worst_bracket = max(worst_bracket, np.abs(bracket(x, y).matrix() - comm).max(), np.abs(jac.matrix()).max())
        t = float(rng.uniform(0.1, 3.0))
        worst_exp = max(worst_exp, np.abs(exponential(x, t).matrix() - expm_numeric(t * x.matrix())).max())
    ok = worst_axiom <= 1e-12 and worst_bracket <= 1e-12 and worst_exp <= 1e-9
    record(1, ok, f"1000 instances; axioms {worst_axiom:.2e}, bracket/Jacobi {worst_bracket:.2e}, exp {worst_exp:.2e}")


# ------------------------------------------------------------------ 2


def test_2_theorem1_suite(tmp_path):
    cfg = parse_config({"experiment": "theorem1_sweep", "seed": 2024, "plots": False, "theorem1": {"instances": 100}})
    res = run_experiment(cfg, str(tmp_path), quiet=True)
    docs = reports(tmp_path)
    groups = {d["provenance"]["region"]["group"] for d in docs}
    kinds = {d["provenance"]["image"]["kind"] for d in docs}
    all_pass = res.passed and len(docs) == 100 and all(d["pass"] for d in docs)
    max_eps = max(d["epsilon"] for d in docs)
    max_ratio = max(d["ratio"] for d in docs)
    recorded = all(set(d["epsilon_components"]) == {"quadrature", "interpolation", "monte_carlo"} for d in docs)

    box = PoolingRegion.translation_box(1.0)
    asym = []
    for eps in (0.01, 0.005, 0.001, 1e-4):
        r = symdiff_measure(box, GroupElement(GroupId.TRANSLATIONS, 0.0, eps, eps), "exact").value
        asym.append(abs(r / math.sqrt(measure(box)) / (4 * eps) - 1.0))
    ok = all_pass and max_eps < 0.05 and recorded and groups == {"translations", "se2"} and len(kinds) == 4
    ok = ok and max(asym) <= 0.01
    record(2, ok, f"100 instances all pass={all_pass}, max ratio {max_ratio:.3f}, max eps {max_eps:.2e}; "
                  f"4-eps asymptotic worst rel. gap {max(asym):.2e}")


# ------------------------------------------------------------------ 3


def test_3_lemma_commutation():
    worst = 0.0
    for i in range(20):
        rng = suites.instance_rng(3, i, stream=4)
        group = (GroupId.TRANSLATIONS, GroupId.SE2)[i % 2]
        reg = suites.random_region(rng, group)
        spec = suites.random_image_spec(rng, suites.IMAGE_KINDS[(i // 2) % 4], reg, margin=0.25)
        xi = suites.random_generator(rng, group)
        f = synthesize(spec)
        worst = max(worst, lemma_discrepancy(f, xi, reg, QuadratureSpec(5, 5, 5), t=1e-3))
    record(3, worst <= 1e-2, f"20 random (f, xi); worst relative discrepancy {worst:.2e}")


# ------------------------------------------------------------------ 4


def test_4_theorem2_suite(tmp_path):
    cfg = parse_config({"experiment": "theorem2_check", "seed": 2024, "plots": False,
                        "theorem2": {"instances": 50, "pairs": [[[0, 1, 0], [0, 0, 1]], [[0, 1, 0], [0, 0.3, -2]]]}})
    res = run_experiment(cfg, str(tmp_path), quiet=True)
    docs = reports(tmp_path)
    inst = [d for d in docs if "/instance_" in d["experiment"]]
    comm = [d for d in docs if "/pair_" in d["experiment"]]
    f_norm2 = [d["provenance"]["f_norm"] ** 2 for d in comm]
    comm_ok = all(d["analytic_rhs"] == 0.0 and d["measured_lhs"] <= 1e-10 * n2 for d, n2 in zip(comm, f_norm2))
    max_eps = max(d["epsilon"] for d in inst)
    ok = res.passed and len(inst) == 50 and all(d["pass"] for d in inst) and max_eps < 0.05 and comm_ok
    worst_comm = max(d["measured_lhs"] / n2 for d, n2 in zip(comm, f_norm2))
    record(4, ok, f"50 SE(2) instances pass, max ratio {max(d['ratio'] for d in inst):.3f}, max eps {max_eps:.2e}; "
                  f"commuting LHS/||f||^2 {worst_comm:.1e}")


# ------------------------------------------------------------------ 5


def test_5_se2_curvature_example():
    xi, xi2 = LieAlgebraElement(GroupId.SE2, 1, 0, 0), LieAlgebraElement(GroupId.SE2, 0, 1, 0)
    reg = PoolingRegion.se2_box(0.1, 1.0)
    q = QuadratureSpec(9, 9, 9)
    spec, f, gram = orthonormal_gaussian(xi, xi2, reg, q)
    est = sectional_curvature(f, xi, xi2, reg, q)
    ref = sectional_curvature(f, xi, xi2, reg, q.refined(2))
    lin = sectional_curvature(f, xi, xi2, reg, q, interp="bilinear")
    eps = (abs(ref.kappa_hat - est.kappa_hat) + abs(lin.kappa_hat - est.kappa_hat)) / 1.0
    in_range = 0.0 <= est.kappa_hat <= 1.0 * (1 + eps)

    flat = sectional_curvature(f, LieAlgebraElement(GroupId.SE2, 0, 1, 0), LieAlgebraElement(GroupId.SE2, 0, 0, 1),
                               reg, q)
    t2 = PoolingRegion.translation_box(1.0)
    g = synthesize(ImageSpec(sigma=0.5, center=(-0.5, -0.5), margin=0.2))
    flat2 = sectional_curvature(g, LieAlgebraElement(GroupId.TRANSLATIONS, 0, 1, 0),
                                LieAlgebraElement(GroupId.TRANSLATIONS, 0, 0, 1), t2, q)
    ok = in_range and flat.kappa_hat <= 1e-8 and flat2.kappa_hat <= 1e-8 and np.allclose(gram, np.eye(2), atol=1e-6)
    record(5, ok, f"kappa_hat {est.kappa_hat:.4f} in [0, 1(1+{eps:.1e})] (exact-rate bound {est.bound:.4f}); "
                  f"abelian kappa {max(flat.kappa_hat, flat2.kappa_hat):.1e}")


# ------------------------------------------------------------------ 6


def test_6_haar_machinery():
    rng = np.random.default_rng(606)
    within = 0
    rel_se = []
    for i in range(100):
        ax, ay = rng.uniform(0.5, 2.0, 2)
        box = PoolingRegion(GroupId.TRANSLATIONS, tx_interval=(0.0, ax), ty_interval=(0.0, ay))
        g = GroupElement(GroupId.TRANSLATIONS, 0.0, *rng.uniform(-0.3, 0.3, 2))
        exact = symdiff_measure(box, g, "exact").value
        est = symdiff_measure(box, g, "monte_carlo", MonteCarloSpec(1_000_000, seed=i))
        within += abs(est.value - exact) <= 3 * est.std_error
        rel_se.append(est.std_error / exact)

    cases = [
        (PoolingRegion.se2_box(1.0, 1.0), LieAlgebraElement(GroupId.SE2, 0, 1, 0)),
        (PoolingRegion.se2_box(0.5, 1.0), LieAlgebraElement(GroupId.SE2, 1, 0, 0)),
        (PoolingRegion.se2_box(0.3, 0.7), LieAlgebraElement(GroupId.SE2, 0, -0.4, 0.9)),
        (PoolingRegion.translation_box(1.0, 0.5), LieAlgebraElement(GroupId.TRANSLATIONS, 0, 0.3, 0.2)),
    ]
    rate_gap = 0.0
    for k, (reg, xi) in enumerate(cases):
        cf = symdiff_rate(reg, xi, "closed_form").value
        fit = symdiff_rate(reg, xi, "slope_fit", MonteCarloSpec(1_000_000, seed=k)).value
        rate_gap = max(rate_gap, abs(fit - cf) / cf)

    uni_ok = True
    for k in range(5):
        reg = suites.random_region(suites.instance_rng(6, k), GroupId.SE2)
        g = GroupElement(GroupId.SE2, *rng.uniform(-1, 1, 3))
        est = right_translate_measure(reg, g, MonteCarloSpec(1_000_000, seed=100 + k))
        uni_ok &= abs(est.value - measure(reg)) <= 3 * est.std_error
    ok = within == 100 and rate_gap <= 0.02 and uni_ok
    record(6, ok, f"MC within 3 sigma on {within}/100 pairs (median sigma/value {np.median(rel_se):.2%}); "
                  f"rate closed form vs fit {rate_gap:.2%}; unimodularity {'ok' if uni_ok else 'violated'}")


# ------------------------------------------------------------------ 7


def test_7_signature_invariance():
    circle = PoolingRegion(GroupId.ROTATIONS, theta_interval=(-math.pi, math.pi))
    q = QuadratureSpec(72, 1, 1)
    templates = draw_templates(8, seed=7)
    nonlins = [Nonlinearity.parse(s) for s in ("sigmoid", "relu", "modulus", "abs_power(2)")]
    kinds = ("gabor", "gaussian", "anisotropic_gaussian", "bandlimited_noise")
    worst = gap = 0.0
    for i in range(20):
        rng = suites.instance_rng(7, i, stream=5)
        c = tuple(rng.uniform(-0.6, 0.6, 2))
        spec = ImageSpec(kind=kinds[i % 4], sigma=float(rng.uniform(0.6, 0.8)), sigmas=(0.75, 0.5), center=c,
                         frequency=float(rng.uniform(0.3, 0.6)), orientation=float(rng.uniform(-3, 3)),
                         window=0.8, correlation=0.3, seed=i, margin=0.5)
        f = synthesize(spec)
        g = GroupElement(GroupId.ROTATIONS, float(rng.uniform(-math.pi, math.pi)))
        worst = max(worst, invariance_error(f, g, templates, nonlins, circle, q))
        if i < 3:
            r = responses(f, templates, circle, q)
            h = signature(f, templates, [Nonlinearity("abs_power", 2.0)], circle, q)
            l2 = np.linalg.norm(r, axis=1)
            gap = max(gap, float(np.max(np.abs(np.sqrt(h.node_count * h.values[:, 0]) - l2) / l2)))
    ok = worst <= 1e-2 and gap <= 1e-10
    record(7, ok, f"20 rotations, worst invariance error {worst:.2e}; L2-pooling identity gap {gap:.1e}")


# ------------------------------------------------------------------ 8


def _tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(Path(root).rglob("*")) if p.is_file()}


def test_8_determinism(tmp_path):
    doc = {
        "experiment": "full_suite",
        "seed": 8,
        "experiments": [
            {"experiment": "theorem1_sweep", "theorem1": {"instances": 4}},
            {"experiment": "theorem2_check", "theorem2": {"instances": 2}},
            {"experiment": "signature_invariance", "signatures": {"templates": 3, "rotations": 2}},
            {"experiment": "contraction_profile", "contraction": {"a_values": [0.5, 1.0], "t_values": [0.0, 0.1]}},
        ],
    }
    trees = []
    for k, threads in enumerate((1, 4, 1)):
        out = tmp_path / f"run{k}"
        run_experiment(parse_config(doc), str(out), threads=threads, quiet=True)
        trees.append(_tree(out))
    same = trees[0] == trees[1] == trees[2]
    record(8, same and len(trees[0]) > 10,
           f"{len(trees[0])} files byte-identical across re-runs and thread counts 1/4/1: {same}")
