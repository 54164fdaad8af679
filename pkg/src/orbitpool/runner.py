"""Execute configured experiments and write their artifacts.

Each experiment writes into its own directory:

* ``summary.json``   -- resolved config, report index, overall verdict
* ``reports/*.json`` -- one :class:`~orbitpool.geometry.VerificationReport` per check
* ``*.csv``          -- the canonical tables
* ``*.svg``          -- optional line plots

Work items are mapped over a thread pool but results are always collected
in item order, so the bytes written do not depend on the worker count.
"""

from __future__ import annotations

import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry, signatures, suites
from .config import ExperimentConfig
from .errors import InvalidArgumentError
from .groups import GroupElement, GroupId, LieAlgebraElement
from .haar import MonteCarloSpec
from .images import act, synthesize
from .reporting import write_csv, write_json, write_svg_plot

__all__ = ["ExperimentResult", "run_experiment", "thread_count", "parallel_map"]

THREADS_ENV = "ORBITPOOL_THREADS"
# kappa_hat below this counts as flat (abelian pairs give exactly zero up to rounding)
CURVATURE_FLOOR = 1e-8


def thread_count() -> int:
    """Worker cap from ``ORBITPOOL_THREADS`` (default: all cores)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InvalidArgumentError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


@dataclass
class ExperimentResult:
    name: str
    directory: str
    reports: list = field(default_factory=list)  # (relative path, report, claimed)
    children: list = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        bad = [os.path.join(self.directory, p) for p, rep, claimed in self.reports if claimed and not rep.passed]
        for child in self.children:
            bad.extend(child.failures)
        return bad

    @property
    def passed(self) -> bool:
        return not self.failures

    def index(self) -> list[dict]:
        return [
            {"path": p, "experiment": rep.experiment, "pass": rep.passed, "claimed": claimed, "ratio": rep.ratio}
            for p, rep, claimed in self.reports
        ]


class _Log:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str):
        if not self.quiet:
            print(msg, file=sys.stderr, flush=True)


def _gen(v) -> tuple:
    return tuple(float(x) for x in v)


def _xi(group: GroupId, v) -> LieAlgebraElement:
    return LieAlgebraElement(group, *_gen(v))


def _mc_for(cfg: ExperimentConfig, index: int) -> MonteCarloSpec:
    mc = cfg.monte_carlo
    return MonteCarloSpec(mc.sample_count, (mc.seed * 1_000_003 + index) % 2**63, mc.batch)


def _write_reports(res: ExperimentResult, out: str, items) -> None:
    for rel, rep, claimed in items:
        write_json(os.path.join(out, rel), rep.to_dict())
        res.reports.append((rel, rep, claimed))


def _summary(cfg: ExperimentConfig, res: ExperimentResult, out: str, **extra) -> None:
    doc = {
        "experiment": cfg.experiment,
        "name": cfg.name,
        "config": cfg.to_dict(),
        "reports": res.index(),
        "pass": res.passed,
    }
    doc.update(extra)
    write_json(os.path.join(out, "summary.json"), doc)


# --------------------------------------------------------------------------- theorem 1


def _theorem1_sweep(cfg: ExperimentConfig, out: str, threads: int, log) -> ExperimentResult:
    s = cfg.settings
    groups = tuple(GroupId(g) for g in s["groups"])
    if cfg.region is not None:
        groups = (cfg.region.group,)
    kinds = tuple(s["image_kinds"])
    if cfg.image is not None:
        kinds = (cfg.image.kind,)

    def one(i):
        inst = suites.theorem1_instance(
            cfg.seed, i, groups, kinds, cfg.half_width, cfg.n,
            region=cfg.region, image=cfg.image, displacement=tuple(s["displacement"]),
        )
        f = inst.image(cfg.half_width, cfg.n)
        rep = geometry.theorem1_check(
            f, inst.element, inst.region, cfg.quadrature, _mc_for(cfg, i), cfg.interp,
            experiment=f"{cfg.name}/instance_{i:03d}",
            extra={"instance": i, "seed": cfg.seed, "image": inst.spec.to_dict()},
        )
        log(f"[{cfg.name}] instance {i}: ratio {rep.ratio:.4g} eps {rep.epsilon:.3g} {'pass' if rep.passed else 'FAIL'}")
        return inst, rep

    results = parallel_map(one, range(s["instances"]), threads)
    res = ExperimentResult(cfg.name, out)
    _write_reports(res, out, [(f"reports/instance_{inst.index:03d}.json", rep, True) for inst, rep in results])
    header = ["instance", "group", "image_kind", "measured_lhs", "analytic_rhs", "ratio", "epsilon",
              "eps_quadrature", "eps_interpolation", "eps_monte_carlo", "pass"]
    rows = []
    for inst, rep in results:
        e = rep.epsilon_components
        rows.append([inst.index, inst.region.group.value, inst.spec.kind, rep.measured_lhs, rep.analytic_rhs,
                     rep.ratio, rep.epsilon, e["quadrature"], e["interpolation"], e["monte_carlo"], rep.passed])
    write_csv(os.path.join(out, "theorem1.csv"), header, rows)
    if cfg.plots:
        write_svg_plot(
            os.path.join(out, "theorem1_ratio.svg"),
            [("lhs / rhs", [float(r[0]) for r in rows], [r[5] for r in rows]),
             ("1 + epsilon", [float(r[0]) for r in rows], [1.0 + r[6] for r in rows])],
            title="Contraction bound: measured / bound", xlabel="instance", ylabel="ratio",
        )
    _summary(cfg, res, out, max_ratio=max((r[5] for r in rows), default=0.0),
             max_epsilon=max((r[6] for r in rows), default=0.0))
    return res


# --------------------------------------------------------------------------- theorem 2


def _theorem2(cfg: ExperimentConfig, out: str, threads: int, log) -> ExperimentResult:
    s = cfg.settings
    jobs = []
    for j, (a, b) in enumerate(s["pairs"]):
        jobs.append(("pair", j, cfg.region, cfg.image, _xi(cfg.region.group, a), _xi(cfg.region.group, b)))
    for i in range(s["instances"]):
        rng = suites.instance_rng(cfg.seed, i, stream=2)
        kind = suites.IMAGE_KINDS[i % len(suites.IMAGE_KINDS)]
        reg = suites.random_region(rng, GroupId.SE2)
        spec = suites.random_image_spec(rng, kind, reg)
        jobs.append(("instance", i, reg, spec,
                     suites.random_generator(rng, GroupId.SE2), suites.random_generator(rng, GroupId.SE2)))

    def one(job):
        tag, i, reg, spec, xi, xi2 = job
        f = synthesize(spec, cfg.half_width, cfg.n)
        rep = geometry.theorem2_check(
            f, xi, xi2, reg, cfg.quadrature, _mc_for(cfg, i), cfg.interp,
            experiment=f"{cfg.name}/{tag}_{i:03d}",
            extra={"seed": cfg.seed, "image": spec.to_dict()},
        )
        log(f"[{cfg.name}] {tag} {i}: ratio {rep.ratio:.4g} eps {rep.epsilon:.3g} {'pass' if rep.passed else 'FAIL'}")
        return rep

    reps = parallel_map(one, jobs, threads)
    res = ExperimentResult(cfg.name, out)
    _write_reports(res, out, [(f"reports/{job[0]}_{job[1]:03d}.json", rep, True) for job, rep in zip(jobs, reps)])
    header = ["case", "zeta", "vx", "vy", "zeta2", "vx2", "vy2", "measured_lhs", "analytic_rhs", "ratio",
              "epsilon", "rate", "pass"]
    rows = []
    for job, rep in zip(jobs, reps):
        xi, xi2 = job[4], job[5]
        rows.append([f"{job[0]}_{job[1]:03d}", *xi.coords(), *xi2.coords(), rep.measured_lhs, rep.analytic_rhs,
                     rep.ratio, rep.epsilon, rep.provenance["rate"], rep.passed])
    write_csv(os.path.join(out, "theorem2.csv"), header, rows)
    if cfg.plots and rows:
        xs = [float(k) for k in range(len(rows))]
        write_svg_plot(os.path.join(out, "theorem2_ratio.svg"), [("lhs / rhs", xs, [r[9] for r in rows])],
                       title="Bracket bound: measured / bound", xlabel="case", ylabel="ratio")
    _summary(cfg, res, out)
    return res


# --------------------------------------------------------------------------- curvature


def _curvature(cfg: ExperimentConfig, out: str, threads: int, log) -> ExperimentResult:
    s = cfg.settings
    reg = cfg.region
    xi, xi2 = _xi(GroupId.SE2, s["xi"]), _xi(GroupId.SE2, s["xi2"])
    if s["orthonormalize"]:
        log(f"[{cfg.name}] solving for a unit-norm image with orthonormal pooled fields")
        spec, f, _ = geometry.orthonormal_gaussian(xi, xi2, reg, cfg.quadrature, cfg.half_width, cfg.n,
                                                   interp=cfg.interp)
    else:
        spec = cfg.image
        f = synthesize(spec, cfg.half_width, cfg.n)
    mc = _mc_for(cfg, 0)
    est = geometry.sectional_curvature(f, xi, xi2, reg, cfg.quadrature, mc, cfg.interp)
    ref = geometry.sectional_curvature(f, xi, xi2, reg, cfg.quadrature.refined(2), mc, cfg.interp)
    lin = geometry.sectional_curvature(f, xi, xi2, reg, cfg.quadrature, mc, "bilinear")
    a_x = reg.tx_interval[1] - reg.tx_interval[0]
    a_y = reg.ty_interval[1] - reg.ty_interval[0]
    small = geometry.se2_small_angle_curvature_bound(xi, xi2, a_x) if a_x == a_y else None
    prov = {
        "grid": {"half_width": cfg.half_width, "n": cfg.n},
        "quadrature": cfg.quadrature.to_dict(),
        "interp": cfg.interp,
        "region": reg.to_dict(),
        "xi": xi.to_dict(),
        "xi2": xi2.to_dict(),
        "image": spec.to_dict(),
        "orthonormalized": bool(s["orthonormalize"]),
        "gram": est.to_dict()["gram"],
        "gram_det": est.gram_det,
        "bracket_norm": est.bracket_norm,
        "rate": est.rate,
        "f_norm": est.f_norm,
        "bracket_sign_convention": geometry.BRACKET_SIGN_CONVENTION,
        "small_angle_bound": small,
        "seed": cfg.seed,
    }

    def report(tag, rhs, kind):
        eps = {
            "quadrature": abs(ref.kappa_hat - est.kappa_hat) / rhs if rhs > 0 else 0.0,
            "interpolation": abs(lin.kappa_hat - est.kappa_hat) / rhs if rhs > 0 else 0.0,
            "monte_carlo": 0.0,
        }
        p = dict(prov, bound_kind=kind)
        return geometry.VerificationReport(f"{cfg.name}/{tag}", est.kappa_hat, rhs, eps, CURVATURE_FLOOR, p)

    items = [("reports/curvature_bound.json", report("curvature_bound", est.bound, "exact_rate"), True)]
    if small is not None:
        items.append(("reports/small_angle_bound.json", report("small_angle_bound", small, "small_angle"), True))
    res = ExperimentResult(cfg.name, out)
    _write_reports(res, out, items)
    header = ["kappa_hat", "bound", "small_angle_bound", "gram_11", "gram_12", "gram_22", "gram_det",
              "bracket_norm", "rate", "f_norm"]
    g = est.gram
    write_csv(os.path.join(out, "curvature.csv"), header,
              [[est.kappa_hat, est.bound, small if small is not None else "", float(g[0, 0]), float(g[0, 1]),
                float(g[1, 1]), est.gram_det, est.bracket_norm, est.rate, est.f_norm]])
    log(f"[{cfg.name}] kappa_hat {est.kappa_hat:.6g}, bound {est.bound:.6g}, small-angle bound {small}")
    _summary(cfg, res, out, kappa_hat=est.kappa_hat, bound=est.bound, small_angle_bound=small)
    return res


# --------------------------------------------------------------------------- signatures


def _signature_invariance(cfg: ExperimentConfig, out: str, threads: int, log) -> ExperimentResult:
    s = cfg.settings
    reg = cfg.region
    templates = signatures.draw_templates(s["templates"], cfg.half_width, cfg.n, s["template_seed"], s["correlation"])
    nonlins = [signatures.Nonlinearity.parse(x) for x in s["nonlinearities"]]
    f = synthesize(cfg.image, cfg.half_width, cfg.n)
    r = signatures.responses(f, templates, reg, cfg.quadrature)
    base = signatures.signature(f, templates, nonlins, reg, cfg.quadrature)
    l2 = np.linalg.norm(r, axis=1)
    sq = signatures.Nonlinearity("abs_power", 2.0)(r).mean(axis=1)
    l2_gap = float(np.max(np.abs(np.sqrt(r.shape[1] * sq) - l2) / np.maximum(l2, 1e-300)))
    claimed = reg.group is GroupId.ROTATIONS and reg.full_circle

    def one(i):
        rng = suites.instance_rng(cfg.seed, i, stream=3)
        angle = float(rng.uniform(-math.pi, math.pi))
        if reg.group is GroupId.ROTATIONS:
            g = GroupElement(GroupId.ROTATIONS, angle)
        elif reg.group is GroupId.SE2:
            g = GroupElement(GroupId.SE2, angle)
        else:
            g = suites.random_element(rng, reg)
        moved = signatures.signature(act(g, f), templates, nonlins, reg, cfg.quadrature)
        err = signatures.relative_difference(base.values, moved.values)
        rep = geometry.VerificationReport(
            f"{cfg.name}/transform_{i:03d}", err, s["tolerance"], {}, 0.0,
            {
                "group_element": g.to_dict(),
                "region": reg.to_dict(),
                "quadrature": cfg.quadrature.to_dict(),
                "grid": {"half_width": cfg.half_width, "n": cfg.n},
                "image": cfg.image.to_dict(),
                "templates": {"count": len(templates), "seed": templates.seed, "correlation": templates.correlation},
                "nonlinearities": [e.name for e in nonlins],
                "invariance_claimed": claimed,
                "tolerance_source": "declared tolerance for full-compact-group pooling",
                "seed": cfg.seed,
            },
        )
        log(f"[{cfg.name}] transform {i}: invariance error {err:.3g}{'' if claimed else ' (diagnostic)'}")
        return g, rep

    results = parallel_map(one, range(s["rotations"]), threads)
    res = ExperimentResult(cfg.name, out)
    _write_reports(res, out, [(f"reports/transform_{i:03d}.json", rep, claimed) for i, (_, rep) in enumerate(results)])
    signatures.export_signature_csv(os.path.join(out, "signature.csv"), base)
    write_csv(os.path.join(out, "invariance.csv"), ["transform", "theta", "tx", "ty", "invariance_error", "claimed", "pass"],
              [[i, g.theta, g.tx, g.ty, rep.measured_lhs, claimed, rep.passed] for i, (g, rep) in enumerate(results)])
    _summary(cfg, res, out, l2_pooling_identity_gap=l2_gap, invariance_claimed=claimed)
    return res


# --------------------------------------------------------------------------- contraction profile


def _contraction(cfg: ExperimentConfig, out: str, threads: int, log) -> ExperimentResult:
    s = cfg.settings
    group = GroupId.SE2 if s["theta"] is not None else GroupId.TRANSLATIONS
    xi = _xi(group, s["xi"])
    f = synthesize(cfg.image, cfg.half_width, cfg.n)

    def one(a):
        return geometry.contraction_profile(f, [a], xi, s["t_values"], cfg.quadrature, _mc_for(cfg, 0),
                                            s["theta"], cfg.interp)

    rows = [row for chunk in parallel_map(one, s["a_values"], threads) for row in chunk]
    res = ExperimentResult(cfg.name, out)
    items = []
    for k, row in enumerate(rows):
        row.report.experiment = f"{cfg.name}/row_{k:03d}"
        items.append((f"reports/row_{k:03d}.json", row.report, True))
    _write_reports(res, out, items)
    header = ["a", "t", "raw", "pooled", "ratio", "theorem1_rhs", "epsilon", "pass"]
    write_csv(os.path.join(out, "profile.csv"), header, [row.as_dict() for row in rows])
    trend = {}
    for t in s["t_values"]:
        ratios = [row.ratio for row in rows if row.t == float(t)]
        trend[repr(float(t))] = all(b <= a_ + 1e-12 for a_, b in zip(ratios, ratios[1:]))
    if cfg.plots:
        series = []
        for a in s["a_values"]:
            sel = [row for row in rows if row.a == float(a) and row.t != 0.0]
            series.append((f"a = {a:g}", [row.t for row in sel], [row.ratio for row in sel]))
        write_svg_plot(os.path.join(out, "profile_ratio.svg"), series,
                       title="Pooled / raw displacement", xlabel="t", ylabel="pooled / raw")
    log(f"[{cfg.name}] {len(rows)} rows, ratio non-increasing in a: {trend}")
    _summary(cfg, res, out, ratio_nonincreasing_in_a=trend)
    return res


# --------------------------------------------------------------------------- dispatch


_RUNNERS = {
    "theorem1_sweep": _theorem1_sweep,
    "theorem2_check": _theorem2,
    "curvature_se2": _curvature,
    "signature_invariance": _signature_invariance,
    "contraction_profile": _contraction,
}


def run_experiment(cfg: ExperimentConfig, out: str, threads: int | None = None, quiet: bool = False) -> ExperimentResult:
    threads = thread_count() if threads is None else threads
    log = _Log(quiet)
    os.makedirs(out, exist_ok=True)
    if cfg.experiment != "full_suite":
        return _RUNNERS[cfg.experiment](cfg, out, threads, log)

    def sub(child):
        inner_threads = 1 if threads > 1 else threads
        return _RUNNERS[child.experiment](child, os.path.join(out, child.name), inner_threads, log)

    res = ExperimentResult(cfg.name, out)
    res.children = parallel_map(sub, cfg.experiments, threads)
    write_json(os.path.join(out, "summary.json"), {
        "experiment": "full_suite",
        "name": cfg.name,
        "config": cfg.to_dict(),
        "experiments": [{"name": c.name, "pass": c.passed, "reports": c.index()} for c in res.children],
        "pass": res.passed,
    })
    return res
