"""Experiment configuration: JSON parsing, schema validation and defaults."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .errors import DegenerateInputError, InvalidArgumentError
from .groups import GroupId
from .haar import MonteCarloSpec, PoolingRegion
from .images import ImageSpec
from .pooling import QuadratureSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "check_semantics", "config_schema", "EXPERIMENTS"]

EXPERIMENTS = (
    "theorem1_sweep",
    "theorem2_check",
    "curvature_se2",
    "signature_invariance",
    "contraction_profile",
    "full_suite",
)

# keys a full_suite passes down to its sub-experiments unless they set their own
_INHERITED = ("seed", "grid", "interp", "plots", "monte_carlo")

_DEFAULT_IMAGES = {
    "theorem2_check": {"kind": "gaussian", "sigma": 0.6, "center": [-0.5, -0.5], "margin": 0.2},
    "curvature_se2": {"kind": "gaussian", "sigma": 0.55, "center": [1.0, 0.0], "margin": 0.2},
    "signature_invariance": {
        "kind": "gabor", "sigma": 0.8, "center": [0.7, -0.4], "frequency": 0.6,
        "orientation": 0.3, "margin": 0.5,
    },
    "contraction_profile": {"kind": "gaussian", "sigma": 0.5, "center": [-0.75, -0.75], "margin": 0.2},
}

_DEFAULT_REGIONS = {
    "theorem2_check": ("se2", {"theta": [-0.5, 0.5], "tx": [0.0, 1.0], "ty": [0.0, 1.0]}),
    "curvature_se2": ("se2", {"theta": [-0.1, 0.1], "tx": [0.0, 1.0], "ty": [0.0, 1.0]}),
    "signature_invariance": ("rotations", {"theta": [-math.pi, math.pi]}),
}

_DEFAULT_SECTIONS = {
    "theorem1_sweep": ("theorem1", {
        "instances": 10,
        "groups": ["translations", "se2"],
        "image_kinds": ["gaussian", "anisotropic_gaussian", "gabor", "bandlimited_noise"],
        "displacement": [0.1, 0.3],
    }),
    "theorem2_check": ("theorem2", {"instances": 0, "pairs": [[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]]}),
    "curvature_se2": ("curvature", {"xi": [1.0, 0.0, 0.0], "xi2": [0.0, 1.0, 0.0], "orthonormalize": True}),
    "signature_invariance": ("signatures", {
        "templates": 8,
        "template_seed": None,
        "correlation": 0.25,
        "nonlinearities": ["sigmoid", "relu", "modulus", "abs_power(2)"],
        "rotations": 5,
        "tolerance": 1e-2,
    }),
    "contraction_profile": ("contraction", {
        "a_values": [0.25, 0.5, 1.0, 1.5],
        "t_values": [0.0, 0.05, 0.1, 0.2],
        "xi": [0.0, 1.0, 0.0],
        "theta": None,
    }),
}

_DEFAULT_SUITE = [
    {"experiment": "theorem1_sweep", "theorem1": {"instances": 4}},
    {"experiment": "theorem2_check", "theorem2": {"instances": 2}},
    {"experiment": "curvature_se2"},
    {"experiment": "signature_invariance", "signatures": {"rotations": 2}},
    {"experiment": "contraction_profile"},
]


class ConfigError(InvalidArgumentError):
    """Invalid configuration; the message names the offending line or field."""


def config_schema() -> dict:
    text = resources.files("orbitpool").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def _field_path(err: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return path.lstrip(".") or "<root>"


def validate_raw(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(config_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ConfigError(f"field {_field_path(err)}: {err.message}")


@dataclass
class ExperimentConfig:
    experiment: str
    name: str
    seed: int
    output_dir: str | None
    plots: bool
    interp: str
    half_width: float
    n: int
    group: GroupId | None
    region: PoolingRegion | None
    image: ImageSpec | None
    quadrature: QuadratureSpec
    monte_carlo: MonteCarloSpec
    settings: dict = field(default_factory=dict)
    experiments: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Fully resolved configuration (recorded next to the reports)."""
        d = {
            "experiment": self.experiment,
            "name": self.name,
            "seed": self.seed,
            "plots": self.plots,
            "interp": self.interp,
            "grid": {"half_width": self.half_width, "n": self.n},
            "quadrature": self.quadrature.to_dict(),
            "monte_carlo": self.monte_carlo.to_dict(),
            "settings": self.settings,
        }
        if self.group is not None:
            d["group"] = self.group.value
        if self.region is not None:
            d["region"] = self.region.to_dict()
        if self.image is not None:
            d["image"] = self.image.to_dict()
        if self.experiments:
            d["experiments"] = [c.to_dict() for c in self.experiments]
        return d


def _region_from(group: GroupId, d: dict) -> PoolingRegion:
    try:
        return PoolingRegion(
            group,
            theta_interval=tuple(d["theta"]) if "theta" in d else None,
            tx_interval=tuple(d["tx"]) if "tx" in d else None,
            ty_interval=tuple(d["ty"]) if "ty" in d else None,
            shear_interval=tuple(d["shear"]) if "shear" in d else None,
        )
    except InvalidArgumentError as exc:
        raise ConfigError(f"field region: {exc}") from None


def _resolve(raw: dict, parent: dict | None, seed_override: int | None, index: int | None) -> ExperimentConfig:
    raw = copy.deepcopy(raw)
    if parent is not None:
        for key in _INHERITED:
            if key in parent and key not in raw:
                raw[key] = copy.deepcopy(parent[key])
    exp = raw["experiment"]
    seed = int(raw.get("seed", 0)) if seed_override is None else int(seed_override)
    name = raw.get("name") or (exp if index is None else f"{index:02d}_{exp}")
    grid = raw.get("grid", {})
    q = {"n_theta": 9, "n_x": 9, "n_y": 9}
    if exp == "signature_invariance":
        q = {"n_theta": 72, "n_x": 1, "n_y": 1}
    q.update(raw.get("quadrature", {}))
    mc = {"sample_count": 1_000_000, "seed": seed, "batch": 250_000}
    mc.update(raw.get("monte_carlo", {}))

    group = None
    region = None
    if exp in _DEFAULT_REGIONS or "region" in raw or "group" in raw:
        dgroup, dregion = _DEFAULT_REGIONS.get(exp, ("translations", {"tx": [0.0, 1.0], "ty": [0.0, 1.0]}))
        group = GroupId(raw.get("group", dgroup))
        if exp == "curvature_se2" and group is not GroupId.SE2:
            raise ConfigError("field group: curvature_se2 requires the se2 group")
        if "region" in raw:
            region = _region_from(group, raw["region"])
        elif exp != "theorem1_sweep":
            region = _region_from(group, dregion)
    image = None
    if "image" in raw:
        image = ImageSpec.from_dict(raw["image"])
    elif exp in _DEFAULT_IMAGES:
        image = ImageSpec.from_dict(_DEFAULT_IMAGES[exp])

    settings = {}
    if exp in _DEFAULT_SECTIONS:
        key, defaults = _DEFAULT_SECTIONS[exp]
        settings = copy.deepcopy(defaults)
        settings.update(raw.get(key, {}))
        if exp == "signature_invariance" and settings["template_seed"] is None:
            settings["template_seed"] = seed
        if exp == "theorem2_check" and "theorem2" in raw and "pairs" not in raw["theorem2"]:
            settings["pairs"] = []
    if exp == "contraction_profile":
        group = GroupId.SE2 if settings["theta"] is not None else GroupId.TRANSLATIONS

    cfg = ExperimentConfig(
        experiment=exp,
        name=name,
        seed=seed,
        output_dir=raw.get("output_dir"),
        plots=bool(raw.get("plots", True)),
        interp=raw.get("interp", "bicubic"),
        half_width=float(grid.get("half_width", 6.0)),
        n=int(grid.get("n", 512)),
        group=group,
        region=region,
        image=image,
        quadrature=QuadratureSpec(**q),
        monte_carlo=MonteCarloSpec(**mc),
        settings=settings,
        raw=raw,
    )
    if exp == "full_suite":
        subs = raw.get("experiments") or _DEFAULT_SUITE
        inherit = {k: raw[k] for k in _INHERITED if k in raw}
        if seed_override is not None:
            inherit["seed"] = seed
        for i, sub in enumerate(subs):
            if sub["experiment"] == "full_suite":
                raise ConfigError(f"field experiments[{i}].experiment: full_suite cannot be nested")
            cfg.experiments.append(_resolve(sub, inherit, seed_override, i))
        names = [c.name for c in cfg.experiments]
        if len(set(names)) != len(names):
            raise ConfigError("field experiments: sub-experiment names must be unique")
    return cfg


def check_semantics(cfg: ExperimentConfig) -> None:
    """Cheap pre-flight checks that need resolved values (grid, images)."""
    from .images import MIN_RESOLUTION, synthesize

    for c in cfg.experiments or [cfg]:
        if c.n < MIN_RESOLUTION:
            raise DegenerateInputError(
                f"{c.name}: grid resolution n={c.n} below minimum {MIN_RESOLUTION} "
                "(support margin cannot be resolved)"
            )
        if c.image is not None:
            synthesize(c.image, c.half_width, c.n)


def parse_config(raw, seed: int | None = None) -> ExperimentConfig:
    """Validate a decoded JSON document and resolve defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("field <root>: configuration must be a JSON object")
    validate_raw(raw)
    return _resolve(raw, None, seed, None)


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(raw, seed)
