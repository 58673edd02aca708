"""TOML configuration for runs and experiments.

A config file has four sections, all optional:

    [topology]      rows, cols
    [error_model]   base_error, local_strength, nonlocal_strength,
                    collision_width, feasible_width, detune ([min, max]
                    pairs), nonlocal_density, nonlocal_radius
    [bcd]           max_epochs, inner_iterations, initial_radius, rsd,
                    order_method, tol, hypothesis ("true" or "local"),
                    cost_k, cost_t
    [experiment]    name, replicas, rsd_values, methods, sizes
                    (["2x2", ...]), nonlocal_max
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bcd import BcdConfig
from .error_model import SamplingRanges
from .topology import ChipTopology


@dataclass(frozen=True)
class TopologySettings:
    rows: int = 3
    cols: int = 3

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("topology rows/cols must be >= 1")


@dataclass(frozen=True)
class BcdSettings:
    """Serializable face of :class:`freqcal.bcd.BcdConfig`."""

    max_epochs: int = 20
    inner_iterations: int = 5
    initial_radius: float | None = None
    rsd: float = 0.0
    order_method: str = "nna"
    tol: float = 1e-6
    hypothesis: str = "true"
    cost_k: int = 100
    cost_t: float = 2.0

    def __post_init__(self):
        if self.hypothesis not in ("true", "local"):
            raise ValueError("hypothesis must be 'true' or 'local'")

    def resolve_hypothesis(self, topology: ChipTopology, name: str | None = None):
        name = name or self.hypothesis
        if name == "true":
            return topology.true_pairs()
        if name == "local":
            return topology.local_pairs()
        raise ValueError(f"unknown hypothesis kind: {name!r}")

    def to_bcd_config(self, topology: ChipTopology, **overrides) -> BcdConfig:
        hyp_name = overrides.pop("hypothesis", None)
        cfg = BcdConfig(
            max_epochs=self.max_epochs,
            inner_iterations=self.inner_iterations,
            initial_radius=self.initial_radius,
            rsd=self.rsd,
            order_method=self.order_method,
            tol=self.tol,
            hypothesis=self.resolve_hypothesis(topology, hyp_name),
            cost_k=self.cost_k,
            cost_t=self.cost_t,
        )
        if overrides:
            cfg = replace(cfg, **overrides)
        return cfg


@dataclass(frozen=True)
class ExperimentSettings:
    name: str = "noise"
    replicas: int = 50
    rsd_values: tuple[float, ...] = (0.0, 0.2)
    methods: tuple[str, ...] = ("nna", "random")
    sizes: tuple[tuple[int, int], ...] = ((2, 2), (3, 3), (4, 4), (5, 5), (6, 6))
    nonlocal_max: tuple[float, ...] = (0.0, 0.08, 0.2, 0.4)

    def __post_init__(self):
        if self.name not in ("noise", "ordering", "scaling", "mismatch"):
            raise ValueError(f"unknown experiment name: {self.name!r}")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if any(v < 0 for v in self.rsd_values):
            raise ValueError("rsd values must be non-negative")
        if any(v < 0 for v in self.nonlocal_max):
            raise ValueError("nonlocal_max values must be non-negative")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologySettings = field(default_factory=TopologySettings)
    error_model: SamplingRanges = field(default_factory=SamplingRanges)
    bcd: BcdSettings = field(default_factory=BcdSettings)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)


def _parse_size(s) -> tuple[int, int]:
    if isinstance(s, str):
        r, _, c = s.lower().partition("x")
        return int(r), int(c)
    r, c = s
    return int(r), int(c)


def _build(cls, section: dict, transforms: dict | None = None):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in section.items():
        if transforms and key in transforms:
            value = transforms[key](value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {"topology", "error_model", "bcd", "experiment"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    pair = lambda v: (float(v[0]), float(v[1]))
    return ExperimentConfig(
        topology=_build(TopologySettings, data.get("topology", {})),
        error_model=_build(
            SamplingRanges,
            data.get("error_model", {}),
            transforms={
                k: pair
                for k in ("base_error", "local_strength", "nonlocal_strength",
                          "collision_width", "feasible_width", "detune")
            },
        ),
        bcd=_build(BcdSettings, data.get("bcd", {})),
        experiment=_build(
            ExperimentSettings,
            data.get("experiment", {}),
            transforms={
                "rsd_values": lambda v: tuple(float(x) for x in v),
                "methods": tuple,
                "sizes": lambda v: tuple(_parse_size(s) for s in v),
                "nonlocal_max": lambda v: tuple(float(x) for x in v),
            },
        ),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))
