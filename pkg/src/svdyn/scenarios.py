"""Registered scenarios and the flat JSON configuration that drives the CLI."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .domains import Box, Circle, Grid
from .fields import AffineBallField, CircleAffineField, SetValuedField
from .stochastic import NoiseModel, StepSchedule

SCHEMA_VERSION = 1

#: set-valued window around 0 on the circle
CIRCLE_EPS = 1e-9


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def scenario_circle():
    """``F(x) = {1 - x}`` on ``(0, 1)`` and ``F(0) = [0, 1]`` on the unit circle."""
    F = CircleAffineField(1.0, -1.0, period=1.0, eps=CIRCLE_EPS, growth_c=2.0,
                          lipschitz_hint=1.0, name="circle")
    return F, Circle(1.0)


def scenario_contraction_2d():
    """``F(x) = {-x} + B(0, 0.05)`` on ``[-1, 1]^2``."""
    F = AffineBallField(-np.eye(2), np.zeros(2), 0.05, growth_c=1.05, name="contraction_2d")
    return F, Box((-1.0, -1.0), (1.0, 1.0))


SCENARIOS = {
    "circle": scenario_circle,
    "contraction_2d": scenario_contraction_2d,
}

DEFAULT_X0 = {"circle": [0.5], "contraction_2d": [0.9, 0.9]}
DEFAULT_CELLS = {"circle": [100], "contraction_2d": [40, 40]}


def get_scenario(name: str) -> tuple[SetValuedField, Box | Circle]:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None


@dataclass
class ScenarioConfig:
    """Flat run configuration; every key can be overridden by a CLI flag."""

    scenario: str = "circle"
    x0: list | None = None
    cells: list | None = None
    h: float = 0.01
    T: float = 1.0
    a: float = 1.0
    n0: float = 0.0
    alpha: float = 0.7
    noise: str = "uniform_ball"
    noise_radius: float = 0.1
    noise_sigma: float = 0.05
    noise_cap: float = 0.1
    n: int = 100_000
    ensemble: int = 1
    seed: int = 0
    jobs: int = 1
    radii: list = field(default_factory=lambda: [0.05])
    center: list | None = None
    mass_threshold: float = 0.9
    terminal_radius: float = 0.05
    checkpoints: list = field(default_factory=lambda: [100, 10_000])
    noise_stat_n: list = field(default_factory=lambda: [100, 1000, 10_000])
    out: str = "out"
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {self.schema}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.h <= 0 or self.T <= 0:
            raise ConfigError("h and T must be positive")
        if self.n < 1 or self.ensemble < 1 or self.jobs < 1:
            raise ConfigError("n, ensemble and jobs must be >= 1")
        if not 0 <= self.mass_threshold <= 1:
            raise ConfigError("mass_threshold must lie in [0, 1]")
        if any(r <= 0 for r in self.radii):
            raise ConfigError("radii must be positive")
        try:
            self.step_schedule()
            self.noise_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def override(self, **kw) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)

    def field_and_domain(self):
        return get_scenario(self.scenario)

    def start(self) -> np.ndarray:
        return np.asarray(self.x0 if self.x0 is not None else DEFAULT_X0[self.scenario], dtype=float)

    def grid(self) -> Grid:
        _, domain = self.field_and_domain()
        return Grid(domain, tuple(self.cells or DEFAULT_CELLS[self.scenario]))

    def target(self) -> np.ndarray:
        _, domain = self.field_and_domain()
        return np.asarray(self.center if self.center is not None else [0.0] * domain.dim, dtype=float)

    def step_schedule(self) -> StepSchedule:
        return StepSchedule(self.a, self.n0, self.alpha)

    def noise_model(self) -> NoiseModel:
        if self.noise == "uniform_ball":
            return NoiseModel.uniform_ball(self.noise_radius)
        if self.noise == "gaussian_truncated":
            return NoiseModel.gaussian_truncated(self.noise_sigma, self.noise_cap)
        if self.noise == "zero":
            return NoiseModel.zero()
        raise ConfigError(f"unknown noise kind {self.noise!r}")
