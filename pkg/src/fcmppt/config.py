"""INI-style configuration documents for the whole pipeline.

One file may hold any of the sections ``stack``, ``converter``,
``controller`` (plus per-method ``controller.<method>`` overrides),
``scenario``, ``dataset``, ``anfis``, ``ica`` and ``paths``.  Keys match
the dataclass field names; missing keys keep their defaults and unknown
keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from importlib import resources

from .controllers import METHODS, ControllerConfig
from .converter import ConverterParams
from .errors import ConfigError, DomainError
from .fuelcell import StackParams
from .fuzzy import DEFAULT_RESOLUTION, RuleTable
from .ica import IcaConfig
from .oracle import testing_grid, training_grid
from .simulation import Scenario, temperature_step_scenario

DEFAULT_SEED = 42


@dataclass(frozen=True)
class DatasetConfig:
    t_min: float = 293.0
    t_max: float = 363.0
    n_t: int = 25
    lambda_min: float = 9.0
    lambda_max: float = 14.0
    n_lambda: int = 10
    n_test_t: int = 10
    n_test_lambda: int = 5

    def __post_init__(self):
        if self.n_t < 2 or self.n_lambda < 2:
            raise ConfigError("dataset grids need at least 2 points per axis")
        if self.n_test_t < 1 or self.n_test_lambda < 1:
            raise ConfigError("test grid needs at least 1 point per axis")
        if not (self.t_min < self.t_max and self.lambda_min < self.lambda_max):
            raise ConfigError("dataset ranges must be increasing")

    def train_grids(self):
        return training_grid((self.t_min, self.t_max), (self.lambda_min, self.lambda_max),
                             self.n_t, self.n_lambda)

    def test_grids(self):
        return testing_grid((self.t_min, self.t_max), (self.lambda_min, self.lambda_max),
                            self.n_t, self.n_lambda, self.n_test_t, self.n_test_lambda)


@dataclass(frozen=True)
class AnfisConfig:
    epochs: int = 70
    learning_rate: float = 0.01
    decay: float = 0.9
    ridge: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("anfis epochs must be >= 1")


@dataclass(frozen=True)
class PathsConfig:
    """Optional artifact locations; relative paths resolve against the config file."""

    train_data: str = ""
    test_data: str = ""
    anfis_model: str = ""
    ica_model: str = ""
    rules: str = ""


@dataclass
class LabConfig:
    stack: StackParams = field(default_factory=StackParams)
    converter: ConverterParams = field(default_factory=ConverterParams)
    controllers: dict = field(default_factory=lambda: {
        m: ControllerConfig.for_method(m) for m in METHODS})
    method: str = "anfis"
    scenario: Scenario = None
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    anfis: AnfisConfig = field(default_factory=AnfisConfig)
    ica: IcaConfig = field(default_factory=IcaConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    rules: RuleTable = None
    resolution: int = DEFAULT_RESOLUTION
    base_dir: str = "."

    def __post_init__(self):
        if self.scenario is None:
            self.scenario = temperature_step_scenario(self.method, DEFAULT_SEED)

    def resolve(self, path):
        """Absolute form of a configured path, or None when unset."""
        if not path:
            return None
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def with_seed(self, seed):
        scenario = dataclasses.replace(self.scenario, seed=seed)
        return dataclasses.replace(self, scenario=scenario,
                                   ica=dataclasses.replace(self.ica, rng_seed=seed))

    def with_method(self, method):
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
        return dataclasses.replace(self, method=method,
                                   scenario=self.scenario.with_method(method))


def parse_schedule(text):
    """``"0:323.15, 4:343.15"`` -> ((0.0, 323.15), (4.0, 343.15))."""
    points = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            t, v = item.split(":")
            points.append((float(t), float(v)))
        except ValueError:
            raise ConfigError(f"bad schedule entry {item!r}; expected t:value") from None
    if not points:
        raise ConfigError("schedule is empty")
    return tuple(points)


def format_schedule(points):
    return ", ".join(f"{t:g}:{v:g}" for t, v in points)


def _coerce(default, text, key):
    try:
        if isinstance(default, bool):
            return text.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(x) for x in text.replace(",", " ").split())
        return text.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from None


def _build(cls, section, name, extra=()):
    """Instantiate dataclass ``cls`` from a config section, rejecting unknown keys."""
    fields = {f.name: f for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, text in section.items():
        if key in extra:
            continue
        if key not in fields:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        f = fields[key]
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        kwargs[key] = _coerce(default, text, f"{name}.{key}")
    try:
        return cls(**kwargs)
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


_CONTROLLER_EXTRA = ("method", "rules", "resolution")
_SCENARIO_KEYS = ("name", "duration", "profile_T", "profile_lambda", "seed",
                  "sensor_noise", "initial_duty")
KNOWN_SECTIONS = {"stack", "converter", "controller", "scenario", "dataset", "anfis",
                  "ica", "paths"} | {f"controller.{m}" for m in METHODS}


def _read(path):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parser


def default_stack_path():
    return str(resources.files("fcmppt").joinpath("data/default_stack.ini"))


def bundled_scenario(name):
    """Path of a shipped scenario file, e.g. ``temperature_step``."""
    path = resources.files("fcmppt").joinpath(f"data/scenarios/{name}.ini")
    if not path.is_file():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return str(path)


def load_config(path=None) -> LabConfig:
    """Parse a config file (or the bundled default stack) into a LabConfig."""
    if path is None:
        path = default_stack_path()
    parser = _read(path)
    unknown = set(parser.sections()) - KNOWN_SECTIONS
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    sec = {name: dict(parser[name]) if parser.has_section(name) else {}
           for name in KNOWN_SECTIONS}
    base_dir = os.path.dirname(os.path.abspath(path))

    stack = _build(StackParams, sec["stack"], "stack")
    converter = _build(ConverterParams, sec["converter"], "converter")

    common = sec["controller"]
    method = common.get("method", "anfis").strip()
    if method not in METHODS:
        raise ConfigError(f"[controller] unknown method {method!r}; choose from {METHODS}")
    controllers = {}
    for m in METHODS:
        merged = {**{k: v for k, v in common.items() if k not in _CONTROLLER_EXTRA},
                  **sec[f"controller.{m}"]}
        overrides = {k: _coerce(getattr(ControllerConfig(), k, 0.0), v, f"controller.{k}")
                     for k, v in merged.items()
                     if k in {f.name for f in dataclasses.fields(ControllerConfig)}}
        bad = set(merged) - set(overrides)
        if bad:
            raise ConfigError(f"[controller] unknown key(s) {sorted(bad)}")
        controllers[m] = ControllerConfig.for_method(m, **overrides)
    resolution = _coerce(DEFAULT_RESOLUTION, common.get("resolution", str(DEFAULT_RESOLUTION)),
                         "controller.resolution")

    paths = _build(PathsConfig, sec["paths"], "paths")
    rules_path = common.get("rules", "").strip() or paths.rules
    cfg = LabConfig(stack=stack, converter=converter, controllers=controllers,
                    method=method, dataset=_build(DatasetConfig, sec["dataset"], "dataset"),
                    anfis=_build(AnfisConfig, sec["anfis"], "anfis"),
                    ica=_build(IcaConfig, sec["ica"], "ica"), paths=paths,
                    resolution=resolution, base_dir=base_dir)
    if rules_path:
        cfg.rules = RuleTable.from_file(cfg.resolve(rules_path))
    if sec["scenario"]:
        cfg.scenario = _scenario(sec["scenario"], method)
    else:
        cfg.scenario = temperature_step_scenario(method, DEFAULT_SEED)
    return cfg


def _scenario(section, method):
    bad = set(section) - set(_SCENARIO_KEYS)
    if bad:
        raise ConfigError(f"[scenario] unknown key(s) {sorted(bad)}")
    for key in ("duration", "profile_T", "profile_lambda"):
        if key not in section:
            raise ConfigError(f"[scenario] missing {key!r}")
    initial = section.get("initial_duty", "").strip()
    return Scenario(
        duration=_coerce(1.0, section["duration"], "scenario.duration"),
        profile_T=parse_schedule(section["profile_T"]),
        profile_lambda=parse_schedule(section["profile_lambda"]),
        method=method,
        seed=_coerce(0, section.get("seed", str(DEFAULT_SEED)), "scenario.seed"),
        sensor_noise=_coerce(0.0, section.get("sensor_noise", "0.005"),
                             "scenario.sensor_noise"),
        initial_duty=_coerce(0.0, initial, "scenario.initial_duty") if initial else None,
        name=section.get("name", "").strip())
