"""Run configuration: TOML file plus command-line overrides.

Keys mirror the command-line flags (``--gamma-r`` <-> ``gamma_r``)::

    model = "collective"      # full | single | collective | meanfield
    setup = "II"
    n_atoms = 20
    gamma_r = 0.5
    gamma_l = 0.5
    g = 1.0
    omega = 1.0
    phi1 = 6.283185307179586
    t_max = 50.0
    samples = 501

    [tolerances]
    rtol = 1e-9

    [[sweep]]
    name = "omega"
    min = 0.1
    max = 3.0
    steps = 30
    log = false

For ``collective`` and ``meanfield`` runs, ``gamma_r + gamma_l`` is the
rescaled collective rate ``Gamma = N * gamma`` and times are in ``1/Gamma``.
"""
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .waveguide import ModelSpec, collective_spec

MODELS = ("full", "single", "collective", "meanfield")
FORMATS = ("csv", "json")
SWEEPABLE = ("omega", "g", "n_atoms", "gamma_r", "gamma_l", "phi1", "phi_gap")
TOLERANCE_KEYS = ("rtol", "atol", "null_tol")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepAxis:
    name: str
    min: float
    max: float
    steps: int
    log: bool = False

    def values(self):
        if self.steps == 1:
            vals = np.array([self.min])
        elif self.log:
            vals = np.geomspace(self.min, self.max, self.steps)
        else:
            vals = np.linspace(self.min, self.max, self.steps)
        if self.name == "n_atoms":
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]


@dataclass(frozen=True)
class RunConfig:
    model: str = "single"
    setup: str = "I"
    n_atoms: int = 1
    gamma_r: float = 0.5
    gamma_l: float = 0.5
    g: float = 0.0
    omega: float = 0.5
    phi1: float = 2 * math.pi
    phi_gap: float = 2 * math.pi
    omega0: float = 1.0
    t_max: float = 20.0
    samples: int = 201
    format: str = "csv"
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: {"rtol": 1e-9, "atol": 1e-11, "null_tol": 1e-10})
    sweep: tuple = ()

    def resolved(self):
        """Canonical JSON-ready form embedded in every output header."""
        d = asdict(self)
        d["sweep"] = [asdict(a) for a in self.sweep]
        d["tolerances"] = dict(sorted(self.tolerances.items()))
        return d

    def with_point(self, point):
        return replace(self, **point)

    def grid(self):
        """Sweep points in row-major order of the declared axes."""
        if not self.sweep:
            return [{}]
        points = [{}]
        for axis in self.sweep:
            points = [{**p, axis.name: v} for p in points for v in axis.values()]
        return points

    @property
    def n(self):
        return 1 if self.setup == "I" else 2

    @property
    def Gamma(self):
        return self.gamma_r + self.gamma_l

    def model_spec(self):
        if self.model == "collective":
            if abs(self.gamma_r - self.gamma_l) > 1e-12 * self.Gamma:
                raise ConfigError("field 'gamma_r'/'gamma_l': collective model needs gamma_r == gamma_l")
            return collective_spec(self.n_atoms, self.omega, self.g, self.setup, self.Gamma, self.omega0)
        N = 1 if self.model == "single" else self.n_atoms
        phi = (self.phi1,) + (self.phi_gap,) * (N - 1)
        return ModelSpec(self.setup, N, self.gamma_r, self.gamma_l, self.g, self.omega, phi, self.omega0)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name, value):
    kind = _FIELD_TYPES[name]
    if kind is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ConfigError(f"field '{name}': expected an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"field '{name}': expected an integer, got {value!r}") from None
    if kind is float:
        if isinstance(value, bool):
            raise ConfigError(f"field '{name}': expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"field '{name}': expected a number, got {value!r}") from None
    value = str(value)
    if name == "setup":
        value = {"1": "I", "2": "II"}.get(value, value)
    return value


def _parse_sweep(raw):
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise ConfigError("field 'sweep': expected a list of axis tables")
    axes = []
    for i, ax in enumerate(raw):
        where = f"sweep[{i}]"
        if not isinstance(ax, dict):
            raise ConfigError(f"field '{where}': expected a table")
        unknown = set(ax) - {"name", "min", "max", "steps", "log"}
        if unknown:
            raise ConfigError(f"field '{where}': unknown keys {sorted(unknown)}")
        name = ax.get("name")
        if name not in SWEEPABLE:
            raise ConfigError(f"field '{where}.name': {name!r} is not a sweepable field {SWEEPABLE}")
        try:
            axis = SweepAxis(name, float(ax["min"]), float(ax["max"]), int(ax.get("steps", 1)), bool(ax.get("log", False)))
        except KeyError as exc:
            raise ConfigError(f"field '{where}.{exc.args[0]}': missing") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field '{where}': {exc}") from None
        if axis.steps < 1:
            raise ConfigError(f"field '{where}.steps': must be >= 1")
        if axis.log and (axis.min <= 0 or axis.max <= 0):
            raise ConfigError(f"field '{where}': log axes need positive bounds")
        axes.append(axis)
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ConfigError("field 'sweep': duplicate axis names")
    return tuple(axes)


def build_config(data, overrides=None):
    """Validate a raw mapping (file contents) and apply flag overrides."""
    data = dict(data or {})
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kwargs = {}
    for key, value in data.items():
        if key == "sweep":
            kwargs["sweep"] = _parse_sweep(value)
        elif key == "tolerances":
            if not isinstance(value, dict):
                raise ConfigError("field 'tolerances': expected a table")
            bad = set(value) - set(TOLERANCE_KEYS)
            if bad:
                raise ConfigError(f"field 'tolerances': unknown keys {sorted(bad)}")
            tol = dict(RunConfig().tolerances)
            for k, v in value.items():
                tol[k] = _coerce_tol(k, v)
            kwargs["tolerances"] = tol
        elif key in _FIELD_TYPES:
            kwargs[key] = _coerce(key, value)
        else:
            raise ConfigError(f"field '{key}': unknown configuration key")
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def _coerce_tol(k, v):
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"field 'tolerances.{k}': expected a number") from None
    if not v > 0:
        raise ConfigError(f"field 'tolerances.{k}': must be positive")
    return v


def _validate(cfg):
    if cfg.model not in MODELS:
        raise ConfigError(f"field 'model': expected one of {MODELS}, got {cfg.model!r}")
    if cfg.setup not in ("I", "II"):
        raise ConfigError(f"field 'setup': expected 'I' or 'II', got {cfg.setup!r}")
    if cfg.format not in FORMATS:
        raise ConfigError(f"field 'format': expected one of {FORMATS}, got {cfg.format!r}")
    if not cfg.t_max > 0:
        raise ConfigError("field 't_max': must be > 0")
    if cfg.samples < 2:
        raise ConfigError("field 'samples': must be >= 2")
    if cfg.n_atoms < 1:
        raise ConfigError("field 'n_atoms': must be >= 1")
    if cfg.gamma_r < 0 or cfg.gamma_l < 0 or cfg.gamma_r + cfg.gamma_l <= 0:
        raise ConfigError("field 'gamma_r'/'gamma_l': need non-negative rates with positive sum")


def load_config(path=None, overrides=None):
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return build_config(data, overrides)
