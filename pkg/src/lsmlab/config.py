"""Experiment configuration.

A config is a YAML (or JSON) mapping.  Every field is optional; the defaults
reproduce the two-circle experiment with ``d = 2``::

    scatterer:                  # list of {kind, center, parameters}
      - {kind: circle, center: [-2.0, 0.0], parameters: [1.0]}
      - {kind: circle, center: [2.0, 0.0], parameters: [1.0]}
    k: 1.0                      # wavenumber
    N: 60                       # directions (even)
    M: 128                      # Nystrom nodes per component (even, >= 16)
    grid: {x_min: -4, x_max: 4, y_min: -4, y_max: 4, h: 0.1}
    noise: null                 # or {level: 0.05, seed: 1}
    aperture: null              # or {theta_lo: 0.0, theta_hi: 3.14159}
    eps_list: [1.0e-2, ..., 1.0e-12]
    density_points: []          # sampling points for the Tikhonov sweep
    output_dir: out
    variant: both               # ck | kirsch | both
    cutoff: null                # relative spectral cutoff, off by default
    matrix: null                # load this far-field matrix instead of solving
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .farfield import ApertureSpec, FarFieldError, NoiseSpec
from .geometry import GeometryError, SamplingGrid, Scatterer, two_circles
from .sampling import DEFAULT_EPSILONS

VARIANT_CHOICES = ("ck", "kirsch", "both")


class ConfigError(ValueError):
    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


def _default_scatterer():
    return two_circles(2.0).to_records()


def _default_grid():
    return {"x_min": -4.0, "x_max": 4.0, "y_min": -4.0, "y_max": 4.0, "h": 0.1}


@dataclass
class ExperimentConfig:
    scatterer: list = field(default_factory=_default_scatterer)
    k: float = 1.0
    N: int = 60
    M: int = 128
    grid: dict = field(default_factory=_default_grid)
    noise: dict | None = None
    aperture: dict | None = None
    eps_list: list = field(default_factory=lambda: list(DEFAULT_EPSILONS))
    density_points: list = field(default_factory=list)
    output_dir: str = "out"
    variant: str = "both"
    cutoff: float | None = None
    matrix: str | None = None

    def __post_init__(self):
        self.validate()

    # -- construction -------------------------------------------------------

    @classmethod
    def from_mapping(cls, data):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a mapping")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError("<root>", f"cannot parse {path}: {exc}") from None
        return cls.from_mapping(data)

    def to_dict(self):
        return asdict(self)

    # -- validation ---------------------------------------------------------

    def validate(self):
        self.k = _positive_float(self.k, "k")
        if isinstance(self.N, bool) or not isinstance(self.N, int) or self.N < 2 or self.N % 2:
            raise ConfigError("N", f"must be an even integer >= 2, got {self.N!r}")
        if isinstance(self.M, bool) or not isinstance(self.M, int) or self.M < 16 or self.M % 2:
            raise ConfigError("M", f"must be an even integer >= 16, got {self.M!r}")
        self.scatterer_obj()
        self.sampling_grid()
        self.noise_spec()
        self.aperture_spec()
        if not isinstance(self.eps_list, (list, tuple)) or not self.eps_list:
            raise ConfigError("eps_list", "must be a non-empty list")
        self.eps_list = [_positive_float(e, f"eps_list[{i}]") for i, e in enumerate(self.eps_list)]
        for i in range(1, len(self.eps_list)):
            if self.eps_list[i] >= self.eps_list[i - 1]:
                raise ConfigError(f"eps_list[{i}]", "values must be strictly decreasing")
        pts = []
        for i, p in enumerate(self.density_points or []):
            if not isinstance(p, (list, tuple)) or len(p) != 2:
                raise ConfigError(f"density_points[{i}]", "must be a 2D point")
            pts.append([_finite_float(c, f"density_points[{i}]") for c in p])
        self.density_points = pts
        if self.variant not in VARIANT_CHOICES:
            raise ConfigError("variant", f"must be one of {VARIANT_CHOICES}, got {self.variant!r}")
        if self.cutoff is not None:
            self.cutoff = _positive_float(self.cutoff, "cutoff")
        self.output_dir = str(self.output_dir)

    def scatterer_obj(self) -> Scatterer:
        if not isinstance(self.scatterer, list) or not self.scatterer:
            raise ConfigError("scatterer", "must be a non-empty list of curve records")
        try:
            return Scatterer.from_records(self.scatterer)
        except (GeometryError, TypeError) as exc:
            raise ConfigError("scatterer", str(exc)) from None

    def sampling_grid(self) -> SamplingGrid:
        g = self.grid
        if not isinstance(g, dict):
            raise ConfigError("grid", "must be a mapping")
        vals = {}
        for key in ("x_min", "x_max", "y_min", "y_max", "h"):
            if key not in g:
                raise ConfigError(f"grid.{key}", "missing")
            vals[key] = _finite_float(g[key], f"grid.{key}")
        extra = set(g) - set(vals)
        if extra:
            raise ConfigError(f"grid.{sorted(extra)[0]}", "unknown field")
        try:
            return SamplingGrid(**vals)
        except GeometryError as exc:
            raise ConfigError("grid", str(exc)) from None

    def noise_spec(self) -> NoiseSpec | None:
        if self.noise is None:
            return None
        if not isinstance(self.noise, dict) or "level" not in self.noise:
            raise ConfigError("noise", "must be a mapping with 'level' (and optional 'seed')")
        seed = self.noise.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("noise.seed", f"must be an integer, got {seed!r}")
        self.noise = {"level": _finite_float(self.noise["level"], "noise.level"), "seed": seed}
        try:
            return NoiseSpec(self.noise["level"], seed)
        except FarFieldError as exc:
            raise ConfigError("noise.level", str(exc)) from None

    def aperture_spec(self) -> ApertureSpec | None:
        if self.aperture is None:
            return None
        a = self.aperture
        if not isinstance(a, dict) or "theta_lo" not in a or "theta_hi" not in a:
            raise ConfigError("aperture", "must be a mapping with theta_lo and theta_hi")
        lo = _finite_float(a["theta_lo"], "aperture.theta_lo")
        hi = _finite_float(a["theta_hi"], "aperture.theta_hi")
        self.aperture = {"theta_lo": lo, "theta_hi": hi}
        try:
            return ApertureSpec(lo, hi)
        except FarFieldError as exc:
            raise ConfigError("aperture", str(exc)) from None


def _finite_float(value, path):
    if isinstance(value, bool):
        raise ConfigError(path, f"must be a number, got {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"must be a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(path, f"must be finite, got {value!r}")
    return x


def _positive_float(value, path):
    x = _finite_float(value, path)
    if x <= 0:
        raise ConfigError(path, f"must be positive, got {value!r}")
    return x
