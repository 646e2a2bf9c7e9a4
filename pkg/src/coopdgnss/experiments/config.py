"""Sweep configuration: JSON schema, validation, and packaged presets.

A config file is a JSON object with exactly the sections
{network, geometry, sweep, montecarlo}; unknown keys anywhere are errors.

network:    N_c, N_o, K_c, K_o, alpha, sigma_rho, sigma_phi, wavelength,
            weighting ("identity" | "elevation", default identity)
geometry:   {"fixture": name-or-path} for a checked-in or on-disk JSON
            fixture, or {"generate": {"K": int, "mask_deg": float,
            "seed": int}} for a seeded random constellation
sweep:      pipeline ("cdgnss" | "crtk"), vary ("alpha" | "N_o" | "K_o" |
            "sigma_rho"), start, stop, steps, scale ("linear" | "log",
            default linear)
montecarlo: trials, master_seed, ils_method ("round" | "bootstrap" | "ils",
            default "ils")

A sigma_rho sweep preserves the base config's sigma_phi/sigma_rho ratio, so
carrier experiments keep their code/phase noise relationship across the
sweep axis.
"""

from __future__ import annotations

import dataclasses
import json
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..geometry import SatelliteGeometry, generate_constellation, load_fixture
from ..netmodel import NetworkSpec

__all__ = [
    "SweepConfig",
    "config_from_dict",
    "load_config",
    "load_preset",
    "PRESET_NAMES",
]

PIPELINES = ("cdgnss", "crtk")
VARY_PARAMS = ("alpha", "N_o", "K_o", "sigma_rho")
SCALES = ("linear", "log")

# fig5 is a preset group: it expands to the three member curves.
PRESET_NAMES = (
    "fig4a",
    "fig4b",
    "fig4b_ko8",
    "fig4b_ko14",
    "fig5_no1",
    "fig5_no5",
    "fig5_no25",
)
PRESET_GROUPS = {"fig5": ("fig5_no1", "fig5_no5", "fig5_no25")}


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    """Validated sweep description: base network, geometry source, swept
    parameter with its grid, and Monte Carlo settings."""

    base: NetworkSpec
    geometry_source: dict
    pipeline: str
    vary: str
    start: float
    stop: float
    steps: int
    scale: str
    trials: int
    master_seed: int
    ils_method: str

    def __post_init__(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}")
        if self.vary not in VARY_PARAMS:
            raise ConfigError(f"vary must be one of {VARY_PARAMS}")
        if self.scale not in SCALES:
            raise ConfigError(f"scale must be one of {SCALES}")
        if self.steps < 1:
            raise ConfigError("sweep needs at least one step")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log scale needs positive endpoints")
        if self.ils_method not in ("round", "bootstrap", "ils"):
            raise ConfigError("ils_method must be 'round', 'bootstrap', or 'ils'")
        if self.vary in ("N_o", "K_o"):
            if self.start < 0 or self.stop < self.start:
                raise ConfigError(f"{self.vary} range must be nonnegative and ordered")
        # Fail fast on grids the swept parameter cannot accept.
        for v in self.values():
            try:
                self.spec_at(v)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"sweep value {v} invalid: {exc}")

    def values(self) -> list:
        """The sweep grid, integer-valued for count parameters."""
        if self.scale == "log":
            grid = np.geomspace(self.start, self.stop, self.steps)
        else:
            grid = np.linspace(self.start, self.stop, self.steps)
        if self.vary in ("N_o", "K_o"):
            vals = [int(round(v)) for v in grid]
            if len(set(vals)) != len(vals):
                raise ConfigError(
                    f"{self.vary} grid rounds to duplicate integers: {vals}"
                )
            return vals
        return [float(v) for v in grid]

    def spec_at(self, value) -> NetworkSpec:
        """Base network with the swept parameter set to one grid value."""
        if self.vary == "alpha":
            return dataclasses.replace(self.base, alpha=float(value))
        if self.vary == "N_o":
            return dataclasses.replace(self.base, N_o=int(value))
        if self.vary == "K_o":
            return dataclasses.replace(self.base, K_o=int(value))
        ratio = self.base.sigma_phi / self.base.sigma_rho
        return dataclasses.replace(
            self.base, sigma_rho=float(value), sigma_phi=float(value) * ratio
        )

    def geometry(self) -> SatelliteGeometry:
        src = self.geometry_source
        if "fixture" in src:
            try:
                g = load_fixture(src["fixture"])
            except FileNotFoundError as exc:
                raise ConfigError(str(exc))
        else:
            gen = src["generate"]
            try:
                g = generate_constellation(
                    int(gen["K"]), np.deg2rad(float(gen["mask_deg"])), int(gen["seed"])
                )
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"invalid geometry.generate: {exc}")
        need = max(self.spec_at(v).K for v in self.values())
        if g.K < need:
            raise ConfigError(
                f"geometry has {g.K} satellites but the sweep needs {need}"
            )
        return g


def _require_keys(section: dict, name: str, required: tuple, optional: tuple = ()):
    unknown = set(section) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    missing = set(required) - set(section)
    if missing:
        raise ConfigError(f"missing keys in '{name}': {sorted(missing)}")


def config_from_dict(doc: dict) -> SweepConfig:
    """Validate a parsed config document into a SweepConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(doc, "config", ("network", "geometry", "sweep", "montecarlo"))

    net = doc["network"]
    _require_keys(
        net,
        "network",
        ("N_c", "N_o", "K_c", "K_o", "alpha", "sigma_rho", "sigma_phi", "wavelength"),
        ("weighting",),
    )
    try:
        base = NetworkSpec(
            N_c=int(net["N_c"]),
            N_o=int(net["N_o"]),
            K_c=int(net["K_c"]),
            K_o=int(net["K_o"]),
            alpha=float(net["alpha"]),
            sigma_rho=float(net["sigma_rho"]),
            sigma_phi=float(net["sigma_phi"]),
            wavelength=float(net["wavelength"]),
            weighting=net.get("weighting", "identity"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid network section: {exc}")

    geo = doc["geometry"]
    if not isinstance(geo, dict) or len(geo) != 1 or not (
        "fixture" in geo or "generate" in geo
    ):
        raise ConfigError(
            "geometry must be exactly one of {'fixture': ...} or {'generate': ...}"
        )
    if "generate" in geo:
        _require_keys(geo["generate"], "geometry.generate", ("K", "mask_deg", "seed"))

    sw = doc["sweep"]
    _require_keys(
        sw, "sweep", ("pipeline", "vary", "start", "stop", "steps"), ("scale",)
    )
    mc = doc["montecarlo"]
    _require_keys(mc, "montecarlo", ("trials", "master_seed"), ("ils_method",))

    try:
        return SweepConfig(
            base=base,
            geometry_source=geo,
            pipeline=sw["pipeline"],
            vary=sw["vary"],
            start=float(sw["start"]),
            stop=float(sw["stop"]),
            steps=int(sw["steps"]),
            scale=sw.get("scale", "linear"),
            trials=int(mc["trials"]),
            master_seed=int(mc["master_seed"]),
            ils_method=mc.get("ils_method", "ils"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config values: {exc}")


def load_config(path) -> SweepConfig:
    """Load and validate a JSON config file."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return config_from_dict(doc)


def expand_preset(name: str) -> tuple:
    """Resolve a preset name to its member names (groups expand)."""
    if name in PRESET_GROUPS:
        return PRESET_GROUPS[name]
    if name in PRESET_NAMES:
        return (name,)
    valid = sorted(PRESET_NAMES + tuple(PRESET_GROUPS))
    raise ConfigError(f"unknown preset {name!r}; valid: {valid}")


def load_preset(name: str) -> SweepConfig:
    """Load one packaged preset config by name."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}")
    ref = resources.files("coopdgnss") / "experiments" / "presets" / f"{name}.json"
    return config_from_dict(json.loads(ref.read_text()))
