"""Experiment configuration: file loading, flag overrides, hashing.

A run is fully determined by one configuration plus its master seed.  Configs
load from a TOML or JSON file and individual CLI flags override file values.
The config hash (sha256 over the canonical key/value tree, output paths
excluded) is embedded in every artifact so outputs can be traced back.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .correlations import DetectionMode
from .errors import ConfigError
from .scattershot import ExperimentPlan
from .sources import Flavor, HERALD_POLICIES, InnerModeGrid, SpdcSource, rfm_grid, rtm_grid

if sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ExperimentConfig", "load_config", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

# Fields that do not affect physics and are excluded from the config hash.
_UNHASHED = {"output", "manifest"}


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run."""

    n_photons: int = 2
    n_ports: int = 4
    source_multiplier: float = 1.5
    gamma: float = 0.9
    inner_modes: int = 2
    flavor: str = "rfm"
    feed_forward: bool = True
    strict_single_pair: bool = True
    herald_policy: str = "lowest_index"
    epsilon: float = 0.05
    bandwidth: float = 1.0
    bins: int = 2
    base_frequency: float = 3.0
    base_time: float = 0.0
    pulse_rate: float | None = None
    resolution_policy: str = "warn"
    trials: int = 100_000
    seed: int = 0
    n_min: int = 1
    n_max: int = 200
    n_step: int = 1
    mc_points: tuple[int, ...] = ()
    p_fixed: float | None = None
    output: str | None = None
    manifest: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.n_photons < 1:
            raise ConfigError("n_photons must be >= 1")
        if self.n_ports < 1:
            raise ConfigError("n_ports must be >= 1")
        if not (self.source_multiplier > 0):
            raise ConfigError("source_multiplier must be positive")
        if not (0.0 <= self.gamma < 1.0):
            raise ConfigError("gamma must lie in [0, 1)")
        if self.inner_modes < 1:
            raise ConfigError("inner_modes must be >= 1")
        if self.flavor not in ("rfm", "rtm"):
            raise ConfigError(f"flavor must be 'rfm' or 'rtm', got {self.flavor!r}")
        if self.herald_policy not in HERALD_POLICIES:
            raise ConfigError(f"herald_policy must be one of {HERALD_POLICIES}")
        if not (self.epsilon > 0):
            raise ConfigError("epsilon must be positive")
        if not (self.bandwidth > 0):
            raise ConfigError("bandwidth must be positive")
        if self.bins < 1:
            raise ConfigError("bins must be >= 1")
        if self.pulse_rate is not None and not (self.pulse_rate > 0):
            raise ConfigError("pulse_rate must be positive when given")
        if self.resolution_policy not in ("strict", "warn", "ignore"):
            raise ConfigError("resolution_policy must be strict, warn or ignore")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not (0 < self.n_min <= self.n_max):
            raise ConfigError("need 0 < n_min <= n_max")
        if self.n_step < 1:
            raise ConfigError("n_step must be >= 1")
        if self.p_fixed is not None and not (0.0 <= self.p_fixed <= 1.0):
            raise ConfigError("p_fixed must lie in [0, 1]")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        return self

    # -- derived objects ---------------------------------------------------

    def source(self, feed_forward: bool | None = None) -> SpdcSource:
        return SpdcSource(
            gamma=self.gamma,
            inner_modes=self.inner_modes,
            flavor=Flavor(self.flavor),
            feed_forward=self.feed_forward if feed_forward is None else feed_forward,
            strict_single_pair=self.strict_single_pair,
            herald_policy=self.herald_policy,
        )

    def plan(self) -> ExperimentPlan:
        return ExperimentPlan(self.n_photons, self.source_multiplier, self.source())

    def detection_mode(self) -> DetectionMode:
        return (DetectionMode.TIME_RESOLVED if self.flavor == "rfm"
                else DetectionMode.FREQUENCY_RESOLVED)

    def bin_width(self) -> float:
        # The bins partition the envelope support in the detected variable.
        if self.flavor == "rfm":
            return (1.0 / self.bandwidth) / self.bins
        return self.bandwidth / self.bins

    def grid(self) -> InnerModeGrid:
        if self.flavor == "rfm":
            return rfm_grid(self.inner_modes, self.bandwidth, self.bin_width(),
                            epsilon=self.epsilon, base_frequency=self.base_frequency,
                            common_time=self.base_time)
        rate = self.pulse_rate
        if rate is None:
            # Widest pulse comb compatible with the frequency-resolution check.
            if self.inner_modes == 1:
                rate = 1.0
            else:
                rate = self.bin_width() * (self.inner_modes - 1) / (0.99 * self.epsilon)
        return rtm_grid(self.inner_modes, self.bandwidth, rate,
                        common_frequency=self.base_frequency, base_time=self.base_time)

    # -- identity ----------------------------------------------------------

    def canonical_dict(self) -> dict:
        data = asdict(self)
        for key in _UNHASHED:
            data.pop(key, None)
        data["mc_points"] = list(self.mc_points)
        data["schema_version"] = SCHEMA_VERSION
        return data

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from an optional TOML/JSON file plus flag overrides.

    Flags win over file values; ``None`` overrides are ignored.
    """
    data: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        unknown = set(data) - _FIELD_NAMES
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in _FIELD_NAMES:
                raise ConfigError(f"unknown config key {key!r}")
            data[key] = value
    if "mc_points" in data:
        data["mc_points"] = tuple(int(x) for x in data["mc_points"])
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for name in ("n_photons", "n_ports", "inner_modes", "bins", "trials",
                 "n_min", "n_max", "n_step", "seed"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool):
            if isinstance(value, float) and value == int(value):
                setattr(cfg, name, int(value))
            else:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
    for name in ("source_multiplier", "gamma", "epsilon", "bandwidth",
                 "base_frequency", "base_time"):
        value = getattr(cfg, name)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise ConfigError(f"{name} must be a finite number, got {value!r}")
        setattr(cfg, name, float(value))
    return cfg.validate()
