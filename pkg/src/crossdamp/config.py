"""Run configuration: YAML with units spelled out in every key name."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .coefficients import CoarseGrainConfig, ELECTRON_CUTOFF
from .detection import region_from_dict, region_to_dict
from .hydrogen import ConfigError, ModelConfig, SINK_MANIFOLDS
from .liouvillian import DriveConfig

__all__ = ["RunConfig", "load_config", "parse_config", "dump_config", "ConfigError"]

TWO_PI = 2 * math.pi


def _float(section: dict, key: str, path: str, default=None, allow_none=False):
    if key not in section:
        return default
    value = section[key]
    if value is None:
        if allow_none:
            return None
        raise ConfigError(f"{path}.{key} must not be null", f"{path}.{key}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key} must be a number, got {value!r}", f"{path}.{key}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{path}.{key} must be finite", f"{path}.{key}")
    return out


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{key} must be a mapping", key)
    return value


def _float_list(values, path: str) -> list[float]:
    if isinstance(values, dict):
        try:
            start, stop, num = float(values["start"]), float(values["stop"]), int(values["num"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"{path} needs start, stop and num", path) from None
        if values.get("log", False):
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{path} log grid needs positive bounds", path)
            return [float(v) for v in np.geomspace(start, stop, num)]
        return [float(v) for v in np.linspace(start, stop, num)]
    if not isinstance(values, (list, tuple)):
        raise ConfigError(f"{path} must be a list or a start/stop/num mapping", path)
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(f"{path} must contain numbers", path) from None


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    coarse_grain: CoarseGrainConfig = field(default_factory=CoarseGrainConfig)
    drive: DriveConfig = field(default_factory=DriveConfig)
    regions: list = field(default_factory=lambda: [region_from_dict({"kind": "stripe", "theta_rad": math.pi / 2})])
    cross_damping: bool = True
    cross_shift: bool = False
    points_per_window: int = 4001
    half_width_linewidths: float = 30.0
    detunings_hz: Optional[list] = None
    sweep_family: str = "stripe"
    sweep_values: list = field(default_factory=lambda: [float(v) for v in np.linspace(0, math.pi, 61)])
    sweep_definition: str = "fit-difference"
    tau_c_values_s: list = field(default_factory=lambda: [float(v) for v in np.geomspace(1e-13, 1e-9, 9)])
    tau_c_region: Optional[Any] = None
    output_dir: str = "out"
    threads: Optional[int] = None
    verify_every: int = 10

    def grid(self, scheme) -> np.ndarray:
        from .spectra import default_grid
        if self.detunings_hz is not None:
            return np.asarray(self.detunings_hz, dtype=float) * TWO_PI
        return default_grid(scheme, self.points_per_window, self.half_width_linewidths)


def parse_config(raw: Optional[dict]) -> RunConfig:
    """Validate a plain mapping (as loaded from YAML) into a :class:`RunConfig`.

    Errors raise :class:`ConfigError` carrying the dotted path of the field.
    """
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping", "")
    known = {"model", "coarse_grain", "drive", "regions", "toggles", "grid", "sweep", "output_dir", "threads",
             "verify_every"}
    unknown = set(raw) - known
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown configuration key {key!r}", key)

    m = _section(raw, "model")
    defaults = ModelConfig()
    model_kwargs = {}
    for key in ("fine_structure_4p_hz", "hyperfine_4p12_hz", "hyperfine_4p32_hz", "hyperfine_2s_hz"):
        model_kwargs[key] = _float(m, key, "model", getattr(defaults, key), allow_none=True)
    model_kwargs["gamma_scale"] = _float(m, "gamma_scale", "model", 1.0)
    sinks = m.get("sink_manifolds", list(defaults.sink_manifolds))
    if not isinstance(sinks, (list, tuple)) or any(s not in SINK_MANIFOLDS for s in sinks):
        raise ConfigError(f"model.sink_manifolds must be a list drawn from {sorted(SINK_MANIFOLDS)}",
                          "model.sink_manifolds")
    model = ModelConfig(**model_kwargs, sink_manifolds=tuple(sinks))
    model.validate()

    c = _section(raw, "coarse_grain")
    try:
        coarse = CoarseGrainConfig(tau_c=_float(c, "tau_c_s", "coarse_grain", 1e-12),
                                   temperature=_float(c, "temperature_k", "coarse_grain", 300.0),
                                   omega_cut=_float(c, "omega_cut_rad_s", "coarse_grain", ELECTRON_CUTOFF))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "coarse_grain") from None

    d = _section(raw, "drive")
    try:
        drive = DriveConfig(detuning=TWO_PI * _float(d, "detuning_hz", "drive", 0.0),
                            rabi_scale=_float(d, "rabi_scale", "drive", 1e-3),
                            polarization=tuple(_float_list(d.get("polarization", [0, 0, 1]), "drive.polarization")),
                            propagation=tuple(_float_list(d.get("propagation", [1, 0, 0]), "drive.propagation")))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "drive") from None

    regions_raw = raw.get("regions")
    if regions_raw is None:
        regions = RunConfig().regions
    else:
        if not isinstance(regions_raw, list) or not regions_raw:
            raise ConfigError("regions must be a non-empty list", "regions")
        regions = []
        for k, spec in enumerate(regions_raw):
            try:
                spec = {key: (val if key == "kind" else float(val)) for key, val in dict(spec).items()}
                regions.append(region_from_dict(spec))
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc), f"regions[{k}]") from None

    t = _section(raw, "toggles")
    for key in ("cross_damping", "cross_shift"):
        if key in t and not isinstance(t[key], bool):
            raise ConfigError(f"toggles.{key} must be true or false", f"toggles.{key}")

    g = _section(raw, "grid")
    points = g.get("points_per_window", 4001)
    if not isinstance(points, int) or points < 3:
        raise ConfigError("grid.points_per_window must be an integer >= 3", "grid.points_per_window")
    half = _float(g, "half_width_linewidths", "grid", 30.0)
    if not half > 0:
        raise ConfigError("grid.half_width_linewidths must be positive", "grid.half_width_linewidths")
    detunings = None
    if g.get("detunings_hz") is not None:
        detunings = _float_list(g["detunings_hz"], "grid.detunings_hz")
        if not detunings:
            raise ConfigError("grid.detunings_hz is empty", "grid.detunings_hz")
        if any(b <= a for a, b in zip(detunings, detunings[1:])):
            raise ConfigError("grid.detunings_hz must be strictly increasing", "grid.detunings_hz")

    s = _section(raw, "sweep")
    family = s.get("family", "stripe")
    from .spectra import GEOMETRY_FAMILIES
    if family not in GEOMETRY_FAMILIES:
        raise ConfigError(f"sweep.family must be one of {sorted(GEOMETRY_FAMILIES)}", "sweep.family")
    values = _float_list(s["values"], "sweep.values") if "values" in s else RunConfig().sweep_values
    if not values:
        raise ConfigError("sweep.values is empty", "sweep.values")
    definition = s.get("definition", "fit-difference")
    if definition not in ("fit-difference", "jentschura-halfmax", "jentschura-max"):
        raise ConfigError("sweep.definition must be fit-difference, jentschura-halfmax or jentschura-max",
                          "sweep.definition")
    taus = _float_list(s["tau_c_s"], "sweep.tau_c_s") if "tau_c_s" in s else RunConfig().tau_c_values_s
    if not taus or any(v <= 0 for v in taus):
        raise ConfigError("sweep.tau_c_s must be a non-empty list of positive times", "sweep.tau_c_s")

    tau_region = None
    if s.get("tau_c_region") is not None:
        try:
            spec = {key: (val if key == "kind" else float(val)) for key, val in dict(s["tau_c_region"]).items()}
            tau_region = region_from_dict(spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "sweep.tau_c_region") from None

    threads = raw.get("threads")
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ConfigError("threads must be a positive integer", "threads")
    verify_every = raw.get("verify_every", 10)
    if not isinstance(verify_every, int) or verify_every < 0:
        raise ConfigError("verify_every must be a non-negative integer", "verify_every")

    return RunConfig(model=model, coarse_grain=coarse, drive=drive, regions=regions,
                     cross_damping=t.get("cross_damping", True), cross_shift=t.get("cross_shift", False),
                     points_per_window=points, half_width_linewidths=half, detunings_hz=detunings,
                     sweep_family=family, sweep_values=values, sweep_definition=definition,
                     tau_c_values_s=taus, tau_c_region=tau_region, output_dir=str(raw.get("output_dir", "out")),
                     threads=threads, verify_every=verify_every)


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    """Plain mapping that :func:`parse_config` maps back to an equal configuration."""
    m = cfg.model
    return {
        "model": {
            "fine_structure_4p_hz": m.fine_structure_4p_hz,
            "hyperfine_4p12_hz": m.hyperfine_4p12_hz,
            "hyperfine_4p32_hz": m.hyperfine_4p32_hz,
            "hyperfine_2s_hz": m.hyperfine_2s_hz,
            "gamma_scale": m.gamma_scale,
            "sink_manifolds": list(m.sink_manifolds),
        },
        "coarse_grain": {
            "tau_c_s": cfg.coarse_grain.tau_c,
            "temperature_k": cfg.coarse_grain.temperature,
            "omega_cut_rad_s": cfg.coarse_grain.omega_cut,
        },
        "drive": {
            "detuning_hz": cfg.drive.detuning / TWO_PI,
            "rabi_scale": cfg.drive.rabi_scale,
            "polarization": [float(v) for v in cfg.drive.polarization],
            "propagation": [float(v) for v in cfg.drive.propagation],
        },
        "regions": [region_to_dict(r) for r in cfg.regions],
        "toggles": {"cross_damping": cfg.cross_damping, "cross_shift": cfg.cross_shift},
        "grid": {
            "points_per_window": cfg.points_per_window,
            "half_width_linewidths": cfg.half_width_linewidths,
            "detunings_hz": cfg.detunings_hz,
        },
        "sweep": {
            "family": cfg.sweep_family,
            "values": list(cfg.sweep_values),
            "definition": cfg.sweep_definition,
            "tau_c_s": list(cfg.tau_c_values_s),
            "tau_c_region": None if cfg.tau_c_region is None else region_to_dict(cfg.tau_c_region),
        },
        "output_dir": cfg.output_dir,
        "threads": cfg.threads,
        "verify_every": cfg.verify_every,
    }


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {str(path)!r} does not exist", "--config")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}", "--config") from None
    return parse_config(raw)
