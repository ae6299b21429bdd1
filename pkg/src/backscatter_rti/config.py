"""Key-value scene/run configuration.

One ``key = value`` pair per line, ``#`` starts a comment. Lengths and
frequencies carry their unit in the key suffix and are converted on load::

    reader_pos_cm = 0 0 120        # -> reader_pos in meters
    tag_cm = T1 -60 200 102        # repeatable, keeps file order
    freq_mhz = 902                 # -> freq in Hz
    beta_cm = 10                   # -> beta in meters

Lengths accept ``_m``/``_cm``/``_mm``; frequencies ``_hz``/``_khz``/``_mhz``/``_ghz``.
Later files override earlier ones key by key (``tag`` lines replace the whole
tag list). See ``configs/lab_scene.cfg`` for every recognised key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .geometry import Grid, Point3, Scene, build_grid
from .link_budget import (FADING_KINDS, MATERIAL_OFFSETS_DB, MISSING_READ_DBM,
                          FadingModel, MaterialProfile, RfParams)
from .rti_solver import RtiParams
from .simulator import ShadowModel, TargetPath
from .weight_model import WeightParams

LENGTH_UNITS = {"m": 1.0, "cm": 0.01, "mm": 0.001}
FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}

# base key -> (kind, arity); kind in length/freq/float/int/str/bool
_SCHEMA = {
    "reader_pos": ("length", 3),
    "tag": ("tag", 4),
    "grid_origin": ("length", 3),
    "grid_axis_u": ("float", 3),
    "grid_axis_v": ("float", 3),
    "grid_cells": ("int", 2),
    "cell_size": ("length", 1),
    "reader_beamwidth_deg": ("float", 1),
    # rf
    "p_tx_dbm": ("float", 1),
    "freq": ("freq", 1),
    "g_r_dbi": ("float", 1),
    "g_t_dbi": ("float", 1),
    "alpha": ("float", 1),
    "rho_l": ("float", 1),
    "gamma": ("float", 1),
    "round_trip_path_loss": ("bool", 1),
    "material": ("str", 1),
    "missing_read_dbm": ("float", 1),
    **{f"material_offset_{m}_db": ("float", 1) for m in MATERIAL_OFFSETS_DB},
    # rti
    "beta": ("length", 1),
    "eta": ("float", 1),
    "sigma": ("float", 1),
    "delta_corr": ("length", 1),
    # simulation
    "fading": ("str", 1),
    "h_fixed": ("float", 1),
    "k_factor": ("float", 1),
    "blockage_db": ("float", 1),
    "noise_db_std": ("float", 1),
    "frame_rate_hz": ("float", 1),
    "baseline_duration_s": ("float", 1),
    "walk_duration_s": ("float", 1),
    "walk_start": ("length", 3),
    "walk_end": ("length", 3),
    "walk_speed_mps": ("float", 1),
    "walk_start_s": ("float", 1),
    "blob_sigma": ("length", 1),
    "peak_atten_db": ("float", 1),
    "forward_beta_scale": ("float", 1),
    "seed": ("int", 1),
    # ingest / detect
    "window_s": ("float", 1),
    "policy": ("str", 1),
    "imputation": ("str", 1),
    "threshold_n_std": ("float", 1),
    "smooth": ("bool", 1),
}


def _split_key(key):
    """Return (base, unit_factor) for a raw key."""
    if key in _SCHEMA:
        kind = _SCHEMA[key][0]
        if kind in ("length", "freq"):
            raise ConfigError(f"key {key!r} needs a unit suffix")
        return key, None
    base, _, suffix = key.rpartition("_")
    if base in _SCHEMA:
        kind = _SCHEMA[base][0]
        units = {"length": LENGTH_UNITS, "tag": LENGTH_UNITS, "freq": FREQ_UNITS}.get(kind)
        if units and suffix in units:
            return base, units[suffix]
    raise ConfigError(f"unknown configuration key {key!r}")


def _parse_bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(base, factor, text):
    kind, arity = _SCHEMA[base]
    parts = text.split()
    if kind == "tag":
        if len(parts) != 4:
            raise ValueError("expected: <tag_id> <x> <y> <z>")
        return (parts[0], tuple(float(p) * factor for p in parts[1:]))
    if kind == "str":
        return text.strip()
    if len(parts) != arity:
        raise ValueError(f"expected {arity} value(s), got {len(parts)}")
    if kind == "bool":
        return _parse_bool(parts[0])
    if kind == "int":
        vals = [int(p) for p in parts]
    else:
        vals = [float(p) * (factor or 1.0) for p in parts]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite number")
    return vals[0] if arity == 1 else tuple(vals)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into ``{base_key: value}`` with SI units applied."""
    out: dict = {}
    seen_units: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        base, factor = _split_key(key)
        try:
            converted = _convert(base, factor, value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        if base == "tag":
            out.setdefault("tag", []).append(converted)
            continue
        if base in seen_units and seen_units[base] != key:
            raise ConfigError(f"{source}:{lineno}: {base} given as both "
                              f"{seen_units[base]} and {key}")
        seen_units[base] = key
        out[base] = converted
    return out


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


# defaults mirror configs/lab_scene.cfg
DEFAULTS = {
    "reader_pos": (0.0, 0.0, 1.2),
    "tag": [(f"T{i + 1}", (x, 2.0, z))
            for i, (x, z) in enumerate([(-0.6, 1.02), (-0.2, 1.02), (0.2, 1.02), (0.6, 1.02),
                                        (-0.6, 0.36), (-0.2, 0.36), (0.2, 0.36), (0.6, 0.36)])],
    "grid_origin": (-1.6, 2.0, 0.0),
    "grid_axis_u": (1.0, 0.0, 0.0),
    "grid_axis_v": (0.0, 0.0, 1.0),
    "grid_cells": (32, 16),
    "cell_size": 0.1,
    "reader_beamwidth_deg": 72.0,
    "p_tx_dbm": 31.5,
    "freq": 902e6,
    "g_r_dbi": 7.5,
    "g_t_dbi": 0.0,
    "alpha": 0.1,
    "rho_l": 0.5,
    "gamma": 0.25,
    "round_trip_path_loss": True,
    "material": "none",
    "missing_read_dbm": MISSING_READ_DBM,
    "beta": 0.1,
    "eta": 1.5,
    "sigma": 0.5,
    "delta_corr": 3.0,
    "fading": "deterministic_los",
    "h_fixed": 1.0,
    "k_factor": 3.0,
    "blockage_db": 0.0,
    "noise_db_std": 0.5,
    "frame_rate_hz": 5.0,
    "baseline_duration_s": 60.0,
    "walk_duration_s": 10.0,
    "walk_start": (1.6, 2.0, 1.0),
    "walk_end": (-1.6, 2.0, 1.0),
    "walk_speed_mps": 1.0,
    "walk_start_s": 3.0,
    "blob_sigma": 0.2,
    "peak_atten_db": 5.0,
    "forward_beta_scale": 1.0,
    "seed": 0,
    "window_s": 0.2,
    "policy": "mean_in_window",
    "imputation": "floor",
    "threshold_n_std": 3.0,
    "smooth": True,
}


@dataclass(frozen=True)
class SimSettings:
    fading: FadingModel
    noise_db_std: float
    frame_rate_hz: float
    baseline_duration_s: float
    walk_duration_s: float
    path: TargetPath
    shadow: ShadowModel
    forward_beta_scale: float
    seed: int


@dataclass(frozen=True)
class RunConfig:
    scene: Scene
    rf: RfParams
    material: MaterialProfile
    material_offsets: dict
    missing_read_dbm: float
    weight: WeightParams
    rti: RtiParams
    sim: SimSettings
    window_s: float
    policy: str
    imputation: str
    threshold_n_std: float
    smooth: bool
    reader_beamwidth_deg: float
    sources: tuple[str, ...] = field(default=())

    @property
    def grid(self) -> Grid:
        return self.scene.grid

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, sim=replace(self.sim, seed=int(seed)))


def build_run_config(values: dict, sources=()) -> RunConfig:
    """Turn a merged key/value mapping into validated domain objects."""
    v = {**DEFAULTS, **values}
    try:
        grid = build_grid(Point3(*v["grid_origin"]), Point3(*v["grid_axis_u"]),
                          Point3(*v["grid_axis_v"]), v["grid_cells"][0], v["grid_cells"][1],
                          v["cell_size"])
        scene = Scene(Point3(*v["reader_pos"]),
                      tuple((tid, Point3(*pos)) for tid, pos in v["tag"]), grid)
        rf = RfParams(alpha=v["alpha"], rho_l=v["rho_l"], p_tx_dbm=v["p_tx_dbm"],
                      g_t_dbi=v["g_t_dbi"], g_r_dbi=v["g_r_dbi"], gamma=v["gamma"],
                      freq_hz=v["freq"], round_trip_path_loss=v["round_trip_path_loss"])
        offsets = {m: v.get(f"material_offset_{m}_db", MATERIAL_OFFSETS_DB[m])
                   for m in MATERIAL_OFFSETS_DB}
        material = MaterialProfile.named(v["material"], offsets)
        if v["fading"] not in FADING_KINDS:
            raise ValueError(f"fading must be one of {FADING_KINDS}")
        fading = FadingModel(v["fading"], h_fixed=v["h_fixed"], seed=v["seed"],
                             k_factor=v["k_factor"], blockage_db=v["blockage_db"])
        path = TargetPath.straight(Point3(*v["walk_start"]), Point3(*v["walk_end"]),
                                   v["walk_speed_mps"], v["walk_start_s"])
        sim = SimSettings(fading, v["noise_db_std"], v["frame_rate_hz"],
                          v["baseline_duration_s"], v["walk_duration_s"], path,
                          ShadowModel(v["blob_sigma"], v["peak_atten_db"]),
                          v["forward_beta_scale"], v["seed"])
        for name in ("noise_db_std",):
            if sim.noise_db_std < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("frame_rate_hz", "baseline_duration_s", "walk_duration_s",
                     "forward_beta_scale", "window_s", "threshold_n_std"):
            if not v[name] > 0:
                raise ValueError(f"{name} must be positive")
        if v["policy"] not in ("last_value_hold", "mean_in_window"):
            raise ValueError(f"unknown policy {v['policy']!r}")
        if v["imputation"] not in ("floor", "zero", "drop"):
            raise ValueError(f"unknown imputation {v['imputation']!r}")
        return RunConfig(scene, rf, material, offsets, v["missing_read_dbm"],
                         WeightParams(v["beta"]),
                         RtiParams(v["eta"], v["sigma"], v["delta_corr"]), sim,
                         v["window_s"], v["policy"], v["imputation"], v["threshold_n_std"],
                         v["smooth"], v["reader_beamwidth_deg"], tuple(str(s) for s in sources))
    except ConfigError:
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(str(exc)) from exc


def load_run_config(*paths, overrides: dict | None = None) -> RunConfig:
    """Merge config files left to right, then ``overrides`` (already in SI)."""
    merged: dict = {}
    for p in paths:
        if p is not None:
            merged.update(load_config_file(p))
    merged.update(overrides or {})
    return build_run_config(merged, [p for p in paths if p is not None])


def default_config() -> RunConfig:
    return build_run_config({})
