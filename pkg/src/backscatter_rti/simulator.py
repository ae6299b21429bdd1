"""Synthetic RSS time series for the quiet-room and walking-person scenarios.

Per frame and link the simulator draws the fading envelope, then dB-domain
Gaussian noise, in that order, from one generator seeded by ``seed``. The walk
generator uses the same draw order so a zero-strength shadow reproduces the
baseline bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Grid, Point3, Scene, make_links
from .link_budget import (MISSING_READ_DBM, FadingModel, MaterialProfile, RfParams,
                          apply_material, backscatter_rx_power, sample_fading)
from .weight_model import WeightMatrix


@dataclass(frozen=True)
class TargetPath:
    """Piecewise-linear target trajectory; position is held outside the time span."""

    waypoints: tuple[tuple[float, Point3], ...]

    def __post_init__(self):
        wps = tuple((float(t), p if isinstance(p, Point3) else Point3(*p))
                    for t, p in self.waypoints)
        if not wps:
            raise ValueError("path needs at least one waypoint")
        times = [t for t, _ in wps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        object.__setattr__(self, "waypoints", wps)

    @classmethod
    def straight(cls, start: Point3, end: Point3, speed_mps: float, t_start: float = 0.0):
        if not speed_mps > 0:
            raise ValueError("speed must be positive")
        duration = start.distance_to(end) / speed_mps
        return cls(((t_start, start), (t_start + duration, end)))

    @property
    def t_start(self) -> float:
        return self.waypoints[0][0]

    @property
    def t_end(self) -> float:
        return self.waypoints[-1][0]

    def position(self, t: float) -> Point3:
        wps = self.waypoints
        if t <= wps[0][0]:
            return wps[0][1]
        if t >= wps[-1][0]:
            return wps[-1][1]
        for (t0, p0), (t1, p1) in zip(wps, wps[1:]):
            if t0 <= t <= t1:
                f = (t - t0) / (t1 - t0)
                return Point3(p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y),
                              p0.z + f * (p1.z - p0.z))
        raise AssertionError("unreachable")  # pragma: no cover


@dataclass(frozen=True)
class ShadowModel:
    """Gaussian attenuation blob standing in for a body."""

    blob_sigma_m: float = 0.2
    peak_atten_db: float = 5.0

    def __post_init__(self):
        if not self.blob_sigma_m > 0:
            raise ValueError("blob_sigma_m must be positive")
        # zero strength is allowed so the walk degenerates to the baseline
        if not self.peak_atten_db >= 0:
            raise ValueError("peak_atten_db must be non-negative")


@dataclass(frozen=True, eq=False)
class RssFrame:
    """One synchronous snapshot of every link. Missing reads hold NaN."""

    timestamp: float
    rss_dbm: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        rss = np.array(self.rss_dbm, dtype=float)
        missing = np.asarray(self.missing, dtype=bool).copy()
        if rss.shape != missing.shape or rss.ndim != 1:
            raise ValueError("rss and missing flags must be 1-D and equally long")
        missing |= ~np.isfinite(rss)
        rss[missing] = np.nan
        rss.flags.writeable = False
        missing.flags.writeable = False
        object.__setattr__(self, "timestamp", float(self.timestamp))
        object.__setattr__(self, "rss_dbm", rss)
        object.__setattr__(self, "missing", missing)

    @classmethod
    def from_values(cls, timestamp, values):
        values = np.asarray(values, dtype=float)
        return cls(timestamp, values, ~np.isfinite(values))

    def __eq__(self, other):
        if not isinstance(other, RssFrame):
            return NotImplemented
        return (self.timestamp == other.timestamp
                and np.array_equal(self.missing, other.missing)
                and np.array_equal(self.rss_dbm, other.rss_dbm, equal_nan=True))

    __hash__ = None


def frame_count(duration_s: float, frame_rate_hz: float) -> int:
    # tolerance keeps 3.2 s * 5 Hz at 16 frames despite binary rounding
    return max(1, math.ceil(duration_s * frame_rate_hz - 1e-9))


def _materials(materials, q):
    if materials is None:
        return [MaterialProfile()] * q
    if isinstance(materials, MaterialProfile):
        return [materials] * q
    materials = list(materials)
    if len(materials) != q:
        raise ValueError(f"expected {q} material profiles, got {len(materials)}")
    return materials


def _frames(scene, rf, fading, duration_s, frame_rate_hz, noise_db_std, seed,
            materials, threshold_dbm, attenuation=None):
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    if not frame_rate_hz > 0:
        raise ValueError("frame rate must be positive")
    if not noise_db_std >= 0:
        raise ValueError("noise std must be non-negative")
    links = make_links(scene)
    q = len(links)
    profiles = _materials(materials, q)
    rng = np.random.default_rng(seed)
    dt = 1.0 / frame_rate_hz
    frames = []
    for k in range(frame_count(duration_s, frame_rate_hz)):
        t = k * dt
        h = np.atleast_1d(sample_fading(fading, rng, size=q))
        noise = rng.normal(0.0, noise_db_std, size=q) if noise_db_std > 0 else np.zeros(q)
        static = np.array([backscatter_rx_power(rf, float(h[i]), links[i].length_m)
                           for i in range(q)]) - fading.blockage_db
        level = static + noise
        if attenuation is not None:
            level = level - attenuation(t)
        rss = np.array([apply_material(level[i], profiles[i], threshold_dbm) for i in range(q)])
        frames.append(RssFrame.from_values(t, rss))
    return frames


def simulate_baseline(scene: Scene, rf: RfParams, fading: FadingModel, duration_s: float,
                      frame_rate_hz: float, noise_db_std: float, seed: int,
                      materials=None, threshold_dbm: float = MISSING_READ_DBM) -> list[RssFrame]:
    """Quiet-room capture: static link budget plus noise, no target."""
    return _frames(scene, rf, fading, duration_s, frame_rate_hz, noise_db_std, seed,
                   materials, threshold_dbm)


def true_attenuation_field(grid: Grid, target, shadow: ShadowModel) -> np.ndarray:
    c = np.asarray(tuple(target), dtype=float)
    d2 = np.sum((grid.centers - c) ** 2, axis=1)
    return shadow.peak_atten_db * np.exp(-d2 / (2.0 * shadow.blob_sigma_m ** 2))


def link_attenuation(w: WeightMatrix, path: TargetPath, shadow: ShadowModel, t: float) -> np.ndarray:
    """Per-link shadowing loss ``W @ x_true(t)`` in dB."""
    x = true_attenuation_field(w.grid, path.position(t), shadow)
    return w.matrix @ x


def simulate_walk(scene: Scene, rf: RfParams, fading: FadingModel, w: WeightMatrix,
                  path: TargetPath, shadow: ShadowModel, frame_rate_hz: float,
                  noise_db_std: float, seed: int, duration_s: float | None = None,
                  materials=None, threshold_dbm: float = MISSING_READ_DBM) -> list[RssFrame]:
    """Capture with a person following ``path``.

    ``w`` is the forward weight matrix; pass one built with a scaled beta to
    avoid testing the solver on data from its own model. Capture runs over
    ``[0, duration_s)``, by default until the path ends.
    """
    if w.q != len(scene.tags):
        raise ValueError(f"weight matrix has {w.q} links, scene has {len(scene.tags)} tags")
    if duration_s is None:
        duration_s = path.t_end if path.t_end > 0 else 1.0 / frame_rate_hz
    if path.t_end < 0 or path.t_start >= duration_s:
        raise ValueError(f"path [{path.t_start}, {path.t_end}] s lies outside the "
                         f"capture window [0, {duration_s}) s")
    return _frames(scene, rf, fading, duration_s, frame_rate_hz, noise_db_std, seed,
                   materials, threshold_dbm,
                   attenuation=lambda t: link_attenuation(w, path, shadow, t))


# substrate / channel sweep ---------------------------------------------------

DEFAULT_SWEEP_SCENARIOS = {
    "los": FadingModel("deterministic_los", h_fixed=1.0),
    "rich_multipath": FadingModel("rician_multipath", k_factor=3.0),
    "nlos": FadingModel("rayleigh_nlos", blockage_db=15.0),
}
SWEEP_MATERIALS = ("wood", "plastic", "glass", "wall")


@dataclass(frozen=True)
class SweepCell:
    material: str
    scenario: str
    mean_dbm: float
    missing_fraction: float
    threshold_dbm: float = MISSING_READ_DBM

    @property
    def missing(self) -> bool:
        return self.mean_dbm < self.threshold_dbm


def material_sweep(rf: RfParams, reader: Point3, tag: Point3, n_seeds: int = 100,
                   reads_per_seed: int = 20, noise_db_std: float = 0.5,
                   scenarios: dict | None = None, materials: Sequence[str] = SWEEP_MATERIALS,
                   material_offsets: dict | None = None,
                   threshold_dbm: float = MISSING_READ_DBM, seed: int = 0) -> list[SweepCell]:
    """Mean RSS of a single tag for every (material, scenario) pair.

    Means are taken over the raw dB values before the sensitivity cut, so a
    cell whose mean falls under the threshold is one the reader would not see.
    Seeds ``seed .. seed + n_seeds - 1`` are shared by every cell.
    """
    scenarios = DEFAULT_SWEEP_SCENARIOS if scenarios is None else scenarios
    d = reader.distance_to(tag)
    out = []
    for material in materials:
        profile = MaterialProfile.named(material, material_offsets)
        for name, model in scenarios.items():
            values = []
            for s in range(seed, seed + n_seeds):
                rng = np.random.default_rng(s)
                h = np.atleast_1d(sample_fading(model, rng, size=reads_per_seed))
                noise = rng.normal(0.0, noise_db_std, size=reads_per_seed)
                static = np.array([backscatter_rx_power(rf, float(x), d) for x in h])
                values.append(static - model.blockage_db + noise + profile.offset_db)
            values = np.concatenate(values)
            finite = values[np.isfinite(values)]
            mean = float(finite.mean()) if finite.size else -math.inf
            miss = float(np.mean(~np.isfinite(values) | (values < threshold_dbm)))
            out.append(SweepCell(material, name, mean, miss, threshold_dbm))
    return out
