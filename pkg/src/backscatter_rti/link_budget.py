"""Monostatic backscatter link budget.

Received power follows the cascaded-channel form

    y = alpha * rho_L * P_tx * |G_t * G_r * L(d) * Gamma|^2 * |h|^4

with the free-space amplitude factor ``L(d) = lambda / (4 pi d)``. By default
``L(d)`` enters once, as written in the source model. ``round_trip_path_loss``
squares it, which is what a physical two-way monostatic path does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s
MISSING_READ_DBM = -84.0
#: Sentinel for "no RSSI report". Never finite, so ``math.isfinite`` flags it.
MISSING_READ = float("-inf")

FADING_KINDS = ("deterministic_los", "rician_multipath", "rayleigh_nlos")

MATERIAL_OFFSETS_DB = {
    "none": 0.0,
    "wood": -2.0,
    "plastic": -1.0,
    "glass": -1.0,
    "wall": -12.0,
}


def dbm_to_watts(p_dbm):
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * math.log10(p_w) + 30.0


def db_to_linear(g_db):
    return 10.0 ** (g_db / 10.0)


def _unit_interval(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class RfParams:
    """Reader/tag RF constants. Defaults follow the lab reader setup
    (31.5 dBm at 902 MHz, 7.5 dBi antenna); the tag-side constants are
    not published and are placeholders."""

    alpha: float = 0.3
    rho_l: float = 0.5
    p_tx_dbm: float = 31.5
    g_t_dbi: float = 2.0
    g_r_dbi: float = 7.5
    gamma: float = 0.5
    freq_hz: float = 902e6
    round_trip_path_loss: bool = False

    def __post_init__(self):
        _unit_interval("alpha", self.alpha)
        _unit_interval("rho_l", self.rho_l)
        _unit_interval("gamma", self.gamma)
        if not (self.freq_hz > 0 and math.isfinite(self.freq_hz)):
            raise ValueError(f"freq_hz must be positive, got {self.freq_hz}")
        for name in ("p_tx_dbm", "g_t_dbi", "g_r_dbi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.freq_hz


@dataclass(frozen=True)
class FadingModel:
    """Small-scale fading of the reader-tag envelope ``h``.

    ``rician_multipath`` is the rich-multipath LOS case; ``blockage_db`` is an
    extra deterministic loss (body shadowing in the NLOS case).
    """

    kind: str = "deterministic_los"
    h_fixed: float = 1.0
    seed: int = 0
    k_factor: float = 3.0
    blockage_db: float = 0.0

    def __post_init__(self):
        if self.kind not in FADING_KINDS:
            raise ValueError(f"unknown fading kind {self.kind!r}; expected one of {FADING_KINDS}")
        if not self.h_fixed >= 0:
            raise ValueError(f"h_fixed must be >= 0, got {self.h_fixed}")
        if not self.k_factor >= 0:
            raise ValueError(f"k_factor must be >= 0, got {self.k_factor}")
        if not self.blockage_db >= 0:
            raise ValueError(f"blockage_db must be >= 0, got {self.blockage_db}")


@dataclass(frozen=True)
class MaterialProfile:
    material: str = "none"
    offset_db: float = 0.0

    def __post_init__(self):
        if self.material not in MATERIAL_OFFSETS_DB:
            raise ValueError(f"unknown material {self.material!r}")
        if self.material != "none" and self.offset_db > 0:
            raise ValueError(f"{self.material} offset must be <= 0 dB, got {self.offset_db}")

    @classmethod
    def named(cls, material: str, offsets=None) -> "MaterialProfile":
        offsets = MATERIAL_OFFSETS_DB if offsets is None else {**MATERIAL_OFFSETS_DB, **offsets}
        if material not in offsets:
            raise ValueError(f"unknown material {material!r}")
        return cls(material, float(offsets[material]))


def path_loss(freq_hz: float, d_m: float) -> float:
    """Free-space amplitude factor lambda / (4 pi d)."""
    if not freq_hz > 0:
        raise ValueError(f"freq_hz must be positive, got {freq_hz}")
    if not d_m > 0:
        raise ValueError(f"distance must be positive, got {d_m}")
    return (SPEED_OF_LIGHT / freq_hz) / (4.0 * math.pi * d_m)


def backscatter_rx_power(rf: RfParams, fading_h: float, d_m: float) -> float:
    """Backscattered power at the reader in dBm, or ``MISSING_READ`` for h = 0."""
    if not isinstance(rf, RfParams):
        raise TypeError("rf must be an RfParams instance")
    if not fading_h >= 0:
        raise ValueError(f"fading magnitude must be >= 0, got {fading_h}")
    loss = path_loss(rf.freq_hz, d_m)
    if rf.round_trip_path_loss:
        loss = loss * loss
    if fading_h == 0:
        return MISSING_READ
    amplitude = db_to_linear(rf.g_t_dbi) * db_to_linear(rf.g_r_dbi) * loss * rf.gamma
    y = (rf.alpha * rf.rho_l * dbm_to_watts(rf.p_tx_dbm)
         * amplitude * amplitude * fading_h ** 4)
    if y == 0:
        return MISSING_READ
    return watts_to_dbm(y)


def apply_material(rss_dbm, profile: MaterialProfile, threshold_dbm: float = MISSING_READ_DBM):
    """Add the substrate offset; anything below the tag threshold becomes a
    missing read. Works on scalars and arrays."""
    if np.ndim(rss_dbm) == 0:
        value = float(rss_dbm) + profile.offset_db
        if not math.isfinite(value) or value < threshold_dbm:
            return MISSING_READ
        return value
    value = np.asarray(rss_dbm, dtype=float) + profile.offset_db
    return np.where(np.isfinite(value) & (value >= threshold_dbm), value, MISSING_READ)


def sample_fading(model: FadingModel, rng: np.random.Generator | None = None, size=None):
    """Draw the fading envelope ``h``.

    Random kinds have unit mean-square. Pass the generator explicitly to
    continue an existing stream; ``None`` seeds a fresh one from ``model.seed``.
    """
    if model.kind == "deterministic_los":
        if size is None:
            return float(model.h_fixed)
        return np.full(size, float(model.h_fixed))
    if rng is None:
        rng = np.random.default_rng(model.seed)
    if model.kind == "rayleigh_nlos":
        h = rng.rayleigh(scale=math.sqrt(0.5), size=size)
    else:
        k = model.k_factor
        los = math.sqrt(k / (k + 1.0))
        scatter = math.sqrt(1.0 / (2.0 * (k + 1.0)))
        re = rng.normal(los, scatter, size=size)
        im = rng.normal(0.0, scatter, size=size)
        h = np.hypot(re, im)
    return float(h) if size is None else h


def pie_encode(bits, t_unit: float) -> list[tuple[str, float]]:
    """Pulse-interval encode ``bits`` as (level, duration) segments.

    A 0 is a high pulse of ``t_unit`` then a low gap of ``2 * t_unit``;
    a 1 swaps the two durations.
    """
    if not t_unit > 0:
        raise ValueError(f"t_unit must be positive, got {t_unit}")
    out: list[tuple[str, float]] = []
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b!r}")
        if b:
            out += [("high", 2 * t_unit), ("low", t_unit)]
        else:
            out += [("high", t_unit), ("low", 2 * t_unit)]
    return out
