"""Presence decisions and peak tracking on reconstructed images."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Point3, cell_center
from .rti_solver import AttenuationImage

CSV_HEADER = ("timestamp", "present", "peak_u", "peak_v", "peak_value")


@dataclass(frozen=True)
class Detection:
    timestamp: float
    present: bool
    peak_cell: int
    peak_value: float
    peak_point: Point3
    peak_uv: tuple[float, float]


def locate_peak(image: AttenuationImage) -> tuple[int, float]:
    # np.argmax returns the first maximum, i.e. lowest index on ties
    j = int(np.argmax(image.values))
    return j, float(image.values[j])


def presence(image: AttenuationImage, threshold: float) -> bool:
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    return locate_peak(image)[1] >= threshold


def calibrate_threshold(peak_values, n_std: float = 3.0) -> float:
    """Mean plus ``n_std`` standard deviations of quiet-period peak values.

    Floored at a tiny positive number so a perfectly silent calibration set
    still yields a usable threshold.
    """
    peaks = np.asarray(peak_values, dtype=float)
    if peaks.size == 0:
        raise ValueError("need at least one calibration peak")
    return max(float(peaks.mean() + n_std * peaks.std()), 1e-9)


def detect(image: AttenuationImage, threshold: float) -> Detection:
    j, value = locate_peak(image)
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    u, v = image.grid.centers_uv[j]
    return Detection(image.timestamp, value >= threshold, j, value,
                     cell_center(image.grid, j), (float(u), float(v)))


def _median3(values):
    values = np.asarray(values, dtype=float)
    if len(values) < 3:
        return values.copy()
    out = values.copy()
    stacked = np.stack([values[:-2], values[1:-1], values[2:]])
    out[1:-1] = np.median(stacked, axis=0)
    return out


def extract_trajectory(detections: Sequence[Detection], smooth: bool = True):
    """(timestamp, point) pairs for present detections, in time order.

    With ``smooth`` each coordinate gets a 3-sample running median; the two
    end samples are kept as-is.
    """
    times = [d.timestamp for d in detections]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("detections must be time-ordered")
    kept = [d for d in detections if d.present]
    if not kept:
        return []
    pts = np.array([tuple(d.peak_point) for d in kept])
    if smooth:
        pts = np.column_stack([_median3(pts[:, k]) for k in range(3)])
    return [(d.timestamp, Point3.from_array(p)) for d, p in zip(kept, pts)]


def write_detections_csv(detections: Sequence[Detection], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for d in detections:
            writer.writerow([repr(float(d.timestamp)), int(d.present),
                             repr(float(d.peak_uv[0])), repr(float(d.peak_uv[1])),
                             repr(float(d.peak_value))])


def read_detections_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected detections header {reader.fieldnames}")
        return [{"timestamp": float(r["timestamp"]), "present": r["present"] == "1",
                 "peak_u": float(r["peak_u"]), "peak_v": float(r["peak_v"]),
                 "peak_value": float(r["peak_value"])} for r in reader]
