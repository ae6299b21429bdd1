"""RSSI log ingestion.

Log schema (UTF-8 CSV)::

    timestamp,epc,rssi_dbm[,read_count]
    0.0,E200-0001,-61.5

``timestamp`` is seconds as a decimal string, ``epc`` is matched verbatim
against scene tag ids. A missing read is simply an absent row.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import LogFormatError
from .link_budget import MISSING_READ_DBM
from .simulator import RssFrame

log = logging.getLogger(__name__)

HEADER = ("timestamp", "epc", "rssi_dbm")
HEADER_WITH_COUNT = HEADER + ("read_count",)
MAX_PLAUSIBLE_DBM = 10.0
POLICIES = ("last_value_hold", "mean_in_window")
IMPUTATIONS = ("floor", "zero", "drop")


class RssRecord(NamedTuple):
    timestamp: float
    tag_id: str
    rssi_dbm: float
    read_count: int | None = None


class Diagnostic(NamedTuple):
    line: int
    message: str


@dataclass
class ParsedLog:
    records: list[RssRecord]
    diagnostics: list[Diagnostic]

    @property
    def error_count(self) -> int:
        return len(self.diagnostics)


def _parse_line(fields, has_count):
    expected = 4 if has_count else 3
    if len(fields) not in (3, expected):
        raise ValueError(f"expected {expected} fields, got {len(fields)}")
    ts = float(fields[0])
    if not math.isfinite(ts):
        raise ValueError(f"non-finite timestamp {fields[0]!r}")
    epc = fields[1].strip()
    if not epc:
        raise ValueError("empty epc")
    rssi = float(fields[2])
    if not math.isfinite(rssi):
        raise ValueError(f"non-finite rssi {fields[2]!r}")
    if rssi > MAX_PLAUSIBLE_DBM:
        raise ValueError(f"implausible rssi {rssi} dBm (> {MAX_PLAUSIBLE_DBM})")
    count = None
    if len(fields) == 4 and fields[3].strip():
        count = int(fields[3])
        if count < 0:
            raise ValueError(f"negative read_count {count}")
    return RssRecord(ts, epc, rssi, count)


def parse_rssi_log(stream) -> ParsedLog:
    """Parse a log stream (or string). Bad lines are reported, not fatal."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = None
    for row in reader:
        if row and any(cell.strip() for cell in row):
            header = tuple(cell.strip() for cell in row)
            break
    if header not in (HEADER, HEADER_WITH_COUNT):
        raise LogFormatError(f"missing or unexpected header {header}; expected "
                             f"{','.join(HEADER)}[,read_count]")
    has_count = header == HEADER_WITH_COUNT
    records, diagnostics = [], []
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        try:
            records.append(_parse_line(row, has_count))
        except ValueError as exc:
            diagnostics.append(Diagnostic(reader.line_num, str(exc)))
    for d in diagnostics:
        log.warning("line %d skipped: %s", d.line, d.message)
    return ParsedLog(records, diagnostics)


def read_rssi_log(path) -> ParsedLog:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_rssi_log(fh)


def write_rssi_log(frames: Iterable[RssFrame], tag_ids: Sequence[str], stream) -> int:
    """Serialize frames, one row per non-missing read. Returns rows written."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    rows = 0
    for frame in frames:
        if len(frame.rss_dbm) != len(tag_ids):
            raise ValueError("frame width does not match tag list")
        for tag, value, missing in zip(tag_ids, frame.rss_dbm, frame.missing):
            if missing:
                continue
            writer.writerow([repr(frame.timestamp), tag, repr(float(value))])
            rows += 1
    return rows


def assemble_frames(records: Sequence[RssRecord], tag_ids: Sequence[str], window_s: float,
                    policy: str = "mean_in_window", t0: float | None = None,
                    n_frames: int | None = None) -> list[RssFrame]:
    """Bin asynchronous reads into consecutive windows of ``window_s``.

    Frame ``k`` covers ``[t0 + k*w, t0 + (k+1)*w)`` and is stamped with its
    start. ``t0`` defaults to the earliest record; ``n_frames`` defaults to
    enough windows to hold the last record.
    """
    if not window_s > 0:
        raise ValueError("window_s must be positive")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    index = {t: i for i, t in enumerate(tag_ids)}
    q = len(tag_ids)
    known = []
    for r in records:
        if r.tag_id in index:
            known.append(r)
        else:
            log.warning("ignoring read from unknown tag %r at t=%s", r.tag_id, r.timestamp)
    if not known and n_frames is None:
        return []
    if t0 is None:
        t0 = min((r.timestamp for r in known), default=0.0)
    # small slack so a stamp computed as k*w lands in window k, not k-1
    bins = [math.floor((r.timestamp - t0) / window_s + 1e-9) for r in known]
    if n_frames is None:
        n_frames = max(bins) + 1
    sums = np.zeros((n_frames, q))
    counts = np.zeros((n_frames, q), dtype=int)
    for r, b in zip(known, bins):
        if 0 <= b < n_frames:
            sums[b, index[r.tag_id]] += r.rssi_dbm
            counts[b, index[r.tag_id]] += 1
    frames = []
    held = np.full(q, np.nan)
    for k in range(n_frames):
        with np.errstate(invalid="ignore", divide="ignore"):
            values = np.where(counts[k] > 0, sums[k] / np.maximum(counts[k], 1), np.nan)
        if policy == "last_value_hold":
            values = np.where(counts[k] > 0, values, held)
            held = values
        frames.append(RssFrame.from_values(t0 + k * window_s, values))
    return frames


@dataclass(frozen=True, eq=False)
class Baseline:
    mean_dbm: np.ndarray
    std_db: np.ndarray
    counts: np.ndarray

    @property
    def usable(self) -> np.ndarray:
        return self.counts >= 1


def compute_baseline(frames: Sequence[RssFrame]) -> Baseline:
    """Per-link mean and population std over the finite reads of quiet frames."""
    if not frames:
        raise ValueError("baseline needs at least one frame")
    stack = np.vstack([f.rss_dbm for f in frames])
    finite = np.isfinite(stack)
    counts = finite.sum(axis=0)
    mean = np.full(stack.shape[1], np.nan)
    std = np.full(stack.shape[1], np.nan)
    for i in np.flatnonzero(counts):
        col = stack[finite[:, i], i]
        # a constant link keeps its exact value, so its own frames difference to 0
        mean[i] = col[0] if col.min() == col.max() else math.fsum(col) / col.size
        std[i] = col.std()
    for i in np.flatnonzero(counts == 0):
        log.warning("link %d never read during baseline; flagged unusable", i)
    return Baseline(mean, std, counts)


def delta_rss(frame: RssFrame, baseline: Baseline, imputation: str = "floor",
              floor_dbm: float = MISSING_READ_DBM) -> np.ndarray:
    """RSS change ``current - baseline`` per link (a shadowing dip is negative).

    Missing reads: ``floor`` substitutes ``floor_dbm`` before differencing,
    ``zero`` reports no change, ``drop`` leaves NaN so the caller can remove
    the link from the solve.
    """
    if imputation not in IMPUTATIONS:
        raise ValueError(f"unknown imputation {imputation!r}; expected one of {IMPUTATIONS}")
    rss = frame.rss_dbm
    if rss.shape != baseline.mean_dbm.shape:
        raise ValueError("frame and baseline cover different link counts")
    unusable = ~baseline.usable
    if imputation != "drop" and unusable.any():
        raise ValueError(f"links {np.flatnonzero(unusable).tolist()} have no baseline reads; "
                         "use imputation='drop'")
    out = rss - baseline.mean_dbm
    missing = frame.missing
    if imputation == "floor":
        out = np.where(missing, floor_dbm - baseline.mean_dbm, out)
    elif imputation == "zero":
        out = np.where(missing, 0.0, out)
    else:
        out = np.where(missing | unusable, np.nan, out)
    return out


def shadowing_vector(frame: RssFrame, baseline: Baseline, imputation: str = "floor",
                     floor_dbm: float = MISSING_READ_DBM) -> np.ndarray:
    """``baseline - current``: the solver input, positive where a body blocks a link.

    This is the only place the sign is flipped between the RSS change and the
    reconstruction.
    """
    return -delta_rss(frame, baseline, imputation, floor_dbm)
