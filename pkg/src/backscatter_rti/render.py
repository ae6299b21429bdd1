"""Image export: CSV matrices and 8-bit binary PGM (P5) graymaps.

PGM rows run top to bottom, so the last grid row (largest v) is written
first and the picture comes out upright. Every PGM carries a header comment
``# scale min=<lo> max=<hi>`` recording the values mapped to 0 and 255.
CSV matrices keep grid order: CSV row r is grid row r.
"""

from __future__ import annotations

import csv
import re

import numpy as np

_SCALE_RE = re.compile(rb"#\s*scale min=(\S+) max=(\S+)")


def write_matrix_csv(values_2d, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(values_2d, dtype=float):
            writer.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if len({len(r) for r in rows}) > 1:
        raise ValueError(f"{path}: ragged matrix")
    return np.array(rows, dtype=float)


def to_gray(values_2d, vmin=None, vmax=None):
    """Scale to 0..255. Returns (pixels, vmin, vmax) with the limits used."""
    a = np.asarray(values_2d, dtype=float)
    lo = float(a.min()) if vmin is None else float(vmin)
    hi = float(a.max()) if vmax is None else float(vmax)
    if hi > lo:
        scaled = (np.clip(a, lo, hi) - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(a)
    return np.rint(scaled * 255.0).astype(np.uint8), lo, hi


def write_pgm(values_2d, path, vmin=None, vmax=None, scale: int = 1) -> tuple[float, float]:
    """Write a P5 graymap; ``scale`` repeats each cell as a scale x scale block."""
    pixels, lo, hi = to_gray(values_2d, vmin, vmax)
    pixels = pixels[::-1]
    if scale > 1:
        pixels = np.repeat(np.repeat(pixels, scale, axis=0), scale, axis=1)
    h, w = pixels.shape
    header = f"P5\n# scale min={lo!r} max={hi!r}\n{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())
    return lo, hi


def read_pgm(path):
    """Read a P5 file written by :func:`write_pgm`.

    Returns (pixels in grid row order, (vmin, vmax) or None).
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM")
    tokens, comments, pos = [], [], 2
    while len(tokens) < 3:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos:end])
            pos = end + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    pos += 1
    w, h, maxval = tokens
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    pixels = np.frombuffer(data[pos:pos + w * h], dtype=np.uint8)
    if pixels.size != w * h:
        raise ValueError(f"{path}: truncated pixel data")
    scale = None
    for c in comments:
        m = _SCALE_RE.match(c)
        if m:
            scale = (float(m.group(1)), float(m.group(2)))
    return pixels.reshape(h, w)[::-1], scale
