"""Monitored-region geometry: points, the imaging grid, reader-to-tag links.

Everything is in meters. Grids are planar but every cell center is a full 3D
point, so link membership can be tested against the real antenna and tag
positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import GeometryError

ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise GeometryError(f"non-finite coordinate {name}={value}")
            object.__setattr__(self, name, value)

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "Point3":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def distance_to(self, other: "Point3") -> float:
        return math.dist(tuple(self), tuple(other))


@dataclass(frozen=True)
class Grid:
    """Planar grid of ``n_u * n_v`` square cells indexed row-major.

    Cell ``j`` sits at column ``j % n_u`` and row ``j // n_u``; columns advance
    along ``axis_u`` and rows along ``axis_v``.
    """

    origin: Point3
    axis_u: Point3
    axis_v: Point3
    n_u: int
    n_v: int
    cell_size: float

    @property
    def n_cells(self) -> int:
        return self.n_u * self.n_v

    @property
    def width(self) -> float:
        return self.n_u * self.cell_size

    @property
    def height(self) -> float:
        return self.n_v * self.cell_size

    @cached_property
    def centers(self) -> np.ndarray:
        """(N, 3) array of cell centers in index order."""
        rows, cols = np.divmod(np.arange(self.n_cells), self.n_u)
        s = self.cell_size
        return (self.origin.as_array()
                + ((cols + 0.5) * s)[:, None] * self.axis_u.as_array()
                + ((rows + 0.5) * s)[:, None] * self.axis_v.as_array())

    @cached_property
    def centers_uv(self) -> np.ndarray:
        rows, cols = np.divmod(np.arange(self.n_cells), self.n_u)
        return np.column_stack(((cols + 0.5) * self.cell_size,
                                (rows + 0.5) * self.cell_size))

    def to_uv(self, p) -> tuple[float, float]:
        """In-plane coordinates of the orthogonal projection of ``p``."""
        rel = np.asarray(tuple(p), dtype=float) - self.origin.as_array()
        return float(rel @ self.axis_u.as_array()), float(rel @ self.axis_v.as_array())

    def cell_rc(self, p) -> tuple[int, int]:
        """(row, col) of the cell containing the projection of ``p``, clamped."""
        u, v = self.to_uv(p)
        col = min(max(int(math.floor(u / self.cell_size)), 0), self.n_u - 1)
        row = min(max(int(math.floor(v / self.cell_size)), 0), self.n_v - 1)
        return row, col

    def rc(self, j: int) -> tuple[int, int]:
        _check_index(self, j)
        return divmod(int(j), self.n_u)


@dataclass(frozen=True)
class Link:
    link_id: int
    reader_pos: Point3
    tag_pos: Point3
    length_m: float = field(default=float("nan"))

    def __post_init__(self):
        length = self.reader_pos.distance_to(self.tag_pos)
        if not length > 0:
            raise GeometryError(f"link {self.link_id}: tag coincides with reader")
        if math.isnan(self.length_m):
            object.__setattr__(self, "length_m", length)
        elif abs(self.length_m - length) > 1e-9:
            raise GeometryError(
                f"link {self.link_id}: length {self.length_m} != endpoint distance {length}")


@dataclass(frozen=True)
class Scene:
    reader_pos: Point3
    tags: tuple[tuple[str, Point3], ...]
    grid: Grid

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple((str(t), p) for t, p in self.tags))
        if not self.tags:
            raise GeometryError("scene needs at least one tag")
        ids = [t for t, _ in self.tags]
        if len(set(ids)) != len(ids):
            raise GeometryError(f"duplicate tag ids in {ids}")

    @property
    def tag_ids(self) -> list[str]:
        return [t for t, _ in self.tags]

    def tag_pos(self, tag_id: str) -> Point3:
        return dict(self.tags)[tag_id]


def _as_point(p) -> Point3:
    return p if isinstance(p, Point3) else Point3(*p)


def build_grid(origin, axis_u, axis_v, n_u: int, n_v: int, cell_size: float) -> Grid:
    """Construct a grid, normalizing the axes and removing rounding-level skew.

    Axes that are not orthogonal to within ``ORTHO_TOL`` (after normalization)
    raise :class:`GeometryError`.
    """
    if int(n_u) != n_u or int(n_v) != n_v or n_u < 1 or n_v < 1:
        raise ValueError(f"cell counts must be positive integers, got {n_u}x{n_v}")
    if not (cell_size > 0 and math.isfinite(cell_size)):
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    u = _as_point(axis_u).as_array()
    v = _as_point(axis_v).as_array()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise GeometryError("grid axes must be nonzero")
    u, v = u / nu, v / nv
    dot = float(u @ v)
    if abs(dot) > ORTHO_TOL:
        raise GeometryError(f"grid axes not orthogonal (u.v = {dot:.3g})")
    v = v - dot * u
    v /= np.linalg.norm(v)
    return Grid(_as_point(origin), Point3.from_array(u), Point3.from_array(v),
                int(n_u), int(n_v), float(cell_size))


def _check_index(grid: Grid, j) -> None:
    if not 0 <= j < grid.n_cells:
        raise IndexError(f"cell index {j} outside 0..{grid.n_cells - 1}")


def cell_center(grid: Grid, j: int) -> Point3:
    _check_index(grid, j)
    row, col = divmod(int(j), grid.n_u)
    s = grid.cell_size
    o, u, v = grid.origin, grid.axis_u, grid.axis_v
    return Point3(o.x + (col + 0.5) * s * u.x + (row + 0.5) * s * v.x,
                  o.y + (col + 0.5) * s * u.y + (row + 0.5) * s * v.y,
                  o.z + (col + 0.5) * s * u.z + (row + 0.5) * s * v.z)


def make_links(scene: Scene) -> list[Link]:
    """One monostatic link per tag, in tag order."""
    return [Link(i, scene.reader_pos, pos) for i, (_, pos) in enumerate(scene.tags)]


def link_arrays(links: Sequence[Link]):
    """Stack link endpoints and lengths for the vectorized kernels."""
    readers = np.array([tuple(l.reader_pos) for l in links], dtype=float).reshape(-1, 3)
    tags = np.array([tuple(l.tag_pos) for l in links], dtype=float).reshape(-1, 3)
    lengths = np.array([l.length_m for l in links], dtype=float)
    return readers, tags, lengths
