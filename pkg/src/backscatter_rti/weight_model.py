"""Ellipsoid weight model.

A cell belongs to link ``i`` when its center satisfies
``d_R + d_T < d_i + beta`` (distances to reader and tag); members carry weight
``1 / sqrt(d_i)`` and everything else is zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import Grid, Link, link_arrays
from .kernels import ellipse_membership


@dataclass(frozen=True)
class WeightParams:
    beta_m: float = 0.1

    def __post_init__(self):
        if not (self.beta_m > 0 and math.isfinite(self.beta_m)):
            raise ValueError(f"beta_m must be positive, got {self.beta_m}")

    def scaled(self, factor: float) -> "WeightParams":
        return replace(self, beta_m=self.beta_m * factor)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Sparse (Q, N) weight matrix plus the links and grid it was built from."""

    matrix: sp.csr_matrix
    links: tuple[Link, ...]
    grid: Grid
    params: WeightParams

    @property
    def q(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def membership(self) -> np.ndarray:
        return self.dense() > 0

    def triplets(self):
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def to_csv(self, path_or_file) -> None:
        """Write ``i,j,w`` triplets sorted by (i, j)."""
        rows, cols, vals = self.triplets()

        def _write(fh):
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["i", "j", "w"])
            for i, j, w in zip(rows, cols, vals):
                writer.writerow([int(i), int(j), repr(float(w))])

        if hasattr(path_or_file, "write"):
            _write(path_or_file)
        else:
            with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
                _write(fh)

    def select_links(self, keep) -> "WeightMatrix":
        keep = np.flatnonzero(np.asarray(keep))
        return WeightMatrix(self.matrix[keep], tuple(self.links[k] for k in keep),
                            self.grid, self.params)


def read_weight_csv(path_or_file, shape) -> sp.csr_matrix:
    def _read(fh):
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["i", "j", "w"]:
            raise ValueError(f"unexpected weight CSV header {header}")
        rows, cols, vals = [], [], []
        for i, j, w in reader:
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(w))
        return sp.csr_matrix((vals, (rows, cols)), shape=shape)

    if hasattr(path_or_file, "read"):
        return _read(path_or_file)
    with open(path_or_file, newline="", encoding="utf-8") as fh:
        return _read(fh)


def link_weight(link: Link, cell, params: WeightParams) -> float:
    d_r = math.dist(tuple(cell), tuple(link.reader_pos))
    d_t = math.dist(tuple(cell), tuple(link.tag_pos))
    if d_r + d_t < link.length_m + params.beta_m:
        return 1.0 / math.sqrt(link.length_m)
    return 0.0


def build_weight_matrix(grid: Grid, links: Sequence[Link], params: WeightParams) -> WeightMatrix:
    if len(links) == 0:
        raise ValueError("at least one link is required")
    readers, tags, lengths = link_arrays(links)
    mask = ellipse_membership(grid.centers, readers, tags, lengths, params.beta_m)
    rows, cols = np.nonzero(mask)
    vals = 1.0 / np.sqrt(lengths[rows])
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(len(links), grid.n_cells))
    matrix.sort_indices()
    return WeightMatrix(matrix, tuple(links), grid, params)


def link_membership_field(link: Link, grid: Grid, params: WeightParams) -> np.ndarray:
    """Boolean (n_v, n_u) field of cells inside the link's ellipsoid."""
    readers, tags, lengths = link_arrays([link])
    mask = ellipse_membership(grid.centers, readers, tags, lengths, params.beta_m)[0]
    return mask.reshape(grid.n_v, grid.n_u)
