"""Regularized least-squares image reconstruction.

The attenuation image is

    x_hat = (W^T W + eta C^{-1})^{-1} W^T y

with an exponential covariance prior ``C``. The operator in front of ``y`` is
frame independent, so it is computed once and each frame costs one
matrix-vector product.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import NumericError
from .geometry import Grid
from .kernels import exp_covariance
from .weight_model import WeightMatrix

log = logging.getLogger(__name__)

JITTER_SCALE = 1e-10


@dataclass(frozen=True)
class RtiParams:
    eta: float = 1.5
    sigma: float = 0.5
    delta_corr_m: float = 3.0

    def __post_init__(self):
        for name in ("eta", "sigma", "delta_corr_m"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    values: np.ndarray
    sigma: float
    delta_corr_m: float
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.values.shape[0]


def covariance_matrix(grid: Grid, params: RtiParams) -> CovarianceMatrix:
    values = exp_covariance(grid.centers, params.sigma, params.delta_corr_m)
    return CovarianceMatrix(values, params.sigma, params.delta_corr_m)


def _cholesky(a, what, scale):
    """Lower Cholesky factor, retrying once with diagonal jitter."""
    try:
        return la.cho_factor(a, lower=True, check_finite=False), 0.0
    except la.LinAlgError:
        jitter = JITTER_SCALE * scale
        log.warning("%s not numerically positive definite; adding jitter %.3g", what, jitter)
        try:
            return la.cho_factor(a + jitter * np.eye(a.shape[0]), lower=True,
                                 check_finite=False), jitter
        except la.LinAlgError as exc:
            raise NumericError(f"{what} is not positive definite") from exc


def covariance_inverse(c: CovarianceMatrix) -> np.ndarray:
    factor, jitter = _cholesky(c.values, "covariance", c.sigma ** 2)
    if jitter:
        log.info("covariance factorized with jitter %.3g", jitter)
    inv = la.cho_solve(factor, np.eye(c.n), check_finite=False)
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True, eq=False)
class ProjectionOperator:
    """N x Q matrix mapping an RSS-change vector to an attenuation image."""

    matrix: np.ndarray
    grid: Grid
    weights: WeightMatrix
    covariance: CovarianceMatrix
    eta: float
    provenance: str = ""
    _reduced: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def q(self) -> int:
        return self.matrix.shape[1]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def restrict(self, keep) -> "ProjectionOperator":
        """Operator for the subset of links flagged in ``keep``.

        Needed when links are dropped from a frame; results are cached per mask.
        """
        keep = np.asarray(keep, dtype=bool)
        if keep.shape != (self.q,):
            raise ValueError(f"link mask must have length {self.q}")
        if keep.all():
            return self
        key = keep.tobytes()
        if key not in self._reduced:
            self._reduced[key] = precompute_projection(
                self.weights.select_links(keep), self.covariance, self.eta)
        return self._reduced[key]


def _provenance(w: WeightMatrix, c: CovarianceMatrix, eta: float) -> str:
    h = hashlib.sha256()
    g = w.grid
    h.update(repr((tuple(g.origin), tuple(g.axis_u), tuple(g.axis_v),
                   g.n_u, g.n_v, g.cell_size)).encode())
    h.update(repr([(l.link_id, tuple(l.reader_pos), tuple(l.tag_pos)) for l in w.links]).encode())
    h.update(repr((w.params.beta_m, c.sigma, c.delta_corr_m, eta)).encode())
    return h.hexdigest()[:16]


def precompute_projection(w: WeightMatrix, c: CovarianceMatrix, eta: float) -> ProjectionOperator:
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be positive, got {eta}")
    if c.n != w.n:
        raise ValueError(f"covariance is {c.n}x{c.n} but weights have {w.n} cells")
    wd = w.dense()
    system = wd.T @ wd + eta * covariance_inverse(c)
    system = 0.5 * (system + system.T)
    factor, _ = _cholesky(system, "regularized normal matrix", float(np.mean(np.diag(system))))
    p = la.cho_solve(factor, wd.T, check_finite=False)
    return ProjectionOperator(p, w.grid, w, c, float(eta), _provenance(w, c, eta))


@dataclass(frozen=True, eq=False)
class AttenuationImage:
    grid: Grid
    values: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise ValueError(f"image has {values.shape} values, grid has {self.grid.n_cells} cells")
        if not np.all(np.isfinite(values)):
            raise ValueError("image values must be finite")
        object.__setattr__(self, "values", values)

    def as_2d(self) -> np.ndarray:
        """(n_v, n_u) array; row r is grid row r (increasing along axis_v)."""
        return self.values.reshape(self.grid.n_v, self.grid.n_u)


def reconstruct(p: ProjectionOperator, delta_y, timestamp: float = 0.0) -> AttenuationImage:
    """Attenuation image for one shadowing vector (positive = extra loss)."""
    y = np.asarray(delta_y, dtype=float)
    if y.shape != (p.q,):
        raise ValueError(f"expected {p.q} link values, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("delta_y contains non-finite entries; impute or drop missing reads first")
    return AttenuationImage(p.grid, p.matrix @ y, timestamp)


def normal_equation_residual(p: ProjectionOperator, delta_y, x_hat) -> float:
    """Relative residual of (W^T W + eta C^-1) x = W^T y."""
    wd = p.weights.dense()
    lhs = wd.T @ (wd @ x_hat) + p.eta * (covariance_inverse(p.covariance) @ x_hat)
    rhs = wd.T @ np.asarray(delta_y, dtype=float)
    return float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs)))
