"""Hot inner loops, each with a numba kernel and a numpy twin.

The public functions dispatch on :data:`backscatter_rti._accel.USE_NUMBA`.
Both paths evaluate distances as ``sqrt(dx*dx + dy*dy + dz*dz)`` in the same
order so membership masks agree bit for bit.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

_ROW_BLOCK = 256


# ellipse membership ----------------------------------------------------------

@njit(cache=True)
def _membership_numba(cells, readers, tags, lengths, beta):
    q = readers.shape[0]
    n = cells.shape[0]
    out = np.zeros((q, n), dtype=np.bool_)
    for i in range(q):
        rx, ry, rz = readers[i, 0], readers[i, 1], readers[i, 2]
        tx, ty, tz = tags[i, 0], tags[i, 1], tags[i, 2]
        limit = lengths[i] + beta
        for j in range(n):
            cx, cy, cz = cells[j, 0], cells[j, 1], cells[j, 2]
            dx = cx - rx
            dy = cy - ry
            dz = cz - rz
            d_r = math.sqrt(dx * dx + dy * dy + dz * dz)
            dx = cx - tx
            dy = cy - ty
            dz = cz - tz
            d_t = math.sqrt(dx * dx + dy * dy + dz * dz)
            out[i, j] = d_r + d_t < limit
    return out


def _norm_rows(diff):
    dx, dy, dz = diff[:, 0], diff[:, 1], diff[:, 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def _membership_numpy(cells, readers, tags, lengths, beta):
    out = np.zeros((readers.shape[0], cells.shape[0]), dtype=bool)
    for i in range(readers.shape[0]):
        d_r = _norm_rows(cells - readers[i])
        d_t = _norm_rows(cells - tags[i])
        out[i] = d_r + d_t < lengths[i] + beta
    return out


def ellipse_membership(cells, readers, tags, lengths, beta, use_numba=None):
    """Boolean (Q, N) mask of cells strictly inside each link's ellipsoid."""
    cells = np.ascontiguousarray(cells, dtype=np.float64)
    readers = np.ascontiguousarray(readers, dtype=np.float64)
    tags = np.ascontiguousarray(tags, dtype=np.float64)
    lengths = np.ascontiguousarray(lengths, dtype=np.float64)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba and _accel.HAVE_NUMBA:
        return _membership_numba(cells, readers, tags, lengths, float(beta))
    return _membership_numpy(cells, readers, tags, lengths, float(beta))


# exponential covariance ------------------------------------------------------

@njit(cache=True)
def _exp_cov_numba(centers, variance, delta):
    n = centers.shape[0]
    out = np.empty((n, n))
    for m in range(n):
        out[m, m] = variance
        for k in range(m + 1, n):
            dx = centers[m, 0] - centers[k, 0]
            dy = centers[m, 1] - centers[k, 1]
            dz = centers[m, 2] - centers[k, 2]
            v = variance * math.exp(-math.sqrt(dx * dx + dy * dy + dz * dz) / delta)
            out[m, k] = v
            out[k, m] = v
    return out


def _exp_cov_numpy(centers, variance, delta):
    n = centers.shape[0]
    out = np.empty((n, n))
    for start in range(0, n, _ROW_BLOCK):
        block = centers[start:start + _ROW_BLOCK]
        diff = block[:, None, :] - centers[None, :, :]
        dx, dy, dz = diff[..., 0], diff[..., 1], diff[..., 2]
        dist = np.sqrt(dx * dx + dy * dy + dz * dz)
        out[start:start + _ROW_BLOCK] = variance * np.exp(-dist / delta)
    # exact symmetry regardless of libm rounding
    upper = np.triu_indices(n, 1)
    out[upper[1], upper[0]] = out[upper]
    return out


def exp_covariance(centers, sigma, delta, use_numba=None):
    """``sigma**2 * exp(-||c_m - c_n|| / delta)`` over all center pairs."""
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    variance = float(sigma) ** 2
    if use_numba and _accel.HAVE_NUMBA:
        return _exp_cov_numba(centers, variance, float(delta))
    return _exp_cov_numpy(centers, variance, float(delta))
