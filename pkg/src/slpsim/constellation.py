"""PSK constellations and their constructive-interference region geometry.

Each point of an M-PSK set (M >= 4) has exactly two nearest neighbours on
the unit circle.  The distance-preserving constructive interference region
(DPCIR) of a point is the polyhedral cone anchored at the point in which a
receive point keeps at least the nominal distance to the point's decision
boundaries; its two outward normals are the difference vectors from the
point to its neighbours.  Those 2x2 normal matrices and their exact
inverses are precomputed once per constellation, everything downstream
works with them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Constellation", "build_psk", "dpcir_matrix", "ml_detect", "dpcir_contains"]


@dataclass(frozen=True)
class Constellation:
    """An M-PSK constellation with per-point DPCIR geometry.

    Attributes:
        order: number of points M.
        points: (M, 2) real coordinates on the unit circle.
        neighbors: (M, 2) indices of the two nearest neighbours of each
            point, lower-angle neighbour first.
        dpcir: (M, 2, 2) per-point normal matrices; row j of dpcir[i] is
            points[i] - points[neighbors[i, j]].
        dpcir_inv: (M, 2, 2) exact 2x2 inverses of dpcir.
    """

    order: int
    points: np.ndarray
    neighbors: np.ndarray
    dpcir: np.ndarray
    dpcir_inv: np.ndarray


def build_psk(order: int) -> Constellation:
    """Build a unit-power M-PSK constellation with DPCIR matrices.

    Points sit at angles 2*pi*i/M + pi/M, i = 0..M-1, so no point lies on a
    coordinate axis.  Orders below 4 are rejected: with fewer points the
    two-neighbour cone construction degenerates.

    Args:
        order: constellation size M, at least 4.

    Returns:
        Constellation with read-only arrays.
    """
    if order < 4:
        raise ValueError(f"PSK order must be at least 4, got {order}")
    m = int(order)
    idx = np.arange(m)
    theta = 2.0 * np.pi * idx / m + np.pi / m
    points = np.column_stack([np.cos(theta), np.sin(theta)])
    neighbors = np.column_stack([(idx - 1) % m, (idx + 1) % m])
    # row j of the normal matrix is the difference to neighbour j
    dpcir = points[:, None, :] - points[neighbors]
    dpcir_inv = _inv2x2(dpcir)
    for arr in (points, neighbors, dpcir, dpcir_inv):
        arr.setflags(write=False)
    return Constellation(m, points, neighbors, dpcir, dpcir_inv)


def _inv2x2(blocks: np.ndarray) -> np.ndarray:
    """Exact elementwise inverse of a stack of 2x2 matrices."""
    a = blocks[..., 0, 0]
    b = blocks[..., 0, 1]
    c = blocks[..., 1, 0]
    d = blocks[..., 1, 1]
    det = a * d - b * c
    inv = np.empty_like(blocks)
    inv[..., 0, 0] = d / det
    inv[..., 0, 1] = -b / det
    inv[..., 1, 0] = -c / det
    inv[..., 1, 1] = a / det
    return inv


def dpcir_matrix(constellation: Constellation, index: int) -> np.ndarray:
    """Return the 2x2 DPCIR normal matrix of constellation point `index`."""
    return constellation.dpcir[index]


def ml_detect(constellation: Constellation, y: np.ndarray) -> int:
    """Index of the constellation point nearest to `y` (ties: lowest index)."""
    d2 = np.sum((constellation.points - np.asarray(y, dtype=float)) ** 2, axis=1)
    return int(np.argmin(d2))


def dpcir_contains(
    constellation: Constellation,
    index: int,
    y: np.ndarray,
    scale: float = 1.0,
    tol: float = 1e-9,
) -> bool:
    """Whether `y` lies in the DPCIR of point `index` scaled by `scale`.

    Membership means A_i (y - scale * x_i) >= -tol elementwise, where A_i
    is the point's normal matrix and x_i the point itself.
    """
    margin = constellation.dpcir[index] @ (np.asarray(y, dtype=float) - scale * constellation.points[index])
    return bool(np.all(margin >= -tol))
