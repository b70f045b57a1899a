from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from sklearn.neighbors import NearestNeighbors

from pattern.geometry import RectWindow, torus_difference


def close_pairs(
    a_xy: np.ndarray,
    b_xy: np.ndarray,
    r_max: float,
    window: RectWindow,
    periodic: bool = False,
    exclude_self: bool = False,
):
    """
    All (i, j) with ||a_i - b_j|| <= r_max, returned as index arrays plus the
    absolute coordinate differences and distances, in (i, j) order.
    With `periodic` the distances are taken on the torus made from the window.
    `exclude_self` drops i == j (a and b are the same pattern).
    """
    empty = (np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0), np.empty(0), np.empty(0))
    if len(a_xy) == 0 or len(b_xy) == 0:
        return empty

    if periodic:
        origin, box = window.origin, window.sides
        ta = cKDTree(np.mod(a_xy - origin, box), boxsize=box)
        tb = cKDTree(np.mod(b_xy - origin, box), boxsize=box)
        coo = ta.sparse_distance_matrix(tb, r_max, output_type="ndarray")
        i, j = coo["i"].astype(int), coo["j"].astype(int)
        dx, dy = torus_difference(window, a_xy[i, 0] - b_xy[j, 0], a_xy[i, 1] - b_xy[j, 1])
    else:
        # slightly inflated radius; the exact cut is applied to recomputed distances below
        nn = NearestNeighbors(radius=r_max * (1 + 1e-9) + 1e-12).fit(b_xy)
        _, ind = nn.radius_neighbors(a_xy, return_distance=True, sort_results=False)
        counts = np.fromiter((len(x) for x in ind), dtype=int, count=len(ind))
        i = np.repeat(np.arange(len(a_xy)), counts)
        j = np.concatenate(ind).astype(int) if counts.sum() else np.empty(0, dtype=int)
        dx = np.abs(a_xy[i, 0] - b_xy[j, 0])
        dy = np.abs(a_xy[i, 1] - b_xy[j, 1])

    d = np.hypot(dx, dy)
    keep = d <= r_max
    if exclude_self:
        keep &= i != j
    order = np.lexsort((j[keep], i[keep]))
    return i[keep][order], j[keep][order], dx[keep][order], dy[keep][order], d[keep][order]


def ordered_bincount(index: np.ndarray, weights: np.ndarray, length: int) -> np.ndarray:
    """
    Per-bin sums whose value does not depend on the input order: contributions
    are added in (bin, value) order.
    """
    if index.size == 0:
        return np.zeros(length)
    order = np.lexsort((weights, index))
    return np.bincount(index[order], weights=weights[order], minlength=length)[:length]
