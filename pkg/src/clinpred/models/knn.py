"""k-nearest-neighbour prediction under the mixed-type distance."""
from dataclasses import dataclass

import numpy as np

from ..preprocess import gower_distances

CHUNK = 512


def neighbour_order(ref, query, kinds, scale, k_max):
    """Indices of the ``k_max`` nearest reference rows per query row.

    Distances are rounded to 12 significant digits before a stable sort so
    floating-point noise cannot reorder ties; equal distances keep the lower
    reference index first.
    """
    out = np.empty((query.shape[0], k_max), dtype=np.int64)
    for lo in range(0, query.shape[0], CHUNK):
        d = gower_distances(query[lo:lo + CHUNK], ref, kinds, scale)
        d = np.round(d, 12)
        out[lo:lo + CHUNK] = np.argsort(d, axis=1, kind="stable")[:, :k_max]
    return out


@dataclass(frozen=True, eq=False)
class KnnModel:
    reference: np.ndarray
    target: np.ndarray
    kinds: tuple
    scale: np.ndarray
    k: int

    def predict(self, X, k=None):
        k = self.k if k is None else k
        order = neighbour_order(self.reference, np.asarray(X, dtype=float), self.kinds, self.scale, k)
        return self.target[order].mean(axis=1)


def knn_fit(X, y, kinds, k=5, scale=None):
    X = np.asarray(X, dtype=float)
    if scale is None:
        scale = np.array([X[:, j].std(ddof=1) if kd == "continuous" else 1.0 for j, kd in enumerate(kinds)])
        scale[~(scale > 0)] = 1.0
    return KnnModel(X, np.asarray(y, dtype=float), tuple(kinds), scale, int(min(k, X.shape[0])))
