"""Exact Euclidean nearest neighbors and the minority KNN graph."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._validation import check_count, check_features

TREE_MIN_POINTS = 2000
TREE_MAX_DIM = 32


class NeighborIndex:
    """Exact k-nearest-neighbor queries with a fixed tie rule.

    Results are ordered by Euclidean distance, then by ascending id, and are
    identical for the ``"brute"`` and ``"tree"`` strategies: the tree only
    proposes a candidate ball; final ranking always uses the same squared
    distance arithmetic as brute force.

    Parameters
    ----------
    X : array-like of shape (n_points, n_features)
    strategy : {"auto", "brute", "tree"}
        ``"auto"`` picks the tree for ``n >= 2000`` and ``d <= 32``.
    """

    def __init__(self, X, strategy="auto"):
        self.X = check_features(X, min_samples=1)
        n, d = self.X.shape
        if strategy == "auto":
            strategy = "tree" if n >= TREE_MIN_POINTS and d <= TREE_MAX_DIM else "brute"
        if strategy not in ("brute", "tree"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.strategy = strategy
        self._tree = cKDTree(self.X) if strategy == "tree" else None

    def __len__(self):
        return self.X.shape[0]

    def _sq_dist(self, q, ids=None):
        P = self.X if ids is None else self.X[ids]
        diff = P - q
        return np.einsum("ij,ij->i", diff, diff)

    def _rank(self, q, ids, sq, m, skip):
        keep = ids != skip
        ids, sq = ids[keep], sq[keep]
        order = np.lexsort((ids, sq))[:m]
        return ids[order]

    def query(self, query, m, exclude_self=False):
        """Ids of the ``m`` nearest points.

        ``query`` is either a point or an integer member id. With
        ``exclude_self`` a member id is left out of its own result.
        """
        if isinstance(query, (int, np.integer)):
            skip = int(query)
            q = self.X[skip]
            if not exclude_self:
                skip = -1
        else:
            q = np.asarray(query, dtype=float)
            if q.shape != (self.X.shape[1],):
                raise ValueError(f"query has shape {q.shape}, expected ({self.X.shape[1]},)")
            skip = -1
        m = check_count(m, "m")
        available = len(self) - (skip >= 0)
        if m > available:
            raise ValueError(f"requested {m} neighbors but only {available} points available")
        if m == 0:
            return np.empty(0, dtype=np.intp)

        if self.strategy == "brute":
            sq = self._sq_dist(q)
            ids = np.arange(len(self))
            want = m + (skip >= 0)
            if want < len(self):
                kth = np.partition(sq, want - 1)[want - 1]
                cand = np.flatnonzero(sq <= kth)
                ids, sq = cand, sq[cand]
            return self._rank(q, ids, sq, m, skip)

        want = min(len(self), m + (skip >= 0))
        dist, _ = self._tree.query(q, k=want)
        radius = float(np.atleast_1d(dist)[-1])
        # widen the ball so ties at the boundary are never lost
        cand = np.asarray(self._tree.query_ball_point(q, radius * (1 + 1e-9) + 1e-300), dtype=np.intp)
        return self._rank(q, cand, self._sq_dist(q, cand), m, skip)

    def query_many(self, ids, m, exclude_self=True):
        return [self.query(int(i), m, exclude_self=exclude_self) for i in ids]


def k_nearest(index, query, m, exclude_self=False):
    return index.query(query, m, exclude_self=exclude_self)


@dataclass(frozen=True)
class KnnGraph:
    """Directed KNN graph: row ``i`` of ``neighbors`` holds N_k(x_i).

    ``mutual[i, c]`` is true when the edge ``i -> neighbors[i, c]`` has a
    reverse edge.
    """

    neighbors: np.ndarray
    mutual: np.ndarray

    @property
    def n_nodes(self):
        return self.neighbors.shape[0]

    @property
    def k(self):
        return self.neighbors.shape[1]

    def edges(self):
        src = np.repeat(np.arange(self.n_nodes), self.k)
        return np.column_stack([src, self.neighbors.ravel()])


def build_knn_graph(minority, k, strategy="auto"):
    """Directed KNN graph over the rows of ``minority`` (self excluded)."""
    X = check_features(minority, min_samples=1)
    k = check_count(k, "k", minimum=1)
    n = X.shape[0]
    if n <= k:
        raise ValueError(f"need more than k={k} points, got {n}")
    index = NeighborIndex(X, strategy)
    neighbors = np.array([index.query(i, k, exclude_self=True) for i in range(n)], dtype=np.intp)
    adjacency = np.zeros((n, n), dtype=bool)
    adjacency[np.repeat(np.arange(n), k), neighbors.ravel()] = True
    mutual = adjacency[neighbors, np.arange(n)[:, None]]
    return KnnGraph(neighbors=neighbors, mutual=mutual)


def mutuality_fraction(g):
    """Fraction of directed edges whose reverse edge also exists."""
    if g.neighbors.size == 0:
        raise ValueError("graph has no edges")
    return float(g.mutual.mean())
