"""Tolerance-aware collinearity, line fitting and line intersection.

All tolerances are relative to point spread so that one configuration serves
every (standardized) dataset. The functions here are pure and vectorized where
the attacks need throughput.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


@dataclass(frozen=True)
class GeometryConfig:
    """Numeric tolerances for the geometric predicates.

    Parameters
    ----------
    eps_col : float
        Collinearity tolerance: residual of the middle point from the line
        through the two extreme points, relative to the largest pairwise
        distance.
    eps_int : float
        Maximum closest-approach gap for two lines to count as intersecting,
        scaled by ``1 + min anchor norm``.
    eps_merge : float
        Radius under which intersection candidates are merged.
    eps_par : float
        Lines with ``|cos angle| > 1 - eps_par`` are treated as parallel.
    """

    eps_col: float = 1e-9
    eps_int: float = 1e-7
    eps_merge: float = 1e-6
    eps_par: float = 1e-12

    def __post_init__(self):
        for name in ("eps_col", "eps_int", "eps_merge", "eps_par"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.eps_merge < self.eps_int:
            raise ValueError("eps_merge must be >= eps_int")

    @classmethod
    def from_string(cls, text):
        """Parse ``"col=1e-9,int=1e-7,merge=1e-6,par=1e-12"`` (any subset)."""
        values = {}
        for item in filter(None, (part.strip() for part in text.split(","))):
            key, _, value = item.partition("=")
            key = key.strip()
            if not key.startswith("eps_"):
                key = "eps_" + key
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown tolerance {key!r}")
            values[key] = float(value)
        return cls(**values)


DEFAULT_GEOMETRY = GeometryConfig()


@dataclass(frozen=True)
class Line:
    """A detected group of collinear points.

    ``anchor`` is the mean of the member points, ``direction`` a unit vector
    and ``span`` the (min, max) member projections onto the direction,
    measured from the anchor.
    """

    anchor: np.ndarray
    direction: np.ndarray
    members: tuple
    span: tuple

    def project(self, points):
        return (np.asarray(points, dtype=float) - self.anchor) @ self.direction

    def distance(self, points):
        offset = np.atleast_2d(np.asarray(points, dtype=float)) - self.anchor
        along = offset @ self.direction
        return np.linalg.norm(offset - along[:, None] * self.direction, axis=1)


def _triple_geometry(P0, P1, P2):
    """Residual, largest pairwise distance and middle index of point triples.

    The two points realizing the largest pairwise distance define the line;
    the middle is the point with the median projection onto it (stable order
    breaks ties). The residual is the orthogonal distance of the middle point
    from that line.
    """
    T = np.stack([P0, P1, P2], axis=1)  # (n, 3, d)
    d12 = np.linalg.norm(T[:, 1] - T[:, 2], axis=1)
    d02 = np.linalg.norm(T[:, 0] - T[:, 2], axis=1)
    d01 = np.linalg.norm(T[:, 0] - T[:, 1], axis=1)
    # pair opposite to vertex v: v=0 -> (1,2), v=1 -> (0,2), v=2 -> (0,1)
    D = np.stack([d12, d02, d01], axis=1)
    opposite = np.argmax(D, axis=1)
    maxdist = D[np.arange(len(D)), opposite]
    first = np.where(opposite == 0, 1, 0)
    second = np.where(opposite == 2, 1, 2)
    rows = np.arange(len(T))
    e1 = T[rows, first]
    v = T[rows, second] - e1
    vv = np.einsum("ij,ij->i", v, v)
    safe = np.where(vv > 0, vv, 1.0)
    proj = np.einsum("nkd,nd->nk", T - e1[:, None, :], v) / safe[:, None]
    middle = np.argsort(proj, axis=1, kind="stable")[:, 1]
    w = T[rows, middle] - e1
    t = np.einsum("ij,ij->i", w, v) / safe
    residual = np.linalg.norm(w - t[:, None] * v, axis=1)
    residual = np.where(vv > 0, residual, 0.0)
    middle = np.where(vv > 0, middle, 1)
    return residual, maxdist, middle


def _as_triple_arrays(a, b, c):
    a, b, c = (np.atleast_1d(np.asarray(p, dtype=float)) for p in (a, b, c))
    if not (a.shape == b.shape == c.shape) or a.ndim != 1:
        raise ValueError(
            f"points must share one dimension, got shapes {a.shape}, {b.shape}, {c.shape}"
        )
    if a.shape[0] < 2:
        raise ValueError("points must have dimension >= 2")
    return a[None], b[None], c[None]


def collinear(a, b, c, cfg=DEFAULT_GEOMETRY):
    """True if the three points lie on one line within ``cfg.eps_col``."""
    residual, maxdist, _ = _triple_geometry(*_as_triple_arrays(a, b, c))
    return bool(residual[0] <= cfg.eps_col * maxdist[0])


def collinear_mask(P0, P1, P2, cfg=DEFAULT_GEOMETRY):
    """Vectorized :func:`collinear` over stacked triples; also returns middles."""
    residual, maxdist, middle = _triple_geometry(P0, P1, P2)
    return residual <= cfg.eps_col * maxdist, middle


def middle_of_three(a, b, c, cfg=DEFAULT_GEOMETRY):
    """Index (0, 1 or 2) of the argument lying between the other two."""
    arrays = _as_triple_arrays(a, b, c)
    residual, maxdist, middle = _triple_geometry(*arrays)
    if residual[0] > cfg.eps_col * maxdist[0]:
        raise ValueError("middle_of_three called on a non-collinear triple")
    return int(middle[0])


# Generic fixed direction used to sort unit vectors; any vector avoiding
# special alignments with the data works.
def _probe_direction(d):
    w = np.sin(0.7 * np.arange(1, d + 1) + 0.3)
    return w / np.linalg.norm(w)


def collinear_pairs(center, points, cfg=DEFAULT_GEOMETRY, near_ratio=1e-3):
    """All pairs ``(a, b)``, ``a < b``, with ``(center, points[a], points[b])`` collinear.

    Returns ``(pairs, middle)`` where ``pairs`` has shape (n_pairs, 2) in
    lexicographic order and ``middle`` gives, per pair, the middle of the
    triple as 0 (center), 1 (``points[a]``) or 2 (``points[b]``).

    Candidate pairs are found by sorting the sign-canonicalized directions
    from ``center`` along a probe vector; collinear pairs differ in that
    projection by at most the angular slack implied by ``eps_col``. Points
    much closer to ``center`` than the rest (``near_ratio``) admit large
    angles, so they are checked against everything directly. Every candidate
    is confirmed with the exact triple predicate.
    """
    center = np.asarray(center, dtype=float)
    points = np.asarray(points, dtype=float)
    m = len(points)
    empty = (np.empty((0, 2), dtype=np.intp), np.empty(0, dtype=np.intp))
    if m < 2:
        return empty

    diff = points - center
    length = np.linalg.norm(diff, axis=1)
    lmax = length.max()
    if lmax == 0.0:
        a, b = np.triu_indices(m, k=1)
        return np.column_stack([a, b]), np.ones(len(a), dtype=np.intp)

    near = length < near_ratio * lmax
    regular = np.flatnonzero(~near)
    near_ids = np.flatnonzero(near)

    chunks = []
    if len(regular) >= 2:
        unit = diff[regular] / length[regular, None]
        s = unit @ _probe_direction(points.shape[1])
        s = np.abs(s)
        order = np.argsort(s, kind="stable")
        sv = s[order]
        # angle slack between the two directions, mapped to the probe projection
        width = 0.5 * np.pi * cfg.eps_col * (2.0 + 2.0 / near_ratio) + 1e-12
        hi = np.searchsorted(sv, sv + width, side="right")
        counts = hi - np.arange(len(sv)) - 1
        total = int(counts.sum())
        if total:
            first = np.repeat(np.arange(len(sv)), counts)
            starts = np.cumsum(counts) - counts
            offset = np.arange(total) - np.repeat(starts, counts)
            second = first + 1 + offset
            chunks.append(np.column_stack([regular[order[first]], regular[order[second]]]))
    if len(near_ids):
        others = np.arange(m)
        a = np.repeat(near_ids, m)
        b = np.tile(others, len(near_ids))
        keep = a != b
        chunks.append(np.column_stack([a[keep], b[keep]]))
    if not chunks:
        return empty

    cand = np.concatenate(chunks)
    cand = np.sort(cand, axis=1)
    cand = np.unique(cand, axis=0)
    P0 = np.broadcast_to(center, (len(cand), center.shape[0]))
    ok, middle = collinear_mask(P0, points[cand[:, 0]], points[cand[:, 1]], cfg)
    return cand[ok], middle[ok]


def find_collinear_triples(X, cfg=DEFAULT_GEOMETRY, limit=None):
    """Exhaustive scan for collinear triples ``(i, j, k)`` with ``i < j < k``."""
    X = np.asarray(X, dtype=float)
    found = []
    for i in range(len(X) - 2):
        pairs, _ = collinear_pairs(X[i], X[i + 1 :], cfg)
        for a, b in pairs:
            found.append((i, i + 1 + int(a), i + 1 + int(b)))
            if limit is not None and len(found) >= limit:
                return found
    return found


def fit_line(points, members, reference=None):
    """Build a :class:`Line` from member ids.

    The direction joins the members with extreme projections onto
    ``reference`` (default: the first-to-farthest member direction).
    """
    members = tuple(int(i) for i in members)
    P = points[list(members)]
    anchor = P.mean(axis=0)
    if reference is None:
        reference = P[np.argmax(np.linalg.norm(P - P[0], axis=1))] - P[0]
    t = (P - anchor) @ reference
    lo, hi = int(np.argmin(t)), int(np.argmax(t))
    direction = P[hi] - P[lo]
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        direction = np.zeros_like(anchor)
        direction[0] = 1.0
    else:
        direction = direction / norm
    proj = (P - anchor) @ direction
    return Line(anchor=anchor, direction=direction, members=members,
                span=(float(proj.min()), float(proj.max())))


def grow_line(seed, candidates, points, cfg=DEFAULT_GEOMETRY):
    """Extend a collinear seed triple with every candidate on its line."""
    points = np.asarray(points, dtype=float)
    seed = [int(i) for i in seed]
    P = points[seed]
    D = np.linalg.norm(P[:, None] - P[None], axis=2)
    a, b = np.unravel_index(np.argmax(D), D.shape)
    e1, e2 = P[min(a, b)], P[max(a, b)]
    members = list(dict.fromkeys(seed))
    cand = [int(c) for c in candidates if int(c) not in set(members)]
    if cand:
        C = points[cand]
        n = len(C)
        ok, _ = collinear_mask(np.broadcast_to(e1, C.shape), np.broadcast_to(e2, C.shape), C, cfg)
        members.extend(c for c, keep in zip(cand, ok[:n]) if keep)
        members = list(dict.fromkeys(members))
    return fit_line(points, members, reference=e2 - e1)


def _closest_approach(A1, U1, A2, U2):
    """Midpoints and gaps of the closest-approach segment for line pairs.

    Written so that swapping the two lines gives bitwise-identical output.
    """
    b = np.einsum("ij,ij->i", U1, U2)
    w = A1 - A2
    d1 = np.einsum("ij,ij->i", U1, w)
    d2 = np.einsum("ij,ij->i", U2, w)
    # sin^2 of the angle, from orthogonal components (no 1 - b^2 cancellation)
    s1 = U1 - b[:, None] * U2
    s2 = U2 - b[:, None] * U1
    sin2 = 0.5 * (np.einsum("ij,ij->i", s1, s1) + np.einsum("ij,ij->i", s2, s2))
    safe = np.where(sin2 > 0, sin2, 1.0)
    s = (b * d2 - d1) / safe
    t = (d2 - b * d1) / safe
    P = A1 + s[:, None] * U1
    Q = A2 + t[:, None] * U2
    gap = np.linalg.norm(P - Q, axis=1)
    return 0.5 * (P + Q), gap, np.abs(b)


def _intersection_mask(A1, U1, A2, U2, cfg):
    mid, gap, cos = _closest_approach(A1, U1, A2, U2)
    scale = 1.0 + np.minimum(np.linalg.norm(A1, axis=1), np.linalg.norm(A2, axis=1))
    ok = (cos <= 1.0 - cfg.eps_par) & (gap <= cfg.eps_int * scale)
    return mid, ok


def intersect_lines(p, q, cfg=DEFAULT_GEOMETRY):
    """Intersection point of two lines, or ``None`` if parallel or skew."""
    if p.anchor.shape != q.anchor.shape:
        raise ValueError("lines live in different dimensions")
    mid, ok = _intersection_mask(p.anchor[None], p.direction[None],
                                 q.anchor[None], q.direction[None], cfg)
    return mid[0] if ok[0] else None


def intersect_all(lines, cfg=DEFAULT_GEOMETRY, chunk_elems=2_000_000):
    """Pairwise intersections of ``lines``: returns (points, pair ids)."""
    L = len(lines)
    if L < 2:
        d = lines[0].anchor.shape[0] if lines else 0
        return np.empty((0, d)), np.empty((0, 2), dtype=np.intp)
    A = np.array([ln.anchor for ln in lines])
    U = np.array([ln.direction for ln in lines])
    d = A.shape[1]
    points, pairs = [], []
    rows_per_chunk = max(1, chunk_elems // max(1, L * d))
    for start in range(0, L - 1, rows_per_chunk):
        stop = min(L - 1, start + rows_per_chunk)
        p_idx, q_idx = [], []
        for p in range(start, stop):
            q = np.arange(p + 1, L)
            p_idx.append(np.full(len(q), p))
            q_idx.append(q)
        p_idx = np.concatenate(p_idx)
        q_idx = np.concatenate(q_idx)
        mid, ok = _intersection_mask(A[p_idx], U[p_idx], A[q_idx], U[q_idx], cfg)
        points.append(mid[ok])
        pairs.append(np.column_stack([p_idx[ok], q_idx[ok]]))
    return np.concatenate(points), np.concatenate(pairs)


def _single_linkage(points, radius):
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=np.intp)
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    # relabel by first appearance so output order follows input order
    _, first = np.unique(labels, return_index=True)
    rank = np.empty(len(first), dtype=np.intp)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[labels]


def merge_candidates(points, supports, cfg=DEFAULT_GEOMETRY):
    """Merge candidates closer than ``cfg.eps_merge``.

    Merged candidates sit at the centroid of their group and carry the union
    of the support sets. Merging repeats until all outputs are more than
    ``eps_merge`` apart.
    """
    points = np.asarray(points, dtype=float)
    supports = [frozenset(s) for s in supports]
    if len(points) == 0:
        return points.reshape(0, points.shape[1] if points.ndim == 2 else 0), []
    while True:
        labels = _single_linkage(points, cfg.eps_merge)
        k = labels.max() + 1
        if k == len(points):
            return points, supports
        counts = np.bincount(labels, minlength=k)
        merged = np.zeros((k, points.shape[1]))
        np.add.at(merged, labels, points)
        merged /= counts[:, None]
        groups = [set() for _ in range(k)]
        for label, s in zip(labels, supports):
            groups[label] |= s
        points, supports = merged, [frozenset(g) for g in groups]
