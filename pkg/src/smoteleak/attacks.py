"""Geometric attacks on SMOTE output.

:class:`DistinSMOTE` labels the minority rows of an augmented dataset as real
or synthetic: the middle point of any collinear triple must be synthetic.
:class:`ReconSMOTE` recovers real minority points from synthetic data alone
as intersections of at least three detected interpolation lines.

Both attacks standardize the minority features first; affine maps preserve
collinearity and betweenness, so the geometry is unchanged while the
tolerances become dataset independent.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_attack_k, check_features
from .data import SYNTHETIC, LabeledDataset, Standardizer, duplicate_groups
from .geometry import (
    DEFAULT_GEOMETRY,
    GeometryConfig,
    collinear_pairs,
    find_collinear_triples,
    fit_line,
    grow_line,
    intersect_all,
    merge_candidates,
)
from .knn import NeighborIndex

SEED_MODES = ("all-points", "hull-extrema")
POST_HOC_SCAN_LIMIT = 500


@dataclass(frozen=True)
class AttackConfig:
    """Adversary knowledge (``k`` and imbalance ratio) plus search settings."""

    k: int = 5
    ratio: float = 10.0
    seed_mode: str = "all-points"
    geometry: GeometryConfig = DEFAULT_GEOMETRY
    verify_survivors: bool = True

    def __post_init__(self):
        check_attack_k(self.k)
        if not self.ratio > 1:
            raise ValueError(f"ratio must exceed 1, got {self.ratio}")
        if self.seed_mode not in SEED_MODES:
            raise ValueError(f"seed_mode must be one of {SEED_MODES}")

    def neighbor_budget(self, n_points):
        return max(0, min(math.ceil(2 * self.k * self.ratio), n_points - 1))


@dataclass
class DegeneracyReport:
    duplicate_groups: list = field(default_factory=list)
    collinear_real: list = field(default_factory=list)
    scanned: bool = False

    @property
    def clean(self):
        return not self.duplicate_groups and not self.collinear_real

    def to_dict(self):
        return {
            "clean": self.clean,
            "duplicate_groups": self.duplicate_groups,
            "collinear_real": [list(t) for t in self.collinear_real],
            "scanned": self.scanned,
        }


@dataclass
class DistinguishResult:
    """Row ids (into the attacked dataset) split into real and synthetic."""

    detected_real: np.ndarray
    pruned_synthetic: np.ndarray
    report: DegeneracyReport

    def to_dict(self):
        return {
            "detected_real": self.detected_real.tolist(),
            "pruned_synthetic": self.pruned_synthetic.tolist(),
            "degeneracy": self.report.to_dict(),
        }


@dataclass
class ReconstructionResult:
    """Reconstruction candidates and the accepted subset.

    ``points`` are in the attacked data's original feature space;
    ``standardized`` holds the same points in the attack's working space and
    ``scaling`` maps between the two.
    """

    lines: list
    candidates: np.ndarray
    candidate_support: list
    accepted: np.ndarray
    accepted_support: list
    scaling: object = None

    @property
    def points(self):
        if self.scaling is None or len(self.accepted) == 0:
            return self.accepted.copy()
        return self.scaling.inverse(self.accepted)

    @property
    def standardized(self):
        return self.accepted

    def to_dict(self):
        return {
            "n_lines": len(self.lines),
            "n_candidates": int(len(self.candidates)),
            "reconstructed": [
                {"point": p.tolist(), "support": sorted(int(i) for i in s)}
                for p, s in zip(self.points, self.accepted_support)
            ],
        }


def _scale_minority(X):
    if len(X) < 2:
        return X.copy(), None
    scaler = Standardizer().fit(X)
    return scaler.transform(X), scaler.params_


def _seed_queue(X, mode):
    if mode == "all-points":
        return list(range(len(X)))
    # per-axis extremes stand in for the convex hull
    seeds = []
    for axis in range(X.shape[1]):
        seeds.extend((int(np.argmin(X[:, axis])), int(np.argmax(X[:, axis]))))
    return list(dict.fromkeys(seeds))


def distinguish_points(X, cfg):
    """Core labeling loop on a minority matrix; returns the boolean real mask."""
    n = len(X)
    candidate = np.ones(n, dtype=bool)
    if n < 3:
        return candidate
    m = cfg.neighbor_budget(n)
    index = NeighborIndex(X)
    visited = np.zeros(n, dtype=bool)
    queue = deque(_seed_queue(X, cfg.seed_mode))
    # with every point seeded, re-enqueueing neighbors cannot change the outcome
    expand = cfg.seed_mode != "all-points"
    while queue:
        i = queue.popleft()
        if visited[i] or not candidate[i]:
            continue
        visited[i] = True
        nb = index.query(i, m, exclude_self=True)
        pairs, middle = collinear_pairs(X[i], X[nb], cfg.geometry)
        if not len(pairs):
            continue
        triple = np.column_stack([np.full(len(pairs), i), nb[pairs[:, 0]], nb[pairs[:, 1]]])
        for mid in triple[np.arange(len(triple)), middle]:
            if not candidate[mid]:
                continue
            candidate[mid] = False
            visited[mid] = True
            if expand:
                queue.extend(int(j) for j in index.query(int(mid), m, exclude_self=True)
                             if candidate[j])
    if cfg.verify_survivors:
        _verify_survivors(X, candidate, cfg.geometry)
    return candidate


def _verify_survivors(X, candidate, geometry):
    """Prune survivors lying strictly between any two other points.

    The bounded neighborhood search can miss a lone synthetic point whose
    endpoints are far apart relative to local density. Survivors are few
    (about the real minority count), so an exact check against all points
    is cheap.
    """
    everyone = np.arange(len(X))
    for c in np.flatnonzero(candidate):
        others = np.delete(everyone, c)
        _, middle = collinear_pairs(X[c], X[others], geometry)
        if np.any(middle == 0):
            candidate[c] = False


def _post_hoc_report(X, real_mask, cfg):
    report = DegeneracyReport(duplicate_groups=duplicate_groups(X))
    real = np.flatnonzero(real_mask)
    if len(real) <= POST_HOC_SCAN_LIMIT:
        report.scanned = True
        triples = find_collinear_triples(X[real], cfg.geometry, limit=50)
        report.collinear_real = [tuple(int(real[t]) for t in tri) for tri in triples]
    return report


def distin_smote(aug, cfg):
    """Split the minority rows of an augmented dataset into real and synthetic.

    Origin flags are stripped before the attack runs; returned ids index
    the rows of ``aug``.
    """
    aug = aug.without_origin()
    rows = aug.minority_rows()
    if len(rows) < cfg.k + 1:
        raise ValueError(f"need at least k+1={cfg.k + 1} minority rows, got {len(rows)}")
    X, _ = _scale_minority(aug.features[rows])
    real_mask = distinguish_points(X, cfg)
    report = _post_hoc_report(X, real_mask, cfg)
    report.duplicate_groups = [[int(rows[i]) for i in g] for g in report.duplicate_groups]
    report.collinear_real = [tuple(int(rows[i]) for i in t) for t in report.collinear_real]
    return DistinguishResult(rows[real_mask], rows[~real_mask], report)


def detect_lines(X, cfg):
    """Seed collinear triples from each unvisited point's neighborhood and grow lines."""
    n = len(X)
    lines = []
    if n < 3:
        return lines
    m = cfg.neighbor_budget(n)
    index = NeighborIndex(X)
    visited = np.zeros(n, dtype=bool)
    for i in range(n):
        if visited[i]:
            continue
        visited[i] = True
        nb = index.query(i, m, exclude_self=True)
        pairs, _ = collinear_pairs(X[i], X[nb], cfg.geometry)
        formed = []
        for a, b in pairs:
            ja, jb = int(nb[a]), int(nb[b])
            if any(ja in s and jb in s for s in formed):
                continue
            others = np.delete(nb, [a, b])
            line = grow_line((i, ja, jb), others, X, cfg.geometry)
            visited[list(line.members)] = True
            formed.append(set(line.members))
            lines.append(line)
    return lines


def merge_duplicate_lines(lines, X, cfg):
    """Union lines that describe the same geometric line."""
    L = len(lines)
    if L < 2:
        return list(lines)
    U = np.array([ln.direction for ln in lines])
    cos = np.abs(U @ U.T)
    parent = list(range(L))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    eps = cfg.geometry.eps_col
    for p, q in zip(*np.nonzero(np.triu(cos > 1.0 - cfg.geometry.eps_par, k=1))):
        lp, lq = lines[p], lines[q]
        ends = np.array([lq.anchor + lq.span[0] * lq.direction, lq.anchor + lq.span[1] * lq.direction])
        spread = max(lp.span[1] - lp.span[0], lq.span[1] - lq.span[0],
                     float(np.max(np.abs(lp.project(ends)))) * 2)
        if np.all(lp.distance(ends) <= eps * max(spread, 1e-300)):
            parent[find(q)] = find(p)
    groups = {}
    for idx in range(L):
        groups.setdefault(find(idx), []).append(idx)
    merged = []
    for root in sorted(groups):
        members = groups[root]
        if len(members) == 1:
            merged.append(lines[root])
            continue
        ids = list(dict.fromkeys(i for g in members for i in lines[g].members))
        merged.append(fit_line(X, ids, reference=lines[root].direction))
    return merged


def reconstruct_points(X, cfg):
    """Lines, raw candidates and accepted reconstructions in the working space."""
    d = X.shape[1] if X.ndim == 2 else 0
    lines = merge_duplicate_lines(detect_lines(X, cfg), X, cfg)
    pts, pairs = intersect_all(lines, cfg.geometry)
    if len(pts):
        # a real endpoint never lies strictly inside its own line's synthetic points
        keep = np.ones(len(pts), dtype=bool)
        tol = cfg.geometry.eps_merge
        for col in (0, 1):
            ids = pairs[:, col]
            A = np.array([lines[i].anchor for i in ids])
            U = np.array([lines[i].direction for i in ids])
            lo = np.array([lines[i].span[0] for i in ids])
            hi = np.array([lines[i].span[1] for i in ids])
            t = np.einsum("ij,ij->i", pts - A, U)
            keep &= ~((t > lo + tol) & (t < hi - tol))
        pts, pairs = pts[keep], pairs[keep]
    supports = [frozenset((int(p), int(q))) for p, q in pairs]
    cand, cand_support = merge_candidates(pts.reshape(-1, d), supports, cfg.geometry)
    ok = np.array([len(s) >= 3 for s in cand_support], dtype=bool)
    accepted = cand[ok] if len(cand) else cand
    return lines, cand, cand_support, accepted, [s for s, k in zip(cand_support, ok) if k]


def recon_smote(syn, cfg):
    """Reconstruct real minority points from a synthetic dataset.

    Only minority rows are used; rows flagged real are rejected.
    """
    if syn.origin is not None and np.any(syn.origin[syn.labels == 1] != SYNTHETIC):
        raise ValueError("recon_smote expects synthetic rows only")
    X = syn.features[syn.labels == 1]
    d = syn.d
    if len(X) == 0:
        empty = np.empty((0, d))
        return ReconstructionResult([], empty, [], empty, [], None)
    Z, scaling = _scale_minority(X)
    lines, cand, support, accepted, acc_support = reconstruct_points(Z, cfg)
    return ReconstructionResult(lines, cand, support, accepted, acc_support, scaling)


def precision_recall_match(predicted, truth, match_tol=None):
    """Precision, recall and matched pairs.

    With ``match_tol=None`` the inputs are id collections compared as sets
    and the pairs are ``(id, id)``. Otherwise they are point matrices matched
    one-to-one greedily in ascending distance order, a pair counting if its
    distance is at most ``match_tol``; pairs are ``(pred_index, truth_index)``.
    An empty prediction scores (0, 0).
    """
    if match_tol is None:
        pred = {int(i) for i in np.asarray(list(predicted)).ravel()}
        true = {int(i) for i in np.asarray(list(truth)).ravel()}
        hits = sorted(pred & true)
        precision = len(hits) / len(pred) if pred else 0.0
        recall = len(hits) / len(true) if true else 0.0
        return precision, recall, [(i, i) for i in hits]

    P = np.asarray(predicted, dtype=float)
    T = np.asarray(truth, dtype=float)
    if len(P) == 0 or len(T) == 0:
        return 0.0, 0.0, []
    P = P.reshape(len(P), -1)
    T = T.reshape(len(T), -1)
    if P.shape[1] != T.shape[1]:
        raise ValueError(f"dimension mismatch: {P.shape[1]} vs {T.shape[1]}")
    D = np.linalg.norm(P[:, None, :] - T[None, :, :], axis=2)
    pi, ti = np.nonzero(D <= match_tol)
    order = np.lexsort((ti, pi, D[pi, ti]))
    used_p, used_t, matched = set(), set(), []
    for a, b in zip(pi[order], ti[order]):
        if a in used_p or b in used_t:
            continue
        used_p.add(a)
        used_t.add(b)
        matched.append((int(a), int(b)))
    return len(matched) / len(P), len(matched) / len(T), matched


class DistinSMOTE(BaseEstimator):
    """Distinguish real from synthetic minority rows in SMOTE-augmented data.

    Parameters
    ----------
    k : int, default=5
        SMOTE neighbor count known to the adversary (>= 3).
    ratio : float, default=10.0
        Imbalance ratio of the real data known to the adversary.
    seed_mode : {"all-points", "hull-extrema"}, default="all-points"
    geometry : GeometryConfig, default=GeometryConfig()
    verify_survivors : bool, default=True
        Re-check surviving candidates against all points after the bounded
        neighborhood search.

    Attributes
    ----------
    real_mask_ : ndarray of bool, shape (n_minority,)
        True for minority rows labeled real.
    minority_rows_ : ndarray of int
        Positions of the minority rows in the fitted ``X``.
    report_ : DegeneracyReport
    """

    def __init__(self, k=5, ratio=10.0, seed_mode="all-points", geometry=DEFAULT_GEOMETRY,
                 verify_survivors=True):
        self.k = k
        self.ratio = ratio
        self.seed_mode = seed_mode
        self.geometry = geometry
        self.verify_survivors = verify_survivors

    def _config(self):
        return AttackConfig(self.k, self.ratio, self.seed_mode, self.geometry, self.verify_survivors)

    def fit(self, X, y=None):
        """Run the attack. Without ``y`` every row is treated as minority."""
        X = check_features(X)
        y = np.ones(len(X), dtype=np.int8) if y is None else y
        result = distin_smote(LabeledDataset(X, y), self._config())
        self.minority_rows_ = np.sort(np.r_[result.detected_real, result.pruned_synthetic])
        self.real_mask_ = np.isin(self.minority_rows_, result.detected_real)
        self.report_ = result.report
        self.result_ = result
        self.n_features_in_ = X.shape[1]
        return self

    def fit_predict(self, X, y=None):
        """1 for rows labeled real, 0 for synthetic. Majority rows are always real."""
        self.fit(X, y)
        out = np.ones(len(X), dtype=np.int8)
        out[self.result_.pruned_synthetic] = 0
        return out


class ReconSMOTE(BaseEstimator):
    """Reconstruct real minority records from a SMOTE synthetic dataset.

    Parameters
    ----------
    k : int, default=5
    ratio : float, default=10.0
    geometry : GeometryConfig, default=GeometryConfig()

    Attributes
    ----------
    reconstructed_ : ndarray of shape (n_reconstructed, n_features)
        Accepted points in the input feature space.
    support_ : list of frozenset
        Ids of the lines (``lines_``) through each reconstructed point.
    lines_ : list of Line
        Detected lines in the standardized working space.
    """

    def __init__(self, k=5, ratio=10.0, geometry=DEFAULT_GEOMETRY):
        self.k = k
        self.ratio = ratio
        self.geometry = geometry

    def fit(self, X, y=None):
        X = check_features(X, min_samples=0)
        y = np.ones(len(X), dtype=np.int8) if y is None else y
        result = recon_smote(LabeledDataset(X, y), AttackConfig(self.k, self.ratio, geometry=self.geometry))
        self.result_ = result
        self.reconstructed_ = result.points
        self.support_ = result.accepted_support
        self.lines_ = result.lines
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X=None):
        """Return the reconstructed points."""
        check_is_fitted(self)
        return self.reconstructed_
