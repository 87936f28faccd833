"""Lower bounds on reconstruction recall.

A segment between two real minority points is *reconstructed* once it
carries at least three synthetic points; a real point is *identifiable* once
three of its outgoing segments are reconstructed. With ``p_edge`` the
probability that one segment is reconstructed, Markov-type averaging over the
``k`` outgoing segments gives

    P(identifiable) >= max(0, (k * p_edge - 2) / (k - 2)).

The approximate bound uses a Poisson count per segment with mean
``lam = (n0 - n1) / (n1 * k)``; the exact bound uses Binomial counts and
lets mutual neighbor pairs draw from both directions.
"""

import csv
import itertools
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from ._validation import check_attack_k, check_count, check_probability

APPROXIMATE = "approximate"
EXACT = "exact"
KINDS = (APPROXIMATE, EXACT)
CSV_HEADER = ("n0", "n1", "k", "alpha", "lambda", "p_edge", "bound", "kind")


@dataclass(frozen=True)
class BoundInputs:
    n0: int
    n1: int
    k: int
    alpha: float = 0.0

    def __post_init__(self):
        check_count(self.n1, "n1", minimum=1)
        check_count(self.n0, "n0", minimum=self.n1 + 1)
        check_attack_k(self.k)
        check_probability(self.alpha, "alpha")

    @classmethod
    def from_ratio(cls, r, k, n1, alpha=0.0):
        """Inputs with ``n0 = round(r * n1)``."""
        return cls(int(round(r * n1)), n1, k, alpha)

    @property
    def lam(self):
        return (self.n0 - self.n1) / (self.n1 * self.k)


@dataclass(frozen=True)
class BoundResult:
    inputs: BoundInputs
    lam: float
    p_edge: float
    bound: float
    kind: str

    def row(self):
        i = self.inputs
        return {"n0": i.n0, "n1": i.n1, "k": i.k, "alpha": i.alpha, "lambda": self.lam,
                "p_edge": self.p_edge, "bound": self.bound, "kind": self.kind}


def identifiability_bound(k, p_edge):
    return max(0.0, (k * p_edge - 2.0) / (k - 2.0))


def poisson_tail_ge3(lam):
    """P[Poisson(lam) >= 3], without cancellation for small ``lam``."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if lam < 0.5:
        # e^-lam * sum_{j>=3} lam^j / j!, terms shrink by at least 1/8
        term = lam ** 3 / 6.0
        total, j = 0.0, 3
        while term > 1e-18 * max(total, 1e-300):
            total += term
            j += 1
            term *= lam / j
        return math.exp(-lam) * total
    return -math.expm1(-lam + math.log1p(lam + lam * lam / 2.0))


def _log_binom_pmfs(n, p, last):
    """log P[X = j] for j = 0..last; C(n, j) is built term by term to keep
    precision at large ``n``."""
    logp, logq = math.log(p), math.log1p(-p)
    out, log_comb = [], 0.0
    for j in range(last + 1):
        if j:
            log_comb += math.log((n - j + 1) / j)
        out.append(log_comb + j * logp + (n - j) * logq)
    return out


SMALL_N = 64


def binom_tail_ge3(n, p):
    """P[X >= 3] for X ~ Binomial(n, p), evaluated in log space."""
    n = check_count(n, "n")
    p = check_probability(p, "p")
    if n < 3 or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if n <= SMALL_N:
        # positive terms only, so the sum is as accurate as each term
        return float(min(1.0, math.fsum(math.comb(n, j) * p ** j * (1.0 - p) ** (n - j)
                                        for j in range(3, n + 1))))
    if n * p < 0.5:
        # sum the upper tail directly; terms shrink by a factor below n*p/(j+1)
        # n*p < 0.5, so 40 terms reach far below double precision
        logs = _log_binom_pmfs(n, p, min(n, 43))[3:]
        return float(min(1.0, math.exp(logsumexp(logs))))
    head = logsumexp(_log_binom_pmfs(n, p, 2))
    return float(min(1.0, max(0.0, -math.expm1(head))))


def approx_recall_bound(inputs):
    """Poisson-approximation bound (mutuality ignored)."""
    lam = inputs.lam
    p_edge = poisson_tail_ge3(lam)
    return BoundResult(inputs, lam, p_edge, identifiability_bound(inputs.k, p_edge), APPROXIMATE)


def edge_probability(inputs):
    trials = inputs.n0 - inputs.n1
    q = 1.0 / (inputs.n1 * inputs.k)
    one_way = binom_tail_ge3(trials, q)
    if inputs.alpha == 0.0:
        return one_way
    both_ways = binom_tail_ge3(trials, min(1.0, 2.0 * q))
    return (1.0 - inputs.alpha) * one_way + inputs.alpha * both_ways


def exact_recall_bound(inputs):
    """Binomial bound with mutuality ``alpha``."""
    p_edge = edge_probability(inputs)
    return BoundResult(inputs, inputs.lam, p_edge, identifiability_bound(inputs.k, p_edge), EXACT)


def recall_bound(inputs, kind=EXACT):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return exact_recall_bound(inputs) if kind == EXACT else approx_recall_bound(inputs)


def sweep(r, k, alpha, n1, kinds=KINDS):
    """Every combination of the grids; ``n0 = round(r * n1)``."""
    grids = {"r": list(r), "k": list(k), "alpha": list(alpha), "n1": list(n1)}
    for name, values in grids.items():
        if not values:
            raise ValueError(f"grid {name!r} is empty")
    rows = []
    for kind in kinds:
        for rv, kv, av, nv in itertools.product(grids["r"], grids["k"], grids["alpha"], grids["n1"]):
            rows.append(recall_bound(BoundInputs.from_ratio(rv, kv, nv, av), kind))
    return rows


def ratio_grid(r, k, alphas=(0.0, 0.1), n1=100):
    """Exact-to-approximate bound ratios per mutuality level.

    Returns dicts with ``r``, ``k`` and one ``ratio_alpha=<a>`` column per
    alpha; the ratio is NaN where the approximate bound is zero.
    """
    out = []
    for rv, kv in itertools.product(r, k):
        row = {"r": rv, "k": kv}
        for a in alphas:
            inputs = BoundInputs.from_ratio(rv, kv, n1, a)
            approx = approx_recall_bound(inputs).bound
            exact = exact_recall_bound(inputs).bound
            row[f"ratio_alpha={a}"] = exact / approx if approx > 0 else float("nan")
        out.append(row)
    return out


PRESETS = {
    "recall-vs-r": dict(r=list(range(2, 101)), k=[3, 5, 7], alpha=[0.5], n1=[100]),
    "heatmap": dict(r=list(range(2, 51, 2)), k=list(range(3, 16)), alpha=[0.0], n1=[100]),
    "alpha": dict(r=[10, 20, 30], k=[5], alpha=[i / 10 for i in range(11)], n1=[100]),
    "ratio": dict(r=list(range(2, 51)), k=[3, 5, 7, 10], alpha=[0.0, 0.1], n1=[100]),
}


def preset(name):
    try:
        return {key: list(v) for key, v in PRESETS[name].items()}
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def write_bounds_csv(results, path):
    """Write rows to ``path``, or to an already open text stream."""
    if hasattr(path, "write"):
        _write_bound_rows(results, path)
        return path
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        _write_bound_rows(results, fh)
    return path


def _write_bound_rows(results, fh):
    writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for res in results:
        writer.writerow({key: (repr(v) if isinstance(v, float) else v)
                         for key, v in res.row().items()})


def simulate_recall(graph, n_synthetic, trials=200, seed=0):
    """Monte-Carlo identifiability rate on a fixed KNN graph.

    Each synthetic point lands on one directed edge uniformly. A directed edge
    ``i -> j`` counts the points of both directions when the pair is mutual.
    Returns the per-trial fraction of nodes with at least three reconstructed
    outgoing edges.
    """
    n1, k = graph.neighbors.shape
    src = np.repeat(np.arange(n1), k)
    dst = graph.neighbors.ravel()
    edge_id = {(int(a), int(b)): e for e, (a, b) in enumerate(zip(src, dst))}
    reverse = np.array([edge_id.get((int(b), int(a)), -1) for a, b in zip(src, dst)])
    rng = np.random.default_rng(seed)
    rates = np.empty(trials)
    uniform = np.full(n1 * k, 1.0 / (n1 * k))
    for t in range(trials):
        counts = rng.multinomial(n_synthetic, uniform)
        total = counts + np.where(reverse >= 0, counts[np.maximum(reverse, 0)], 0)
        s = (total >= 3).reshape(n1, k).sum(axis=1)
        rates[t] = np.mean(s >= 3)
    return rates


def as_dict(result):
    d = result.row()
    d["inputs"] = asdict(result.inputs)
    return d
