"""Experiment orchestration over (dataset, seed) cells.

Config files are flat ``key = value`` text; ``#`` starts a comment. Keys:

``name``            label for the run (default ``experiment``)
``seeds``           comma list and/or ranges, e.g. ``0-24`` or ``0,3,7``
``master_seed``     integer mixed into every cell seed (default 0)
``k``               SMOTE and adversary neighbor count (default 5)
``methods``         comma list from ``distinguish, reconstruct, naive, dcr, linkability``
``bounds``          ``true`` adds A_id and L_id to reconstruct rows
``tolerances``      geometry tolerances, e.g. ``col=1e-9,int=1e-7``
``match_tol``       position-matching tolerance in standardized space (1e-6)
``threads``         worker processes (default 1)
``out``             output directory
``dataset.<name>``  ``fixture n0=.. n1=.. d=.. [layout=..] [outlier=true] [seed=..]``
                    or ``csv path=.. label=.. minority=..``

A fixture without ``seed`` is redrawn per cell, so every seed sees fresh
data; with ``seed`` it stays fixed and only SMOTE varies.
"""

import csv
import json
import math
import time
import traceback
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attacks import AttackConfig, distin_smote, precision_recall_match, recon_smote
from .baselines import dcr, linkability, naive_distinguish
from .bounds import BoundInputs, approx_recall_bound, exact_recall_bound
from .data import REAL, FixtureSpec, duplicate_groups, load_csv, make_fixture
from .geometry import DEFAULT_GEOMETRY, GeometryConfig, collinear_mask, find_collinear_triples
from .knn import build_knn_graph, mutuality_fraction
from .smote import SmoteConfig, augment, smote_oversample

METHODS = ("distinguish", "reconstruct", "naive", "dcr", "linkability")
REPORT_HEADER = ("dataset", "r", "method", "metric", "mean", "std", "seeds", "a_id", "l_id")
EXHAUSTIVE_SCAN_LIMIT = 500
SAMPLED_TRIPLES = 100_000


@dataclass(frozen=True)
class DatasetSource:
    name: str
    kind: str  # "fixture" or "csv"
    options: dict

    def __post_init__(self):
        if self.kind not in ("fixture", "csv"):
            raise ValueError(f"dataset {self.name!r}: kind must be 'fixture' or 'csv'")
        if self.kind == "csv":
            for key in ("path", "label", "minority"):
                if key not in self.options:
                    raise ValueError(f"dataset {self.name!r}: csv source needs {key}=")
        else:
            for key in ("n0", "n1", "d"):
                if key not in self.options:
                    raise ValueError(f"dataset {self.name!r}: fixture needs {key}=")

    @classmethod
    def parse(cls, name, text):
        kind, *items = text.split()
        options = {}
        for item in items:
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"dataset {name!r}: expected key=value, got {item!r}")
            options[key] = value
        return cls(name, kind, options)

    def fixture_spec(self, seed):
        o = self.options
        return FixtureSpec(
            n0=int(o["n0"]), n1=int(o["n1"]), d=int(o["d"]),
            layout=o.get("layout", "single-gaussian"),
            planted_outlier=_parse_bool(o.get("outlier", "false")),
            seed=int(o["seed"]) if "seed" in o else seed,
        )

    def load(self, seed, geometry=DEFAULT_GEOMETRY):
        if self.kind == "csv":
            return load_csv(self.options["path"], self.options["label"], self.options["minority"])
        return make_fixture(self.fixture_spec(seed), geometry)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    seeds: tuple
    name: str = "experiment"
    master_seed: int = 0
    k: int = 5
    methods: tuple = ("distinguish", "reconstruct")
    bounds: bool = True
    geometry: GeometryConfig = DEFAULT_GEOMETRY
    match_tol: float = 1e-6
    threads: int = 1
    out: str = "results"

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not self.datasets:
            raise ValueError("at least one dataset is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        names = [ds.name for ds in self.datasets]
        if len(set(names)) != len(names):
            raise ValueError("dataset names must be unique")
        for ds in self.datasets:
            if ds.kind == "csv" and not Path(ds.options["path"]).exists():
                raise FileNotFoundError(f"dataset {ds.name!r}: no such file {ds.options['path']}")


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_seeds(text):
    seeds = []
    for part in filter(None, (p.strip() for p in str(text).split(","))):
        lo, sep, hi = part.partition("-")
        if sep and lo:
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(dict.fromkeys(seeds))


def read_kv(path):
    """Flat ``key = value`` pairs; later keys override earlier ones."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        values[key.strip()] = value.strip()
    return values


def config_from_mapping(values, base_dir=None):
    values = dict(values)
    datasets = []
    for key in list(values):
        if key.startswith("dataset."):
            source = DatasetSource.parse(key[len("dataset."):], values.pop(key))
            if source.kind == "csv" and base_dir is not None:
                path = Path(source.options["path"])
                if not path.is_absolute():
                    source.options["path"] = str(Path(base_dir) / path)
            datasets.append(source)
    kwargs = {"datasets": tuple(datasets), "seeds": parse_seeds(values.pop("seeds", "0"))}
    for key, cast in (("name", str), ("master_seed", int), ("k", int), ("threads", int),
                      ("out", str), ("match_tol", float)):
        if key in values:
            kwargs[key] = cast(values.pop(key))
    if "methods" in values:
        kwargs["methods"] = tuple(m.strip() for m in values.pop("methods").split(",") if m.strip())
    if "bounds" in values:
        kwargs["bounds"] = _parse_bool(values.pop("bounds"))
    if "tolerances" in values:
        kwargs["geometry"] = GeometryConfig.from_string(values.pop("tolerances"))
    if values:
        raise ValueError(f"unknown config keys: {sorted(values)}")
    return ExperimentConfig(**kwargs)


def load_config(path, overrides=None):
    values = read_kv(path)
    values.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    return config_from_mapping(values, base_dir=Path(path).parent)


def cell_seed(master, dataset_name, seed):
    """Seed for one cell; depends only on its own coordinates."""
    key = zlib.crc32(dataset_name.encode("utf-8"))
    return int(np.random.SeedSequence([master, key, seed]).generate_state(1)[0])


def validate_assumptions(ds, cfg=DEFAULT_GEOMETRY, seed=0):
    """Report on real-valued features, duplicates and collinear minority triples."""
    X1 = ds.minority()
    integer_only = [c for c, col in zip(ds.columns, ds.features.T) if np.all(col == np.round(col))]
    report = {
        "integer_only_columns": list(integer_only),
        "duplicate_minority_rows": duplicate_groups(X1),
        "n1": int(len(X1)),
    }
    rows = ds.minority_rows()
    if len(X1) <= EXHAUSTIVE_SCAN_LIMIT:
        triples = find_collinear_triples(X1, cfg)
        report["triple_scan"] = "exhaustive"
    else:
        rng = np.random.default_rng(seed)
        picks = np.array([rng.choice(len(X1), 3, replace=False) for _ in range(SAMPLED_TRIPLES)])
        ok, _ = collinear_mask(X1[picks[:, 0]], X1[picks[:, 1]], X1[picks[:, 2]], cfg)
        triples = [tuple(sorted(t)) for t in picks[ok].tolist()]
        triples = list(dict.fromkeys(triples))
        report["triple_scan"] = "sampled"
    report["collinear_triples"] = [[int(rows[i]) for i in t] for t in triples]
    report["ok"] = not report["duplicate_minority_rows"] and not report["collinear_triples"]
    return report


def _timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


def run_cell(cfg, source, seed):
    """All enabled methods for one (dataset, seed) cell; returns a JSON-ready dict."""
    cseed = cell_seed(cfg.master_seed, source.name, seed)
    out = {"dataset": source.name, "seed": seed, "cell_seed": cseed, "metrics": {}, "seconds": {}}
    try:
        real = source.load(cseed, cfg.geometry)
        stats = real.stats()
        out["r"] = stats.r
        out["assumptions"] = validate_assumptions(real, cfg.geometry, seed=cseed)
        syn, prov = smote_oversample(real, SmoteConfig(cfg.k, seed=cseed))
        aug = augment(real, syn)
        attack = AttackConfig(k=cfg.k, ratio=stats.r, geometry=cfg.geometry)
        metrics, seconds = out["metrics"], out["seconds"]

        if "distinguish" in cfg.methods:
            res, seconds["distinguish"] = _timed(lambda: distin_smote(aug, attack))
            truth = np.flatnonzero((aug.labels == 1) & (aug.origin == REAL))
            p, r, _ = precision_recall_match(res.detected_real, truth)
            metrics["distinguish"] = {"precision": p, "recall": r}
            out["degeneracy"] = res.report.to_dict()

        if "reconstruct" in cfg.methods:
            res, seconds["reconstruct"] = _timed(lambda: recon_smote(syn, attack))
            truth = real.minority()
            if res.scaling is not None:
                truth = res.scaling.transform(truth)
            p, r, _ = precision_recall_match(res.standardized, truth, cfg.match_tol)
            metrics["reconstruct"] = {"precision": p, "recall": r}
            out["alpha"] = mutuality_fraction(build_knn_graph(real.minority(), cfg.k))

        if "naive" in cfg.methods:
            (p, r), seconds["naive"] = _timed(lambda: naive_distinguish(aug, seed=cseed))
            metrics["naive"] = {"precision": p, "recall": r}

        if "dcr" in cfg.methods:
            value, seconds["dcr"] = _timed(lambda: dcr(syn, real))
            metrics["dcr"] = {"dcr": value}

        if "linkability" in cfg.methods:
            value, seconds["linkability"] = _timed(
                lambda: linkability(syn, real.subset(real.minority_rows()), seed=cseed))
            metrics["linkability"] = {"accuracy": value}
        out["n0"], out["n1"] = stats.n0, stats.n1
        out["ok"] = True
    except Exception as exc:  # recorded per cell; the run continues
        out["ok"] = False
        out["error"] = f"{type(exc).__name__}: {exc}"
        out["traceback"] = traceback.format_exc()
    return out


def _std(values):
    if len(values) < 2:
        return 0.0
    mean = math.fsum(values) / len(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1))


def aggregate(cfg, cells):
    """Report rows in config order; independent of the order cells finished."""
    by_key = {(c["dataset"], c["seed"]): c for c in cells}
    rows = []
    for source in cfg.datasets:
        ok = [by_key[(source.name, s)] for s in cfg.seeds
              if (source.name, s) in by_key and by_key[(source.name, s)]["ok"]]
        if not ok:
            continue
        r = math.fsum(c["r"] for c in ok) / len(ok)
        methods = [m for m in METHODS if m in ok[0]["metrics"]]
        for method in methods:
            for metric in ok[0]["metrics"][method]:
                values = [c["metrics"][method][metric] for c in ok]
                a_id = l_id = ""
                if method == "reconstruct" and cfg.bounds:
                    n0 = round(math.fsum(c["n0"] for c in ok) / len(ok))
                    n1 = round(math.fsum(c["n1"] for c in ok) / len(ok))
                    alpha = math.fsum(c["alpha"] for c in ok) / len(ok)
                    inputs = BoundInputs(n0, n1, cfg.k, alpha)
                    a_id = approx_recall_bound(inputs).bound
                    l_id = exact_recall_bound(inputs).bound
                rows.append({
                    "dataset": source.name, "r": r, "method": method, "metric": metric,
                    "mean": math.fsum(values) / len(values), "std": _std(values),
                    "seeds": len(values), "a_id": a_id, "l_id": l_id,
                })
    return rows


def _fmt(value):
    return repr(float(value)) if isinstance(value, (float, np.floating)) else value


def write_report(rows, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return path


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


@dataclass
class ExperimentOutcome:
    rows: list
    cells: list
    out_dir: Path
    failed: list = field(default_factory=list)

    @property
    def exit_code(self):
        return 2 if self.failed else 0


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(cfg, out_dir=None):
    """Run every cell, write ``report.csv``, ``timing.csv`` and ``runs/*.json``.

    Wall-clock times go to ``timing.csv`` and the run files only, so
    ``report.csv`` is byte-identical across reruns of the same config.
    """
    out_dir = Path(out_dir or cfg.out)
    runs = out_dir / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, source, seed) for source in cfg.datasets for seed in cfg.seeds]
    if cfg.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            cells = list(pool.map(_run_cell_args, tasks))
    else:
        cells = [run_cell(*task) for task in tasks]

    for cell in cells:
        path = runs / f"{cell['dataset']}_seed{cell['seed']}.json"
        path.write_text(json.dumps(cell, indent=1, default=_json_default), encoding="utf-8")
    rows = aggregate(cfg, cells)
    write_report(rows, out_dir / "report.csv")
    with (out_dir / "timing.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "seed", "method", "seconds"])
        for cell in cells:
            for method, secs in cell["seconds"].items():
                writer.writerow([cell["dataset"], cell["seed"], method, f"{secs:.6f}"])
    failed = [(c["dataset"], c["seed"], c["error"]) for c in cells if not c["ok"]]
    return ExperimentOutcome(rows, cells, out_dir, failed)
