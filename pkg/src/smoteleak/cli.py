"""Command-line entry point: ``smoteleak <command> ...``.

Global flags (``--seed``, ``--out``, ``--config``, ``--threads``) are accepted
by every subcommand. ``--config`` names a flat ``key = value`` file whose
keys set flag defaults (dashes or underscores); explicit flags win.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import AttackConfig, distin_smote, precision_recall_match, recon_smote
from .baselines import MIA_MODES, MiaConfig, dcr, linkability, mia_game, naive_distinguish
from .bounds import (
    KINDS,
    BoundInputs,
    preset,
    recall_bound,
    sweep,
    write_bounds_csv,
)
from .data import LAYOUTS, REAL, SYNTHETIC, FixtureSpec, load_csv, make_fixture, save_csv
from .experiment import load_config, read_kv, run_experiment, validate_assumptions
from .geometry import DEFAULT_GEOMETRY, GeometryConfig
from .learners import LearnerConfig
from .smote import SmoteConfig, augment, smote_oversample


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _global_flags():
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("--out", default=None, help="output file or directory")
    g.add_argument("--config", default=None, help="key = value file with flag defaults")
    g.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    return parent


def _dataset_flags(p, required=True):
    p.add_argument("--input", required=required, help="CSV dataset with a header row")
    p.add_argument("--label", default="label", help="label column name (default label)")
    p.add_argument("--minority", default="1", help="minority label value (default 1)")


def _attack_flags(p):
    p.add_argument("--k", type=int, default=5, help="SMOTE neighbor count (>= 3)")
    p.add_argument("--ratio", type=float, default=None,
                   help="imbalance ratio of the real data (required for attacks)")
    p.add_argument("--tolerances", default="", help="e.g. col=1e-9,int=1e-7,merge=1e-6,par=1e-12")


def build_parser():
    parent = _global_flags()
    parser = argparse.ArgumentParser(prog="smoteleak", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[parent], help="run SMOTE on a CSV or a Gaussian fixture")
    _dataset_flags(p, required=False)
    p.add_argument("--n0", type=int, help="fixture majority count")
    p.add_argument("--n1", type=int, help="fixture minority count")
    p.add_argument("--d", type=int, help="fixture dimension")
    p.add_argument("--layout", choices=LAYOUTS, default="single-gaussian")
    p.add_argument("--planted-outlier", action="store_true")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--count", type=int, default=None, help="synthetic rows (default n0 - n1)")

    attack = sub.add_parser("attack", help="geometric attacks")
    attack_sub = attack.add_subparsers(dest="attack", required=True)
    for name, text in (("distinguish", "label real vs synthetic minority rows of augmented data"),
                       ("reconstruct", "recover real minority rows from synthetic data")):
        p = attack_sub.add_parser(name, parents=[parent], help=text)
        _dataset_flags(p)
        _attack_flags(p)
        p.add_argument("--seed-mode", choices=("all-points", "hull-extrema"), default="all-points")
        if name == "reconstruct":
            p.add_argument("--truth", help="CSV of real data for scoring (optional)")
            p.add_argument("--match-tol", type=float, default=1e-6)

    p = sub.add_parser("bounds", parents=[parent], help="recall lower bounds")
    p.add_argument("--n0", type=int)
    p.add_argument("--n1", type=int)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--kind", choices=KINDS + ("both",), default="both")
    p.add_argument("--sweep", action="store_true", help="evaluate a grid instead of one point")
    p.add_argument("--preset", choices=("ratio", "recall-vs-r", "heatmap", "alpha"))
    p.add_argument("--r-grid", type=_floats, help="comma list of imbalance ratios")
    p.add_argument("--k-grid", type=_ints)
    p.add_argument("--alpha-grid", type=_floats)
    p.add_argument("--n1-grid", type=_ints)

    baseline = sub.add_parser("baseline", help="reference privacy metrics")
    baseline_sub = baseline.add_subparsers(dest="baseline", required=True)
    for name in ("dcr", "linkability"):
        p = baseline_sub.add_parser(name, parents=[parent])
        p.add_argument("--synthetic", required=True, help="CSV of synthetic rows")
        p.add_argument("--real", required=True, help="CSV of real rows")
        p.add_argument("--label", default="label")
        p.add_argument("--minority", default="1")
        if name == "linkability":
            p.add_argument("--split", help="columns of part A, e.g. 0,2 (default: 5 random splits)")
    p = baseline_sub.add_parser("distinguish", parents=[parent],
                                help="classifier baseline on augmented data with origin column")
    _dataset_flags(p)

    p = sub.add_parser("mia", parents=[parent], help="membership inference game")
    _dataset_flags(p)
    p.add_argument("--target", default="outlier", help="minority row id or 'outlier'")
    p.add_argument("--worlds", type=int, default=100, help="train worlds per side")
    p.add_argument("--test-worlds", type=int, default=50, help="test worlds per side")
    p.add_argument("--mode", choices=MIA_MODES, default="synthetic-features")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--shuffle-labels", action="store_true")

    p = sub.add_parser("experiment", parents=[parent], help="run a configured experiment grid")

    p = sub.add_parser("validate", parents=[parent], help="check the attack assumptions on a dataset")
    _dataset_flags(p)
    p.add_argument("--tolerances", default="")
    return parser


def _apply_config_defaults(parser, argv):
    """Let ``--config`` key/values act as defaults for the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or (argv and argv[0] == "experiment"):
        return
    values = {key.replace("-", "_"): value for key, value in read_kv(known.config).items()}
    actions = [parser]
    while actions:
        current = actions.pop()
        for action in current._actions:
            if isinstance(action, argparse._SubParsersAction):
                actions.extend(action.choices.values())
            elif action.dest in values:
                raw = values[action.dest]
                if action.type is not None:
                    action.default = action.type(raw)
                elif isinstance(action, argparse._StoreTrueAction):
                    action.default = raw.lower() in ("1", "true", "yes", "on")
                else:
                    action.default = raw


def _emit_json(payload, out, default_name):
    text = json.dumps(payload, indent=1, default=_jsonable)
    if out is None:
        print(text)
        return None
    path = Path(out)
    if path.suffix.lower() != ".json":
        path.mkdir(parents=True, exist_ok=True)
        path = path / default_name
    path.write_text(text, encoding="utf-8")
    return path


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def _write_metrics_row(out, name, row):
    if out is None or Path(out).suffix.lower() == ".json":
        return
    path = Path(out) / name
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _geometry(text):
    return GeometryConfig.from_string(text) if text else DEFAULT_GEOMETRY


def _require_ratio(args):
    if args.ratio is None:
        raise ValueError("--ratio (imbalance ratio of the real data) is required")
    return args.ratio


def cmd_generate(args):
    if args.input:
        real = load_csv(args.input, args.label, args.minority)
    else:
        if None in (args.n0, args.n1, args.d):
            raise ValueError("give --input, or --n0, --n1 and --d for a fixture")
        spec = FixtureSpec(args.n0, args.n1, args.d, args.layout, args.planted_outlier, args.seed)
        real = make_fixture(spec)
    syn, prov = smote_oversample(real, SmoteConfig(args.k, args.count, args.seed))
    out = Path(args.out or "generated")
    out.mkdir(parents=True, exist_ok=True)
    save_csv(real, out / "real.csv")
    save_csv(syn, out / "synthetic.csv")
    save_csv(augment(real, syn), out / "augmented.csv")
    prov.write_csv(out / "provenance.csv")
    stats = real.stats()
    print(json.dumps({"out": str(out), "n0": stats.n0, "n1": stats.n1, "r": stats.r,
                      "synthetic": syn.n}))
    return 0


def cmd_attack(args):
    ds = load_csv(args.input, args.label, args.minority)
    cfg = AttackConfig(k=args.k, ratio=_require_ratio(args), seed_mode=args.seed_mode,
                       geometry=_geometry(args.tolerances))
    if args.attack == "distinguish":
        res = distin_smote(ds, cfg)
        row = {"method": "distinguish", "n_minority": int(ds.n1),
               "detected_real": int(len(res.detected_real))}
        if ds.origin is not None:
            truth = np.flatnonzero((ds.labels == 1) & (ds.origin == REAL))
            row["precision"], row["recall"], _ = precision_recall_match(res.detected_real, truth)
        _emit_json(res.to_dict(), args.out, "distinguish.json")
        _write_metrics_row(args.out, "distinguish_metrics.csv", row)
    else:
        rows = ds.minority_rows()
        syn = ds.subset(rows)
        if syn.origin is not None and np.any(syn.origin != SYNTHETIC):
            raise ValueError("reconstruct expects synthetic rows only")
        res = recon_smote(syn.without_origin(), cfg)
        row = {"method": "reconstruct", "n_synthetic": int(syn.n),
               "reconstructed": int(len(res.accepted))}
        if args.truth:
            truth = load_csv(args.truth, args.label, args.minority).minority()
            if res.scaling is not None:
                truth = res.scaling.transform(truth)
            row["precision"], row["recall"], _ = precision_recall_match(
                res.standardized, truth, args.match_tol)
        _emit_json(res.to_dict(), args.out, "reconstruct.json")
        _write_metrics_row(args.out, "reconstruct_metrics.csv", row)
    print(json.dumps(row))
    return 0


def cmd_bounds(args):
    kinds = KINDS if args.kind == "both" else (args.kind,)
    if args.sweep or args.preset:
        grid = preset(args.preset) if args.preset else {"r": [10.0], "k": [args.k],
                                                        "alpha": [args.alpha], "n1": [args.n1 or 100]}
        for key, flag in (("r", "r_grid"), ("k", "k_grid"), ("alpha", "alpha_grid"), ("n1", "n1_grid")):
            if getattr(args, flag):
                grid[key] = getattr(args, flag)
        results = sweep(grid["r"], grid["k"], grid["alpha"], grid["n1"], kinds)
    else:
        if args.n0 is None or args.n1 is None:
            raise ValueError("--n0 and --n1 are required without --sweep")
        inputs = BoundInputs(args.n0, args.n1, args.k, args.alpha)
        results = [recall_bound(inputs, kind) for kind in kinds]
    out = Path(args.out) if args.out else None
    if out is not None and out.suffix.lower() != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "bounds.csv"
    write_bounds_csv(results, sys.stdout if out is None else out)
    return 0


def cmd_baseline(args):
    if args.baseline == "distinguish":
        ds = load_csv(args.input, args.label, args.minority)
        p, r = naive_distinguish(ds, LearnerConfig(), seed=args.seed)
        payload = {"method": "naive_distinguish", "precision": p, "recall": r}
    else:
        syn = load_csv(args.synthetic, args.label, args.minority)
        real = load_csv(args.real, args.label, args.minority)
        if args.baseline == "dcr":
            payload = {"method": "dcr", "dcr": dcr(syn, real)}
        else:
            split = None
            if args.split:
                a = _ints(args.split)
                split = (a, [j for j in range(syn.d) if j not in a])
            payload = {"method": "linkability",
                       "accuracy": linkability(syn, real, split=split, seed=args.seed)}
    _emit_json(payload, args.out, f"{payload['method']}.json")
    if args.out is not None:
        print(json.dumps(payload))
    return 0


def cmd_mia(args):
    real = load_csv(args.input, args.label, args.minority)
    target = args.target if args.target == "outlier" else int(args.target)
    cfg = MiaConfig(target=target, worlds_in=args.worlds, worlds_out=args.worlds,
                    test_worlds=args.test_worlds, mode=args.mode, smote_k=args.k,
                    shuffle_labels=args.shuffle_labels, seed=args.seed)
    res = mia_game(real, cfg)
    _emit_json(res.to_dict(), args.out, "mia.json")
    print(json.dumps({"auc": res.auc, "target": res.target, "mode": args.mode}))
    return 0


def cmd_experiment(args):
    if not args.config:
        raise ValueError("experiment needs --config")
    overrides = {"out": args.out, "threads": args.threads if args.threads != 1 else None}
    cfg = load_config(args.config, overrides)
    outcome = run_experiment(cfg)
    for dataset, seed, error in outcome.failed:
        print(f"cell {dataset} seed {seed} failed: {error}", file=sys.stderr)
    print(f"wrote {outcome.out_dir / 'report.csv'} ({len(outcome.rows)} rows)")
    return outcome.exit_code


def cmd_validate(args):
    ds = load_csv(args.input, args.label, args.minority)
    report = validate_assumptions(ds, _geometry(args.tolerances), seed=args.seed)
    _emit_json(report, args.out, "validate.json")
    return 0 if report["ok"] else 1


COMMANDS = {
    "generate": cmd_generate,
    "attack": cmd_attack,
    "bounds": cmd_bounds,
    "baseline": cmd_baseline,
    "mia": cmd_mia,
    "experiment": cmd_experiment,
    "validate": cmd_validate,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_defaults(parser, argv)
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
