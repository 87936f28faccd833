import csv
import json

import numpy as np
import pytest

from smoteleak.cli import main
from smoteleak.data import FixtureSpec, LabeledDataset, load_csv, make_fixture, save_csv
from smoteleak.experiment import (
    cell_seed,
    config_from_mapping,
    load_config,
    parse_seeds,
    run_experiment,
    validate_assumptions,
)


def test_parse_seeds():
    assert parse_seeds("0-3") == (0, 1, 2, 3)
    assert parse_seeds("5, 1,2-3,1") == (5, 1, 2, 3)
    assert parse_seeds("7") == (7,)


def test_config_parsing(tmp_path):
    (tmp_path / "d.csv").write_text("a,label\n1,0\n")
    path = tmp_path / "exp.conf"
    path.write_text(
        "# comment\nname = demo\nseeds = 0-2\nk = 4\nmethods = distinguish, dcr\n"
        "tolerances = col=1e-8\nbounds = false\n"
        "dataset.g = fixture n0=100 n1=10 d=3\n"
        "dataset.c = csv path=d.csv label=label minority=1\n")
    cfg = load_config(path, {"threads": 2, "out": None})
    assert cfg.name == "demo" and cfg.seeds == (0, 1, 2) and cfg.k == 4 and cfg.threads == 2
    assert cfg.methods == ("distinguish", "dcr") and not cfg.bounds
    assert cfg.geometry.eps_col == 1e-8
    assert [d.name for d in cfg.datasets] == ["g", "c"]
    assert cfg.datasets[1].options["path"] == str(tmp_path / "d.csv")


@pytest.mark.parametrize("mapping", [
    {"seeds": "0", "colour": "red", "dataset.a": "fixture n0=100 n1=10 d=2"},
    {"seeds": "0", "methods": "telepathy", "dataset.a": "fixture n0=100 n1=10 d=2"},
    {"seeds": "0"},
    {"seeds": "0", "dataset.a": "csv path=nowhere.csv label=y minority=1"},
])
def test_config_rejects_bad_input(mapping):
    with pytest.raises((ValueError, FileNotFoundError)):
        config_from_mapping(mapping)


def test_cell_seed_depends_only_on_coordinates():
    assert cell_seed(0, "a", 3) == cell_seed(0, "a", 3)
    assert len({cell_seed(0, "a", 3), cell_seed(0, "b", 3), cell_seed(1, "a", 3), cell_seed(0, "a", 4)}) == 4


def test_validate_clean_and_planted():
    real = make_fixture(FixtureSpec(n0=200, n1=20, d=3, seed=0))
    report = validate_assumptions(real)
    assert report["ok"] and report["triple_scan"] == "exhaustive"
    X = real.features.copy()
    rows = real.minority_rows()
    X[rows[2]] = 0.5 * (X[rows[0]] + X[rows[1]])
    X[rows[4]] = X[rows[3]]
    bad = validate_assumptions(LabeledDataset(X, real.labels))
    assert not bad["ok"]
    assert [int(rows[0]), int(rows[1]), int(rows[2])] in bad["collinear_triples"]
    assert bad["duplicate_minority_rows"]


def test_validate_samples_large_minority():
    real = make_fixture(FixtureSpec(n0=1200, n1=600, d=3, seed=0))
    assert validate_assumptions(real)["triple_scan"] == "sampled"


def test_integer_columns_are_reported():
    X = np.c_[np.arange(30.0), np.random.default_rng(0).standard_normal(30)]
    report = validate_assumptions(LabeledDataset(X, np.r_[np.zeros(20), np.ones(10)], columns=("i", "x")))
    assert report["integer_only_columns"] == ["i"]


def test_failed_cells_are_recorded(tmp_path):
    cfg = config_from_mapping({
        "seeds": "0-1", "dataset.ok": "fixture n0=100 n1=10 d=3",
        "dataset.tiny": "fixture n0=40 n1=4 d=3", "out": str(tmp_path)})
    outcome = run_experiment(cfg)
    assert outcome.exit_code == 2
    assert {f[0] for f in outcome.failed} == {"tiny"}
    cell = json.loads((tmp_path / "runs" / "tiny_seed0.json").read_text())
    assert not cell["ok"] and "Traceback" in cell["traceback"]
    assert {row["dataset"] for row in outcome.rows} == {"ok"}


def test_report_aggregates_runs(tmp_path):
    cfg = config_from_mapping({
        "seeds": "0-3", "methods": "distinguish,reconstruct,dcr,linkability,naive",
        "dataset.g": "fixture n0=240 n1=20 d=4", "out": str(tmp_path)})
    outcome = run_experiment(cfg)
    assert outcome.exit_code == 0
    with (tmp_path / "report.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    runs = [json.loads(p.read_text()) for p in sorted((tmp_path / "runs").glob("*.json"))]
    assert len(runs) == 4
    for row in rows:
        values = [c["metrics"][row["method"]][row["metric"]] for c in runs]
        assert min(values) - 1e-12 <= float(row["mean"]) <= max(values) + 1e-12
        assert int(row["seeds"]) == 4
        assert (row["l_id"] != "") == (row["method"] == "reconstruct")
    timing = (tmp_path / "timing.csv").read_text().splitlines()
    assert timing[0] == "dataset,seed,method,seconds" and len(timing) == 1 + 4 * 5


@pytest.fixture
def generated(tmp_path):
    out = tmp_path / "gen"
    assert main(["generate", "--n0", "240", "--n1", "20", "--d", "4", "--seed", "3", "--out", str(out)]) == 0
    return out


def test_cli_generate(generated):
    for name in ("real.csv", "synthetic.csv", "augmented.csv", "provenance.csv"):
        assert (generated / name).exists()
    aug = load_csv(generated / "augmented.csv", "label", "1")
    assert aug.n == 480 and aug.origin is not None


def test_cli_attacks(generated, tmp_path, capsys):
    out = tmp_path / "dist"
    assert main(["attack", "distinguish", "--input", str(generated / "augmented.csv"),
                 "--ratio", "12", "--out", str(out)]) == 0
    row = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert row["precision"] == row["recall"] == 1.0
    assert (out / "distinguish.json").exists() and (out / "distinguish_metrics.csv").exists()

    assert main(["attack", "reconstruct", "--input", str(generated / "synthetic.csv"), "--ratio", "12",
                 "--truth", str(generated / "real.csv"), "--out", str(tmp_path / "rec")]) == 0
    row = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert row["precision"] == 1.0 and row["recall"] > 0


def test_cli_usage_errors(generated, capsys):
    aug = str(generated / "augmented.csv")
    assert main(["attack", "distinguish", "--input", aug]) == 1
    assert "--ratio" in capsys.readouterr().err
    assert main(["attack", "reconstruct", "--input", aug, "--ratio", "12"]) == 1
    assert "synthetic rows only" in capsys.readouterr().err
    assert main(["generate", "--n0", "100"]) == 1
    assert main(["experiment"]) == 1


def test_cli_bounds(tmp_path, capsys):
    assert main(["bounds", "--n0", "2600", "--n1", "100", "--k", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n0,n1,k,alpha,lambda,p_edge,bound,kind"
    assert float(lines[1].split(",")[6]) == pytest.approx(0.79225, abs=1e-5)
    assert main(["bounds", "--preset", "alpha", "--out", str(tmp_path / "b.csv")]) == 0
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 1 + 2 * 33
    assert main(["bounds", "--n0", "10", "--n1", "10"]) == 1


def test_cli_baselines(generated, tmp_path, capsys):
    syn, real = str(generated / "synthetic.csv"), str(generated / "real.csv")
    assert main(["baseline", "dcr", "--synthetic", syn, "--real", real]) == 0
    assert json.loads(capsys.readouterr().out)["dcr"] > 0
    assert main(["baseline", "linkability", "--synthetic", syn, "--real", real, "--split", "0,1"]) == 0
    assert 0 <= json.loads(capsys.readouterr().out)["accuracy"] <= 1
    assert main(["baseline", "distinguish", "--input", str(generated / "augmented.csv")]) == 0
    assert set(json.loads(capsys.readouterr().out)) == {"method", "precision", "recall"}


def test_cli_mia_and_config_defaults(generated, tmp_path, capsys):
    conf = tmp_path / "mia.conf"
    conf.write_text("worlds = 10\ntest_worlds = 10\n")
    assert main(["mia", "--input", str(generated / "real.csv"), "--config", str(conf)]) == 0
    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert 0 <= result["auc"] <= 1 and result["mode"] == "synthetic-features"


def test_cli_validate_and_experiment(generated, tmp_path, capsys):
    assert main(["validate", "--input", str(generated / "real.csv")]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True
    real = load_csv(generated / "real.csv", "label", "1")
    X = real.features.copy()
    rows = real.minority_rows()
    X[rows[2]] = 0.5 * (X[rows[0]] + X[rows[1]])
    save_csv(LabeledDataset(X, real.labels), tmp_path / "bad.csv")
    assert main(["validate", "--input", str(tmp_path / "bad.csv")]) == 1
    capsys.readouterr()

    conf = tmp_path / "exp.conf"
    conf.write_text("seeds = 0-1\ndataset.g = fixture n0=120 n1=12 d=3\n")
    assert main(["experiment", "--config", str(conf), "--out", str(tmp_path / "exp")]) == 0
    assert (tmp_path / "exp" / "report.csv").exists()


def test_cli_reports_bad_files(capsys):
    assert main(["validate", "--input", "/nonexistent.csv"]) == 1
    assert "error:" in capsys.readouterr().err
