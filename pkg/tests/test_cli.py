"""Command-line behaviour: exit codes, config echo, output files."""
from __future__ import annotations

import csv

import numpy as np
import pytest

from touristnet import cli
from touristnet.dataset import load_csv, write_csv
from touristnet.experiments import gen_gaussian_pair
from touristnet.graph import ClassNetwork


@pytest.fixture()
def blobs_csv(tmp_path, two_blob_ds):
    p = tmp_path / "blobs.csv"
    write_csv(two_blob_ds, p)
    return str(p)


@pytest.fixture()
def gauss_csv(tmp_path):
    p = tmp_path / "gauss.csv"
    write_csv(gen_gaussian_pair("separated", n=15, seed=3), p)
    return str(p)


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -------------------------------------------------------------- plumbing


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["--version"])
    assert err.value.code == 0
    assert "touristnet" in capsys.readouterr().out


def test_missing_subcommand_is_user_error(capsys):
    code, _, errtext = run(capsys)
    assert code == 1
    assert errtext.startswith("error:")


def test_unknown_flag_is_user_error(capsys, tmp_path):
    code, _, errtext = run(
        capsys, "gen-data", "--scene", "lozenge", "--frobnicate",
        "--output", str(tmp_path / "x.csv"),
    )
    assert code == 1 and "error:" in errtext


def test_every_run_echoes_its_config(capsys, tmp_path):
    out = tmp_path / "g.csv"
    code, text, _ = run(
        capsys, "gen-data", "--scene", "gaussian-slight", "--n", "12",
        "--seed", "4", "--output", str(out),
    )
    assert code == 0
    assert "config: scene = gaussian-slight" in text
    assert "config: n = 12" in text
    assert "config: seed = 4" in text
    assert f"config: output = {out}" in text


def test_internal_errors_exit_two(capsys, tmp_path, monkeypatch):
    def boom(args):
        raise RuntimeError("wiring fault")

    monkeypatch.setitem(cli._COMMANDS, "gen-data", boom)
    code, _, errtext = run(
        capsys, "gen-data", "--scene", "lozenge", "--output", str(tmp_path / "x.csv")
    )
    assert code == 2
    assert "RuntimeError" in errtext and "wiring fault" in errtext


def test_unwritable_output_is_reported(capsys, blobs_csv, tmp_path):
    code, _, errtext = run(
        capsys, "build-net", "--data", blobs_csv, "--epsilon", "1.5",
        "--output", str(tmp_path / "no_dir" / "net.txt"),
    )
    assert code == 1 and errtext.startswith("error:")


# --------------------------------------------------------------- gen-data


def test_gen_data_writes_loadable_csv(capsys, tmp_path):
    out = tmp_path / "pair.csv"
    code, text, _ = run(
        capsys, "gen-data", "--scene", "gaussian-separated", "--n", "20",
        "--output", str(out),
    )
    assert code == 0
    assert "wrote 40 instances (a=20, b=20)" in text
    ds = load_csv(out)
    assert ds.n_instances == 40 and ds.label_names == ("a", "b")
    assert not list(tmp_path.glob(".*tmp*")), "temp files must not survive"


def test_gen_data_scene_test_rows(capsys, tmp_path):
    out, tests = tmp_path / "scene.csv", tmp_path / "probes.csv"
    code, text, _ = run(
        capsys, "gen-data", "--scene", "lozenge",
        "--output", str(out), "--test-output", str(tests),
    )
    assert code == 0
    assert "wrote 2 test rows" in text
    assert load_csv(out).n_instances == 74
    rows = [r for r in csv.reader(tests.open())]
    assert len(rows) == 2 and len(rows[0]) == 2


def test_gen_data_gaussian_has_no_test_rows(capsys, tmp_path):
    code, _, errtext = run(
        capsys, "gen-data", "--scene", "gaussian-heavy",
        "--output", str(tmp_path / "a.csv"), "--test-output", str(tmp_path / "b.csv"),
    )
    assert code == 1 and "no test rows" in errtext


def test_gen_data_is_seed_deterministic(capsys, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    run(capsys, "gen-data", "--scene", "gaussian-slight", "--n", "15", "--seed", "7", "--output", str(a))
    run(capsys, "gen-data", "--scene", "gaussian-slight", "--n", "15", "--seed", "7", "--output", str(b))
    run(capsys, "gen-data", "--scene", "gaussian-slight", "--n", "15", "--seed", "8", "--output", str(c))
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


# -------------------------------------------------------------- build-net


def test_build_net_dump_round_trips(capsys, blobs_csv, tmp_path):
    out = tmp_path / "net.txt"
    code, text, _ = run(
        capsys, "build-net", "--data", blobs_csv, "--k", "1", "--epsilon", "1.5",
        "--output", str(out),
    )
    assert code == 0
    assert "network: 6 vertices" in text
    assert "component 0: class a, 3 vertices" in text
    g = ClassNetwork.parse(out.read_text())
    assert g.vertex_count == 6
    assert g.component_count == 2
    assert g.class_names == ("a", "b")


def test_build_net_missing_file(capsys, tmp_path):
    code, _, errtext = run(
        capsys, "build-net", "--data", str(tmp_path / "nope.csv"),
        "--output", str(tmp_path / "net.txt"),
    )
    assert code == 1 and errtext.startswith("error:")


# ----------------------------------------------------- walk-stats/saturation


def test_walk_stats_table(capsys, blobs_csv, tmp_path):
    out = tmp_path / "stats.csv"
    code, text, _ = run(
        capsys, "walk-stats", "--data", blobs_csv, "--epsilon", "1.5",
        "--mu-max", "3", "--output", str(out),
    )
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["component", "mu", "mean_t", "mean_c"]
    assert len(rows) == 1 + 2 * 4  # two components, mu 0..3 each
    assert {r[0] for r in rows[1:]} == {"0", "1"}
    assert "saturation" in text


def test_saturation_table(capsys, blobs_csv, tmp_path):
    out = tmp_path / "sat.csv"
    code, text, _ = run(
        capsys, "saturation", "--data", blobs_csv, "--epsilon", "1.5",
        "--output", str(out),
    )
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["component", "class", "size", "mu_sat"]
    assert len(rows) == 3
    assert rows[1][1] == "a" and rows[2][1] == "b"
    assert "class a: saturation" in text


# ---------------------------------------------------------------- classify


def test_classify_labeled_test_reports_accuracy(capsys, blobs_csv, tmp_path):
    out = tmp_path / "pred.csv"
    code, text, _ = run(
        capsys, "classify", "--train", blobs_csv, "--test", blobs_csv,
        "--epsilon", "1.5", "--lambda", "0.5", "--mu-c", "2",
        "--output", str(out),
    )
    assert code == 0
    assert "classified 6 instances with lambda=0.5" in text
    assert "accuracy: 1.0000 (6/6)" in text
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["instance", "predicted", "F_a", "F_b"]
    assert len(rows) == 7
    blended = np.array([[float(r[2]), float(r[3])] for r in rows[1:]])
    assert np.allclose(blended.sum(axis=1), 1.0, atol=1e-6)


def test_classify_features_only_test(capsys, blobs_csv, tmp_path):
    probes = tmp_path / "probes.csv"
    probes.write_text("0.2,0.1\n5.4,5.2\n")
    out = tmp_path / "pred.csv"
    code, text, _ = run(
        capsys, "classify", "--train", blobs_csv, "--test", str(probes),
        "--epsilon", "1.5", "--lambda", "0.3", "--mu-c", "2",
        "--output", str(out),
    )
    assert code == 0
    assert "accuracy" not in text
    rows = list(csv.reader(out.open()))
    assert [r[1] for r in rows[1:]] == ["a", "b"]


def test_classify_rejects_bad_lambda(capsys, blobs_csv, tmp_path):
    code, _, errtext = run(
        capsys, "classify", "--train", blobs_csv, "--test", blobs_csv,
        "--lambda", "1.5", "--output", str(tmp_path / "p.csv"),
    )
    assert code == 1 and "--lambda" in errtext


def test_classify_rejects_unknown_model(capsys, blobs_csv, tmp_path):
    code, _, errtext = run(
        capsys, "classify", "--train", blobs_csv, "--test", blobs_csv,
        "--epsilon", "1.5", "--low", "forest", "--output", str(tmp_path / "p.csv"),
    )
    assert code == 1 and "error:" in errtext


def test_classify_absorb_discard_exclusive(capsys, blobs_csv, tmp_path):
    code, _, errtext = run(
        capsys, "classify", "--train", blobs_csv, "--test", blobs_csv,
        "--absorb", "--discard", "--output", str(tmp_path / "p.csv"),
    )
    assert code == 1 and "error:" in errtext


def test_classify_rejects_wrong_width_test(capsys, blobs_csv, tmp_path):
    probes = tmp_path / "probes.csv"
    probes.write_text("0.2,0.1,9.9,7.7\n")
    code, _, errtext = run(
        capsys, "classify", "--train", blobs_csv, "--test", str(probes),
        "--epsilon", "1.5", "--output", str(tmp_path / "p.csv"),
    )
    assert code == 1 and "feature columns" in errtext


# ---------------------------------------------------------------- cv/sweep


def test_cv_reports_grid(capsys, gauss_csv, tmp_path):
    out = tmp_path / "cells.csv"
    code, text, _ = run(
        capsys, "cv", "--data", gauss_csv, "--folds", "3", "--epsilon", "0.5",
        "--lambdas", "0,0.5", "--mu-c", "2", "--low", "wknn:3",
        "--output", str(out),
    )
    assert code == 0
    assert "alpha_t" in text and "best: lambda=" in text
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["rep", "fold", "alpha_t", "alpha_c", "lambda", "accuracy", "error"]
    assert len(rows) == 1 + 3 * 2  # folds x lambdas
    assert all(r[6] == "" for r in rows[1:])


def test_cv_rejects_empty_lambdas(capsys, gauss_csv, tmp_path):
    code, _, errtext = run(
        capsys, "cv", "--data", gauss_csv, "--lambdas", ",",
        "--output", str(tmp_path / "c.csv"),
    )
    assert code == 1 and "lambdas" in errtext


def test_sweep_runs_spec_file(capsys, gauss_csv, tmp_path):
    spec = tmp_path / "run.spec"
    spec.write_text(
        f"data = {gauss_csv}\nfolds = 3\nepsilon = 0.5\nmu_c = 2\n"
        "low = wknn:3\nblends = 0.0,1.0\nalphas = 0.5:0.5\n"
    )
    out = tmp_path / "cells.csv"
    code, text, _ = run(capsys, "sweep", "--spec", str(spec), "--output", str(out))
    assert code == 0
    assert f"config: data = {gauss_csv}" in text
    assert "best: lambda=" in text
    rows = list(csv.reader(out.open()))
    assert len(rows) == 1 + 3 * 2


def test_sweep_missing_spec(capsys, tmp_path):
    code, _, errtext = run(
        capsys, "sweep", "--spec", str(tmp_path / "nope.spec"),
        "--output", str(tmp_path / "c.csv"),
    )
    assert code == 1 and "not found" in errtext


def test_sweep_bad_spec_content(capsys, tmp_path):
    spec = tmp_path / "bad.spec"
    spec.write_text("no equals sign here\n")
    code, _, errtext = run(
        capsys, "sweep", "--spec", str(spec), "--output", str(tmp_path / "c.csv")
    )
    assert code == 1 and "bad.spec" in errtext
