import csv
import json
import os

import numpy as np
import pytest

from fedgate import cli, nn
from fedgate.data import EmbeddingDataset, read_emb1, write_emb1
from fedgate.seeding import make_rng


@pytest.fixture
def tiny_emb1(tmp_path):
    rng = make_rng(0)
    features = np.concatenate([
        rng.normal(loc=(-8.0, 0.0), size=(30, 2)),
        rng.normal(loc=(8.0, 0.0), size=(30, 2)),
        rng.normal(loc=(0.0, -8.0), size=(30, 2)),
        rng.normal(loc=(0.0, 8.0), size=(30, 2)),
    ]).astype(np.float32).astype(np.float64)
    labels = np.array([0] * 60 + [1] * 60)
    path = str(tmp_path / "tiny.emb1")
    write_emb1(EmbeddingDataset(features, labels, 2), path)
    return path


def sweep_config(tmp_path, **overrides):
    config = {
        "dataset": {
            "kind": "blobs", "num_classes": 2, "blobs_per_class": 3,
            "samples_per_blob": 20, "dim": 2, "separation": 12.0,
            "spread": 0.5, "layout": "ring", "test_fraction": 0.25,
        },
        "model": {"hidden_dims": [6], "dropout": 0.0},
        "federated": {
            "num_clients": 3, "rounds": 4, "local_steps": 2,
            "batch_size": 8, "learning_rate": 0.1,
        },
        "metric": "accuracy",
        "proportions": [0.0],
        "repetitions": 1,
        "seed": 11,
    }
    config.update(overrides)
    path = str(tmp_path / "config.json")
    with open(path, "w") as fh:
        json.dump(config, fh)
    return path


class TestSweepCommand:
    def test_minimal_sweep_row_count(self, tmp_path):
        cfg = sweep_config(tmp_path)
        out = str(tmp_path / "out")
        assert cli.main(["sweep", "--config", cfg, "--out", out]) == 0
        with open(os.path.join(out, "summary.csv")) as fh:
            rows = list(csv.DictReader(fh))
        # one proportion x one repetition x two model kinds
        assert len(rows) == 2
        assert {r["model_kind"] for r in rows} == {"cgau", "relu"}
        summary = json.load(open(os.path.join(out, "summary.json")))
        assert len(summary["runs"]) == 2

    def test_threads_match_serial_output(self, tmp_path):
        cfg = sweep_config(tmp_path, proportions=[0.0, 1.0])
        out_a = str(tmp_path / "serial")
        out_b = str(tmp_path / "threaded")
        assert cli.main(["sweep", "--config", cfg, "--out", out_a]) == 0
        assert cli.main([
            "sweep", "--config", cfg, "--out", out_b, "--threads", "4",
        ]) == 0
        for name in sorted(os.listdir(out_a)):
            with open(os.path.join(out_a, name), "rb") as fa, \
                 open(os.path.join(out_b, name), "rb") as fb:
                assert fa.read() == fb.read(), name

    def test_invalid_config_exits_one(self, tmp_path):
        cfg = sweep_config(tmp_path, proportions=[2.0])
        assert cli.main([
            "sweep", "--config", cfg, "--out", str(tmp_path / "x"),
        ]) == 1

    def test_missing_key_exits_one(self, tmp_path):
        path = str(tmp_path / "bad.json")
        with open(path, "w") as fh:
            json.dump({"dataset": {"kind": "blobs"}}, fh)
        assert cli.main(["sweep", "--config", path, "--out", str(tmp_path / "y")]) == 1

    def test_unknown_argument_exits_one(self):
        assert cli.main(["sweep", "--nope"]) == 1


class TestHeteroCommand:
    def test_report_shape(self, tiny_emb1, capsys):
        assert cli.main([
            "hetero", "--data", tiny_emb1, "--k", "2", "--seed", "3",
        ]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["num_clients"] == 2
        assert report["space"] == "pca2"
        assert len(report["per_client"]) == 2
        assert report["gamma"] >= 0.0

    def test_full_dim_flag(self, tiny_emb1, capsys):
        assert cli.main([
            "hetero", "--data", tiny_emb1, "--k", "2", "--full-dim",
        ]) == 0
        assert json.loads(capsys.readouterr().out)["space"] == "full"

    def test_requires_k_or_assignment(self, tiny_emb1):
        assert cli.main(["hetero", "--data", tiny_emb1]) == 1

    def test_assignment_reuse(self, tiny_emb1, tmp_path, capsys):
        out = str(tmp_path / "sim")
        assert cli.main([
            "simulate-clients", "--train", tiny_emb1, "--k", "2",
            "--seed", "3", "--out", out,
        ]) == 0
        capsys.readouterr()
        assert cli.main([
            "hetero", "--data", tiny_emb1,
            "--assignment", os.path.join(out, "train_assignment.csv"),
        ]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["num_clients"] == 2


class TestSimulateClientsCommand:
    def test_writes_assignments(self, tiny_emb1, tmp_path):
        out = str(tmp_path / "assign")
        assert cli.main([
            "simulate-clients", "--train", tiny_emb1, "--test", tiny_emb1,
            "--k", "2", "--seed", "1", "--out", out,
        ]) == 0
        train_rows = list(csv.DictReader(open(os.path.join(out, "train_assignment.csv"))))
        test_rows = list(csv.DictReader(open(os.path.join(out, "test_assignment.csv"))))
        assert len(train_rows) == 120
        assert len(test_rows) == 120
        # identical data: test assignment mirrors train assignment
        assert [r["client_id"] for r in train_rows] == [
            r["client_id"] for r in test_rows
        ]


class TestXorCommand:
    def test_report_and_grid_shapes(self, tmp_path, capsys):
        out = str(tmp_path / "xor")
        assert cli.main([
            "xor", "--out", out, "--samples-per-cluster", "20",
            "--rounds", "15", "--seed", "2",
        ]) == 0
        report = json.load(open(os.path.join(out, "xor_report.json")))
        assert set(report["models"]) == {"cgau", "relu"}
        for info in report["models"].values():
            assert set(info["per_client_train_accuracy"]) == {"0", "1"}
        rows = list(csv.DictReader(open(os.path.join(out, "xor_grid.csv"))))
        per_combo = {}
        for r in rows:
            per_combo.setdefault((r["model"], r["client"], r["variant"]), 0)
            per_combo[(r["model"], r["client"], r["variant"])] += 1
        # one row per grid point per (client, variant) combination
        assert all(v == 41 * 41 for v in per_combo.values())
        cgau_variants = {k[2] for k in per_combo if k[0] == "cgau"}
        assert cgau_variants == {"full", "no_modulation", "no_expression"}
        assert len(per_combo) == 8  # cgau: 3 variants x 2 clients; relu: 1 x 2


class TestGradcheckCommand:
    def test_passes_by_default(self, capsys):
        assert cli.main(["gradcheck", "--models", "10"]) == 0
        out = capsys.readouterr().out
        assert "10/10 passed" in out

    def test_detects_corrupted_gradients(self, monkeypatch, capsys):
        real = nn.cgau_backward

        def corrupted(layer, cache, grad_out, h):
            grads, grad_x = real(layer, cache, grad_out, h)
            grads.w_gate *= 1.01
            return grads, grad_x

        monkeypatch.setattr(nn, "cgau_backward", corrupted)
        assert cli.main(["gradcheck", "--models", "10"]) == 1
        assert "FAIL" in capsys.readouterr().out


class TestConvertCommand:
    def test_emb1_csv_roundtrip(self, tiny_emb1, tmp_path):
        csv_path = str(tmp_path / "data.csv")
        back_path = str(tmp_path / "back.emb1")
        assert cli.main(["convert", tiny_emb1, csv_path]) == 0
        assert cli.main(["convert", csv_path, back_path]) == 0
        original = read_emb1(tiny_emb1)
        again = read_emb1(back_path)
        np.testing.assert_array_equal(original.features, again.features)
        np.testing.assert_array_equal(original.labels, again.labels)

    def test_unknown_extensions_rejected(self, tmp_path):
        assert cli.main(["convert", "a.txt", "b.bin"]) == 1

    def test_missing_file_is_runtime_failure(self, tmp_path):
        missing = str(tmp_path / "missing.emb1")
        assert cli.main(["convert", missing, str(tmp_path / "out.csv")]) == 2


class TestHelp:
    def test_help_exits_zero(self):
        assert cli.main(["--help"]) == 0
        assert cli.main(["sweep", "--help"]) == 0
