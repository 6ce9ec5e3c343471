"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Every tolerance is pinned here; the helpers recompute expectations
independently of the code paths they check.
"""

import math
import os
import shutil
import struct
import subprocess
import time
import wave

import numpy as np
import pytest

from fedgate import experiment, fed, nn
from fedgate.data import EmbeddingDataset, dumps_emb1, read_emb1, synth_blobs
from fedgate.errors import ParseError
from fedgate.hetero import GaussianSummary, frechet_distance_sq, gamma, summarize
from fedgate.seeding import derive_seed, make_rng
from fedgate.simclients import shuffle_assignment, simulate_clients


def report(number: int, name: str, passed: bool, elapsed: float) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number} {name}: {status} ({elapsed:.1f}s)")
    assert passed, f"criterion {number} ({name}) failed"


def spearman(xs, ys) -> float:
    def ranks(values):
        order = np.argsort(values)
        out = np.empty(len(values))
        out[order] = np.arange(len(values))
        return out

    rx, ry = ranks(np.asarray(xs)), ranks(np.asarray(ys))
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx * ry).sum() / np.sqrt((rx**2).sum() * (ry**2).sum()))


def test_criterion_1_gradient_correctness():
    start = time.perf_counter()
    reports = nn.gradient_check(seed=0, num_models=100, tolerance=1e-5, epsilon=1e-5)
    elapsed = time.perf_counter() - start
    worst = max(r["max_relative_error"] for r in reports)
    passed = all(r["passed"] for r in reports) and worst < 1e-5 and elapsed < 30.0
    report(1, "gradient correctness", passed, elapsed)


def test_criterion_2_fedavg_degeneracy():
    start = time.perf_counter()
    dataset, _ = synth_blobs(2, 2, 30, 4, separation=8.0, spread=1.0, seed=7)
    passed = True
    for unit in ("relu", "cgau"):
        template = nn.init_model(
            4, [8], 2, unit, num_clients=1, dropout_rate=0.0, seed=13
        )
        central = template.clone()
        fed.train_centralized(
            central, dataset.features, dataset.labels,
            num_steps=50, learning_rate=0.05, seed=99,
        )
        rows = [
            (l.v_filter[0].copy(), l.v_gate[0].copy())
            for l in template.hidden_layers if isinstance(l, nn.CgauLayer)
        ]
        client = fed.ClientState(
            0, dataset.features, dataset.labels,
            dataset.features[:5], dataset.labels[:5], conditioning_rows=rows,
        )
        config = fed.FederatedConfig(
            num_clients=1, rounds=50, local_steps=1,
            batch_size=len(dataset), learning_rate=0.05, seed=99,
        )
        result = fed.run_federated(template, [client], config)
        passed = passed and all(
            np.array_equal(a, b)
            for a, b in zip(result.final_model.all_arrays(), central.all_arrays())
        )
    elapsed = time.perf_counter() - start
    passed = passed and elapsed < 5.0
    report(2, "FedAvg degeneracy bit-identical", passed, elapsed)


def test_criterion_3_frechet_exactness():
    start = time.perf_counter()
    checks = []
    rng = make_rng(15)
    same = summarize(rng.normal(size=(50, 3)))
    checks.append(abs(frechet_distance_sq(same, same)) < 1e-8)
    d1 = GaussianSummary(np.zeros(2), np.eye(2), 10)
    d2 = GaussianSummary(np.array([3.0, 4.0]), np.eye(2), 10)
    checks.append(abs(frechet_distance_sq(d1, d2) - 25.0) < 1e-8)
    v1 = GaussianSummary(np.zeros(1), np.array([[1.0]]), 10)
    v2 = GaussianSummary(np.zeros(1), np.array([[4.0]]), 10)
    checks.append(abs(frechet_distance_sq(v1, v2) - 1.0) < 1e-8)
    for i in range(1000):
        n = int(rng.integers(1, 17))
        a_raw = rng.normal(size=(n, n))
        b_raw = rng.normal(size=(n, n))
        a = GaussianSummary(rng.normal(size=n), a_raw @ a_raw.T, 10)
        b = GaussianSummary(rng.normal(size=n), b_raw @ b_raw.T, 10)
        ab = frechet_distance_sq(a, b)
        ba = frechet_distance_sq(b, a)
        checks.append(ab >= 0.0 and abs(ab - ba) <= 1e-8 * max(1.0, abs(ab)))
    elapsed = time.perf_counter() - start
    passed = all(checks) and elapsed < 30.0
    report(3, "Frechet metric exactness and symmetry", passed, elapsed)


def test_criterion_4_heterogeneity_trend():
    start = time.perf_counter()
    proportions = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    num_clients = 10
    per_seed = []
    for seed in range(5):
        dataset, _ = synth_blobs(
            num_classes=2, blobs_per_class=10, samples_per_blob=500,
            dim=2, separation=40.0, spread=1.0, seed=derive_seed(seed, "data"),
        )
        sim = simulate_clients(
            dataset, None, num_clients, derive_seed(seed, "sim")
        )
        projected = sim.pca.project(dataset.features)
        row = []
        for pi, proportion in enumerate(proportions):
            shuffled = shuffle_assignment(
                sim.train, proportion, derive_seed(seed, "shuffle", pi)
            )
            groups = [
                projected[shuffled.assignment == c] for c in range(num_clients)
            ]
            row.append(gamma(groups)[0])
        per_seed.append(row)
    means = np.asarray(per_seed).mean(axis=0)
    rho = spearman(proportions, means)
    elapsed = time.perf_counter() - start
    passed = means[0] > means[-1] and rho <= -0.8 and elapsed < 120.0
    print(f"  mean gamma by proportion: {[f'{m:.1f}' for m in means]}, rho={rho:.3f}")
    report(4, "heterogeneity decreases with shuffling", passed, elapsed)


def test_criterion_5_conditioning_beats_baseline_when_non_iid(tmp_path):
    start = time.perf_counter()
    config = experiment.load_experiment_config({
        "dataset": {
            "kind": "blobs", "num_classes": 2, "blobs_per_class": 10,
            "samples_per_blob": 250, "dim": 2, "separation": 10.0,
            "spread": 0.5, "layout": "ring", "test_fraction": 0.2,
        },
        "model": {"hidden_dims": [16, 16], "dropout": 0.5},
        "federated": {
            "num_clients": 10, "rounds": 200, "local_steps": 5,
            "batch_size": 32, "learning_rate": 0.1,
        },
        "metric": "accuracy",
        "proportions": [0.0, 1.0],
        "repetitions": 5,
        "seed": 2026,
    })
    rows = experiment.run_sweep(config, str(tmp_path / "sweep"))

    def mean_metric(proportion, kind):
        vals = [
            r["test_metric"] for r in rows
            if r["proportion"] == proportion and r["model_kind"] == kind
        ]
        return float(np.mean(vals))

    gap_heterogeneous = mean_metric(0.0, "cgau") - mean_metric(0.0, "relu")
    gap_shuffled = mean_metric(1.0, "cgau") - mean_metric(1.0, "relu")
    elapsed = time.perf_counter() - start
    print(
        f"  acc@0.0 cgau={mean_metric(0.0, 'cgau'):.3f} relu={mean_metric(0.0, 'relu'):.3f}; "
        f"acc@1.0 cgau={mean_metric(1.0, 'cgau'):.3f} relu={mean_metric(1.0, 'relu'):.3f}"
    )
    passed = gap_heterogeneous > 0.0 and gap_heterogeneous > gap_shuffled
    passed = passed and elapsed < 900.0
    report(5, "conditioning gap largest for non-IID clients", passed, elapsed)


def test_criterion_6_xor_client_adaptation(tmp_path):
    start = time.perf_counter()
    out = str(tmp_path / "xor")
    result = experiment.run_xor(
        out, samples_per_cluster=200, spread=0.25, rounds=2000, seed=0
    )
    accs = result["models"]["cgau"]["per_client_train_accuracy"]
    both_solved = all(a >= 0.99 for a in accs.values())

    grid = {}
    with open(os.path.join(out, "xor_grid.csv")) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            model, client, variant, x1, x2, logit = line.strip().split(",")
            if model == "cgau":
                grid.setdefault(variant, {})[(client, x1, x2)] = float(logit)
    diffs = {
        variant: max(
            abs(logit - grid["full"][key]) for key, logit in table.items()
        )
        for variant, table in grid.items() if variant != "full"
    }
    ablations_differ = all(d > 0.1 for d in diffs.values())
    elapsed = time.perf_counter() - start
    print(f"  per-client accuracy: {accs}; ablation max logit deltas: "
          f"{ {k: f'{v:.2f}' for k, v in diffs.items()} }")
    passed = both_solved and ablations_differ and elapsed < 120.0
    report(6, "XOR solved per client with active conditioning", passed, elapsed)


def test_criterion_7_sweep_determinism(tmp_path):
    start = time.perf_counter()
    raw = {
        "dataset": {
            "kind": "blobs", "num_classes": 2, "blobs_per_class": 4,
            "samples_per_blob": 25, "dim": 2, "separation": 12.0,
            "spread": 0.5, "layout": "ring", "test_fraction": 0.2,
        },
        "model": {"hidden_dims": [8], "dropout": 0.5},
        "federated": {
            "num_clients": 4, "rounds": 8, "local_steps": 3,
            "batch_size": 8, "learning_rate": 0.1,
        },
        "metric": "accuracy",
        "proportions": [0.0, 0.6],
        "repetitions": 2,
        "seed": 77,
    }
    outputs = []
    for name in ("first", "second"):
        out = str(tmp_path / name)
        experiment.run_sweep(experiment.load_experiment_config(raw), out)
        files = {}
        for entry in sorted(os.listdir(out)):
            with open(os.path.join(out, entry), "rb") as fh:
                files[entry] = fh.read()
        outputs.append(files)
    elapsed = time.perf_counter() - start
    passed = outputs[0].keys() == outputs[1].keys() and all(
        outputs[0][k] == outputs[1][k] for k in outputs[0]
    )
    report(7, "sweep outputs byte-identical across reruns", passed, elapsed)


def test_criterion_8_emb1_roundtrip_and_rejection():
    start = time.perf_counter()
    rng = make_rng(31)
    passed = True
    for _ in range(100):
        n = int(rng.integers(1, 60))
        d = int(rng.integers(1, 16))
        c = int(rng.integers(1, 8))
        features = rng.normal(size=(n, d)).astype(np.float32).astype(np.float64)
        labels = rng.integers(0, c, n)
        ds = EmbeddingDataset(features, labels, c)
        blob = dumps_emb1(ds)
        again = read_emb1(blob)
        passed = passed and np.array_equal(ds.features, again.features)
        passed = passed and np.array_equal(ds.labels, again.labels)
        passed = passed and dumps_emb1(again) == blob

    reference = dumps_emb1(EmbeddingDataset(
        np.ones((4, 3), dtype=np.float32).astype(np.float64),
        np.array([0, 1, 2, 0]), 3,
    ))
    malformed = []
    malformed.append((b"YUCK" + reference[4:], 0))          # bad magic
    malformed.append((reference[:10], None))                 # truncated header
    malformed.append((reference[: len(reference) - 3], None))  # truncated body
    malformed.append((reference + b"!", len(reference)))     # trailing bytes
    label_blob = bytearray(reference)
    label_offset = 20 + 4  # second label
    label_blob[label_offset:label_offset + 4] = (9).to_bytes(4, "little")
    malformed.append((bytes(label_blob), label_offset))
    nan_blob = bytearray(reference)
    feature_offset = 20 + 16 + 4 * 2  # sample 0, column 2
    nan_blob[feature_offset:feature_offset + 4] = np.array([np.nan], "<f4").tobytes()
    malformed.append((bytes(nan_blob), feature_offset))
    for blob, expected_offset in malformed:
        try:
            read_emb1(blob)
            passed = False
        except ParseError as err:
            if expected_offset is not None:
                passed = passed and err.offset == expected_offset
    elapsed = time.perf_counter() - start
    passed = passed and elapsed < 10.0
    report(8, "EMB1 round-trip and malformed-stream rejection", passed, elapsed)


def test_criterion_9_extractor_interop(tmp_path):
    """[SECONDARY] EMB1 files from the extractor feed federated training."""
    node = shutil.which("node")
    cli_js = os.path.join(
        os.path.dirname(__file__), "..", "extractor", "dist", "cli.js"
    )
    if node is None or not os.path.exists(cli_js):
        pytest.skip("secondary extractor not built; criteria 1-8 stand alone")
    start = time.perf_counter()
    clips = tmp_path / "clips"
    clips.mkdir()
    lines = ["file,label"]
    for i in range(12):
        rate = 22_050
        count = int(rate * (1.2 + 0.15 * (i % 3)))
        with wave.open(str(clips / f"clip{i}.wav"), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(rate)
            hz = 250.0 + 125.0 * i
            frames = [
                int(11_000 * math.sin(2.0 * math.pi * hz * t / rate))
                for t in range(count)
            ]
            fh.writeframes(struct.pack(f"<{count}h", *frames))
        lines.append(f"clip{i}.wav,{i % 2}")
    labels_csv = clips / "labels.csv"
    labels_csv.write_text("\n".join(lines) + "\n")
    out_path = tmp_path / "clips.emb1"
    subprocess.run(
        [
            node, cli_js, "extract", "--modality", "audio",
            "--input", str(clips), "--labels", str(labels_csv),
            "--out", str(out_path),
        ],
        check=True, capture_output=True,
    )

    dataset = read_emb1(str(out_path))
    passed = len(dataset) >= 10 and dataset.num_classes == 2
    template = nn.init_model(
        dataset.dim, [8], dataset.num_classes, "cgau",
        num_clients=2, dropout_rate=0.0, seed=0,
    )
    clients = fed.make_clients(
        dataset, np.arange(len(dataset)) % 2, template,
        val_fraction=0.2, seed=1, num_clients=2,
    )
    config = fed.FederatedConfig(
        num_clients=2, rounds=5, local_steps=2, batch_size=4,
        learning_rate=0.01, seed=2,
    )
    result = fed.run_federated(template, clients, config)
    passed = passed and len(result.records) == 5
    passed = passed and all(
        np.isfinite(r.val_loss) for r in result.records
    )
    elapsed = time.perf_counter() - start
    report(9, "extractor EMB1 interop trains end to end", passed, elapsed)
