"""Experiment runners: shuffle-proportion sweeps, heterogeneity reports,
and the two-client XOR demonstration.

A sweep trains a conditioned (CGAU) and a baseline (ReLU) classifier for
every proportion x repetition cell, on clients simulated from the same
dataset, and emits deterministic CSV/JSON result files. All randomness is
derived from the base seed with role tags, so rerunning a config yields
byte-identical outputs.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fed, nn
from .data import EmbeddingDataset, read_csv, read_emb1, split, synth_blobs, synth_xor
from .errors import ConfigError
from .hetero import gamma
from .linalg import pca_fit
from .seeding import derive_seed
from .simclients import (
    ClientAssignment,
    SimulationResult,
    shuffle_assignment,
    simulate_clients,
)

MODEL_KINDS = ("cgau", "relu")


@dataclass
class ExperimentConfig:
    dataset: dict
    hidden_dims: list[int]
    dropout: float
    federated: dict
    num_clients: int
    metric: str
    proportions: list[float]
    repetitions: int
    seed: int
    val_fraction: float = 0.05
    pca_components: int = 2

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": {"hidden_dims": self.hidden_dims, "dropout": self.dropout},
            "federated": dict(self.federated, num_clients=self.num_clients),
            "metric": self.metric,
            "proportions": self.proportions,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "val_fraction": self.val_fraction,
            "pca_components": self.pca_components,
        }


def load_experiment_config(raw: dict) -> ExperimentConfig:
    """Validate a config document; raises ConfigError on any problem."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("dataset", "model", "federated", "proportions", "repetitions"):
        if key not in raw:
            raise ConfigError(f"config is missing required key {key!r}")
    dataset = raw["dataset"]
    if not isinstance(dataset, dict) or "kind" not in dataset:
        raise ConfigError("dataset must be an object with a 'kind'")
    if dataset["kind"] not in ("blobs", "xor", "emb1", "csv"):
        raise ConfigError(f"unknown dataset kind {dataset['kind']!r}")
    model = raw["model"]
    hidden_dims = model.get("hidden_dims", [64, 64])
    if not hidden_dims or any(int(h) < 1 for h in hidden_dims):
        raise ConfigError("model.hidden_dims must be positive integers")
    dropout = float(model.get("dropout", 0.5))
    federated = dict(raw["federated"])
    num_clients = int(federated.pop("num_clients", 10))
    metric = raw.get("metric", federated.get("val_metric", fed.ACCURACY))
    if metric not in (fed.ACCURACY, fed.AUC):
        raise ConfigError(f"unknown metric {metric!r}")
    federated.setdefault("val_metric", metric)
    proportions = [float(p) for p in raw["proportions"]]
    if any(not 0.0 <= p <= 1.0 for p in proportions):
        raise ConfigError("proportions must lie in [0, 1]")
    repetitions = int(raw["repetitions"])
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    config = ExperimentConfig(
        dataset=dataset,
        hidden_dims=[int(h) for h in hidden_dims],
        dropout=dropout,
        federated=federated,
        num_clients=num_clients,
        metric=metric,
        proportions=proportions,
        repetitions=repetitions,
        seed=int(raw.get("seed", 0)),
        val_fraction=float(raw.get("val_fraction", 0.05)),
        pca_components=int(raw.get("pca_components", 2)),
    )
    # fail fast on bad federated settings, before any data is generated
    try:
        fed.FederatedConfig(num_clients=num_clients, **federated)
    except TypeError as exc:
        raise ConfigError(f"bad federated settings: {exc}") from None
    return config


def build_dataset(
    spec: dict, base_seed: int
) -> tuple[EmbeddingDataset, EmbeddingDataset]:
    """Materialize (train, test) datasets from a dataset spec."""
    kind = spec["kind"]
    if kind == "blobs":
        dataset, _ = synth_blobs(
            num_classes=int(spec.get("num_classes", 2)),
            blobs_per_class=int(spec.get("blobs_per_class", 10)),
            samples_per_blob=int(spec.get("samples_per_blob", 100)),
            dim=int(spec.get("dim", 2)),
            separation=float(spec.get("separation", 10.0)),
            spread=float(spec.get("spread", 1.0)),
            seed=derive_seed(base_seed, "data"),
            layout=spec.get("layout", "grid"),
        )
    elif kind == "xor":
        dataset = synth_xor(
            samples_per_cluster=int(spec.get("samples_per_cluster", 200)),
            spread=float(spec.get("spread", 0.25)),
            seed=derive_seed(base_seed, "data"),
        )
    elif kind in ("emb1", "csv"):
        reader = read_emb1 if kind == "emb1" else read_csv
        if "train_path" in spec:
            train = reader(spec["train_path"])
            if "test_path" not in spec:
                raise ConfigError("dataset with train_path also needs test_path")
            return train, reader(spec["test_path"])
        if "path" not in spec:
            raise ConfigError(f"{kind} dataset needs 'path' or 'train_path'")
        dataset = reader(spec["path"])
    else:
        raise ConfigError(f"unknown dataset kind {kind!r}")
    test_fraction = float(spec.get("test_fraction", 0.2))
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test_fraction must be in (0, 1)")
    train, test = split(
        dataset, [1.0 - test_fraction, test_fraction],
        stratified=True, seed=derive_seed(base_seed, "datasplit"),
    )
    return train, test


def _gamma_for_assignment(
    projected: np.ndarray, assignment: ClientAssignment
) -> tuple[float, np.ndarray]:
    groups = [
        projected[assignment.assignment == cid]
        for cid in range(assignment.num_clients)
    ]
    return gamma(groups)


@dataclass
class SweepCell:
    proportion_index: int
    repetition: int
    model_kind: str


def _run_cell(
    config: ExperimentConfig,
    train: EmbeddingDataset,
    test: EmbeddingDataset,
    sim: SimulationResult,
    cell: SweepCell,
    out_dir: str,
) -> dict:
    proportion = config.proportions[cell.proportion_index]
    kind_index = MODEL_KINDS.index(cell.model_kind)
    shuffled = shuffle_assignment(
        sim.train, proportion,
        derive_seed(config.seed, "shuffle", cell.proportion_index, cell.repetition),
    )
    projected = sim.pca.project(train.features)
    gamma_value, _ = _gamma_for_assignment(projected, shuffled)

    template = nn.init_model(
        in_dim=train.dim,
        hidden_dims=config.hidden_dims,
        num_classes=train.num_classes,
        unit=cell.model_kind,
        num_clients=config.num_clients,
        dropout_rate=config.dropout,
        seed=derive_seed(
            config.seed, "init", cell.proportion_index, cell.repetition, kind_index
        ),
    )
    clients = fed.make_clients(
        train, shuffled.assignment, template,
        val_fraction=config.val_fraction,
        seed=derive_seed(config.seed, "clients", cell.proportion_index, cell.repetition),
        num_clients=config.num_clients,
    )
    fed_config = fed.FederatedConfig(
        num_clients=config.num_clients,
        seed=derive_seed(
            config.seed, "train", cell.proportion_index, cell.repetition, kind_index
        ),
        **config.federated,
    )
    result = fed.run_federated(template, clients, fed_config)
    test_ids = sim.test.assignment if template.is_conditioned else None
    test_metric = fed.evaluate(
        result.best_model, test.features, test.labels, test_ids, config.metric
    )
    rounds_name = (
        f"rounds_p{cell.proportion_index}_rep{cell.repetition}_{cell.model_kind}.csv"
    )
    fed.write_round_csv(result.records, os.path.join(out_dir, rounds_name))
    return {
        "proportion": proportion,
        "repetition": cell.repetition,
        "model_kind": cell.model_kind,
        "test_metric": test_metric,
        "gamma": gamma_value,
        "best_round": result.best_round,
        "best_val_loss": result.best_val_loss,
        "rounds_file": rounds_name,
    }


def run_sweep(config: ExperimentConfig, out_dir: str, threads: int = 1) -> list[dict]:
    """Run every proportion x repetition x model-kind cell and emit results.

    Writes one round-metrics CSV per cell plus summary.csv / summary.json
    (long format, deterministic order and formatting).
    """
    os.makedirs(out_dir, exist_ok=True)
    train, test = build_dataset(config.dataset, config.seed)
    sims = [
        simulate_clients(
            train, test, config.num_clients,
            derive_seed(config.seed, "sim", rep),
            num_components=config.pca_components,
        )
        for rep in range(config.repetitions)
    ]
    cells = [
        SweepCell(pi, rep, kind)
        for pi in range(len(config.proportions))
        for rep in range(config.repetitions)
        for kind in MODEL_KINDS
    ]

    def work(cell: SweepCell) -> dict:
        return _run_cell(config, train, test, sims[cell.repetition], cell, out_dir)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(cell) for cell in cells]

    order = sorted(
        range(len(rows)),
        key=lambda i: (cells[i].proportion_index, cells[i].repetition,
                       cells[i].model_kind),
    )
    rows = [rows[i] for i in order]
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("proportion,repetition,model_kind,test_metric,gamma,best_round\n")
        for row in rows:
            fh.write(
                f"{row['proportion']!r},{row['repetition']},{row['model_kind']},"
                f"{row['test_metric']!r},{row['gamma']!r},{row['best_round']}\n"
            )
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump({"config": config.to_dict(), "runs": rows}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    return rows


# ---------------------------------------------------------------------------
# heterogeneity report
# ---------------------------------------------------------------------------

def hetero_report(
    dataset: EmbeddingDataset,
    assignment: ClientAssignment,
    full_dim: bool = False,
    pca_components: int = 2,
) -> dict:
    """Per-client Fréchet distances and their mean for an assignment."""
    if assignment.num_clients < 2:
        raise ConfigError("heterogeneity report needs at least 2 clients")
    if len(assignment) != len(dataset):
        raise ConfigError("assignment length does not match dataset")
    if full_dim:
        space = "full"
        points = dataset.features
    else:
        space = f"pca{pca_components}"
        model = pca_fit(
            dataset.features, min(pca_components, dataset.dim, len(dataset))
        )
        points = model.project(dataset.features)
    mean_distance, per_client = _gamma_for_assignment(points, assignment)
    return {
        "num_clients": assignment.num_clients,
        "space": space,
        "gamma": mean_distance,
        "per_client": [float(v) for v in per_client],
    }


# ---------------------------------------------------------------------------
# XOR demonstration
# ---------------------------------------------------------------------------

def run_xor(
    out_dir: str,
    samples_per_cluster: int = 200,
    spread: float = 0.25,
    rounds: int = 2000,
    local_steps: int = 10,
    batch_size: int = 32,
    learning_rate: float = 0.1,
    seed: int = 0,
    grid_points: int = 41,
) -> dict:
    """Train an unconditioned 2-unit MLP and a 1-unit CGAU model on the
    two-client XOR task; emit per-client accuracies and boundary grids.

    The grid CSV holds one row per grid point per (model, client, variant)
    with the CGAU variants full / no_modulation (filter conditioning
    zeroed) / no_expression (gate conditioning zeroed).
    """
    os.makedirs(out_dir, exist_ok=True)
    dataset = synth_xor(samples_per_cluster, spread, derive_seed(seed, "data"))
    assignment = dataset.client_ids
    results = {}
    best_models = {}
    for kind_index, (kind, hidden) in enumerate((("cgau", [1]), ("relu", [2]))):
        template = nn.init_model(
            in_dim=2, hidden_dims=hidden, num_classes=2, unit=kind,
            num_clients=2, dropout_rate=0.0,
            seed=derive_seed(seed, "init", kind_index),
        )
        clients = fed.make_clients(
            dataset, assignment, template,
            val_fraction=0.05, seed=derive_seed(seed, "clients"), num_clients=2,
        )
        fed_config = fed.FederatedConfig(
            num_clients=2, rounds=rounds, local_steps=local_steps,
            batch_size=batch_size, learning_rate=learning_rate,
            seed=derive_seed(seed, "train", kind_index),
        )
        outcome = fed.run_federated(template, clients, fed_config)
        accuracies = {}
        for client in clients:
            ids = np.full(client.num_train, client.client_id)
            accuracies[str(client.client_id)] = fed.evaluate(
                outcome.best_model, client.train_features, client.train_labels,
                ids if kind == "cgau" else None,
            )
        best_models[kind] = outcome.best_model
        results[kind] = {
            "per_client_train_accuracy": accuracies,
            "best_round": outcome.best_round,
            "best_val_loss": outcome.best_val_loss,
        }

    axis = np.linspace(-2.0, 2.0, grid_points)
    grid = np.array([(x1, x2) for x1 in axis for x2 in axis])
    variants = []
    cgau = best_models["cgau"]
    variants.append(("cgau", "full", cgau))
    no_mod = cgau.clone()
    for layer in no_mod.hidden_layers:
        layer.v_filter[:] = 0.0
    variants.append(("cgau", "no_modulation", no_mod))
    no_expr = cgau.clone()
    for layer in no_expr.hidden_layers:
        layer.v_gate[:] = 0.0
    variants.append(("cgau", "no_expression", no_expr))
    variants.append(("relu", "full", best_models["relu"]))

    grid_path = os.path.join(out_dir, "xor_grid.csv")
    with open(grid_path, "w", encoding="utf-8") as fh:
        fh.write("model,client,variant,x1,x2,logit\n")
        for model_kind, variant, model in variants:
            for client_id in (0, 1):
                ids = np.full(len(grid), client_id)
                logits = fed.predict_logits(
                    model, grid, ids if model.is_conditioned else None
                )
                for (x1, x2), logit in zip(grid, logits[:, 0]):
                    fh.write(
                        f"{model_kind},{client_id},{variant},"
                        f"{float(x1)!r},{float(x2)!r},{float(logit)!r}\n"
                    )

    report = {
        "config": {
            "samples_per_cluster": samples_per_cluster,
            "spread": spread,
            "rounds": rounds,
            "local_steps": local_steps,
            "batch_size": batch_size,
            "learning_rate": learning_rate,
            "seed": seed,
            "grid_points": grid_points,
        },
        "models": results,
        "grid_csv": os.path.basename(grid_path),
    }
    with open(os.path.join(out_dir, "xor_report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
