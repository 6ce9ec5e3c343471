"""FedAvg orchestration: client-local training, weighted averaging of the
shared parameter blocks, local retention of conditioning rows, validation
monitoring, and best-model selection.

Per round, selected clients copy the shared globals, run up to E local SGD
steps (capped at one pass over their data), and return their shared blocks;
the server replaces the globals with a convex combination accumulated in
ascending client-id order. Conditioning rows never enter the average: each
client keeps its own. The snapshot with the lowest pooled validation
cross-entropy wins.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .data import EmbeddingDataset
from .errors import ConfigError, DimensionError, UndefinedMetricError
from .nn import (
    BINARY,
    CgauLayer,
    ClassifierModel,
    ClientOneHot,
    MomentumState,
    loss_and_gradients,
    loss_from_logits,
    model_forward,
    sgd_step,
)
from .seeding import spawn_rng

UNIFORM = "uniform"
SAMPLE_WEIGHTED = "sample-weighted"
ACCURACY = "accuracy"
AUC = "auc"


@dataclass
class FederatedConfig:
    num_clients: int
    rounds: int
    local_steps: int = 10
    batch_size: int = 32
    clients_per_round: int | None = None
    learning_rate: float = 0.01
    seed: int = 0
    averaging: str = SAMPLE_WEIGHTED
    momentum: float = 0.0
    momentum_reset_each_round: bool = True
    val_metric: str = ACCURACY

    def __post_init__(self):
        if self.num_clients < 1:
            raise ConfigError("num_clients must be >= 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.local_steps < 1:
            raise ConfigError("local_steps must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.clients_per_round is None:
            self.clients_per_round = self.num_clients
        if not 1 <= self.clients_per_round <= self.num_clients:
            raise ConfigError(
                f"clients_per_round={self.clients_per_round} outside "
                f"[1, {self.num_clients}]"
            )
        if self.averaging not in (UNIFORM, SAMPLE_WEIGHTED):
            raise ConfigError(f"unknown averaging mode {self.averaging!r}")
        if self.val_metric not in (ACCURACY, AUC):
            raise ConfigError(f"unknown validation metric {self.val_metric!r}")


@dataclass
class ClientState:
    """A client's local data plus its private conditioning rows."""

    client_id: int
    train_features: np.ndarray
    train_labels: np.ndarray
    val_features: np.ndarray
    val_labels: np.ndarray
    conditioning_rows: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    momentum_state: MomentumState | None = None

    @property
    def num_train(self) -> int:
        return self.train_features.shape[0]


@dataclass
class RoundRecord:
    round: int
    client_train_loss: dict[int, float]
    val_loss: float
    val_metric: float

    @property
    def mean_client_train_loss(self) -> float:
        losses = list(self.client_train_loss.values())
        return float(np.mean(losses)) if losses else math.nan


@dataclass
class FederatedResult:
    best_model: ClassifierModel
    best_round: int
    best_val_loss: float
    records: list[RoundRecord]
    final_model: ClassifierModel


def make_clients(
    dataset: EmbeddingDataset,
    assignment: np.ndarray,
    template: ClassifierModel,
    val_fraction: float = 0.05,
    seed: int = 0,
    num_clients: int | None = None,
) -> list[ClientState]:
    """Partition a dataset by client id and carve out per-client validation.

    The validation slice is class-stratified: floor(val_fraction * n_c) of
    each class, always leaving at least one training sample per class.
    Conditioning rows start as copies of the template's rows.
    """
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape != (len(dataset),):
        raise ConfigError("assignment length must match dataset size")
    if not 0.0 <= val_fraction < 1.0:
        raise ConfigError("val_fraction must be in [0, 1)")
    if num_clients is None:
        num_clients = int(assignment.max()) + 1 if assignment.size else 0
    clients = []
    for cid in range(num_clients):
        members = np.flatnonzero(assignment == cid)
        if members.size == 0:
            raise ConfigError(f"client {cid} has no samples")
        rng = spawn_rng(seed, "valsplit", cid)
        val_parts = []
        train_parts = []
        for c in range(dataset.num_classes):
            rows = members[dataset.labels[members] == c]
            if rows.size == 0:
                continue
            take = min(int(np.floor(val_fraction * rows.size)), rows.size - 1)
            order = rows[rng.permutation(rows.size)]
            val_parts.append(order[:take])
            train_parts.append(order[take:])
        train_idx = np.sort(np.concatenate(train_parts))
        val_idx = (
            np.sort(np.concatenate(val_parts)) if val_parts else np.empty(0, np.int64)
        )
        rows = [
            (layer.v_filter[cid].copy(), layer.v_gate[cid].copy())
            for layer in template.hidden_layers
            if isinstance(layer, CgauLayer)
        ]
        clients.append(ClientState(
            client_id=cid,
            train_features=dataset.features[train_idx],
            train_labels=dataset.labels[train_idx],
            val_features=dataset.features[val_idx],
            val_labels=dataset.labels[val_idx],
            conditioning_rows=rows,
        ))
    return clients


def average_arrays(
    array_lists: list[list[np.ndarray]], weights: list[float]
) -> list[np.ndarray]:
    """Convex combination of parallel array lists.

    Accumulated as base + sum_i w_i (p_i - base) so averaging identical
    inputs reproduces them exactly; contributions are added in list order.
    """
    if len(array_lists) != len(weights):
        raise ConfigError("one weight per parameter set required")
    if not array_lists:
        raise ConfigError("nothing to average")
    if any(w < 0 for w in weights):
        raise ConfigError("weights must be nonnegative")
    total = float(sum(weights))
    if total <= 0:
        raise ConfigError("weights must sum to a positive value")
    base = array_lists[0]
    for arrays in array_lists[1:]:
        if len(arrays) != len(base):
            raise DimensionError("parameter sets have different block counts")
        for a, b in zip(arrays, base):
            if a.shape != b.shape:
                raise DimensionError(
                    f"parameter block shape {a.shape} does not match {b.shape}"
                )
    out = [b.copy() for b in base]
    for arrays, w in zip(array_lists[1:], weights[1:]):
        scale = w / total
        for acc, b, a in zip(out, base, arrays):
            acc += scale * (a - b)
    return out


def average_shared(
    models: list[ClassifierModel], weights: list[float]
) -> list[np.ndarray]:
    """Average only the shared (non-conditioning) blocks of the models."""
    return average_arrays([m.shared_arrays() for m in models], weights)


def apply_shared(model: ClassifierModel, arrays: list[np.ndarray]) -> None:
    targets = model.shared_arrays()
    if len(targets) != len(arrays):
        raise DimensionError("shared block count mismatch")
    for dst, src in zip(targets, arrays):
        if dst.shape != src.shape:
            raise DimensionError("shared block shape mismatch")
        dst[:] = src


def _install_rows(model: ClassifierModel, client: ClientState) -> None:
    gated = [l for l in model.hidden_layers if isinstance(l, CgauLayer)]
    for layer, (vf_row, vg_row) in zip(gated, client.conditioning_rows):
        layer.v_filter[client.client_id] = vf_row
        layer.v_gate[client.client_id] = vg_row


def _extract_rows(model: ClassifierModel, client: ClientState) -> None:
    gated = [l for l in model.hidden_layers if isinstance(l, CgauLayer)]
    client.conditioning_rows = [
        (layer.v_filter[client.client_id].copy(),
         layer.v_gate[client.client_id].copy())
        for layer in gated
    ]


def _assemble(global_model: ClassifierModel, clients: list[ClientState]) -> ClassifierModel:
    """Snapshot: shared globals plus every client's current conditioning rows."""
    model = global_model.clone()
    for client in clients:
        _install_rows(model, client)
    return model


def _client_update(
    global_model: ClassifierModel,
    client: ClientState,
    config: FederatedConfig,
    round_index: int,
) -> tuple[list[np.ndarray], float]:
    """One client's local training pass; returns (shared blocks, mean loss)."""
    working = global_model.clone()
    _install_rows(working, client)
    h = (
        ClientOneHot(client.client_id, config.num_clients)
        if working.is_conditioned else None
    )
    if config.momentum != 0.0:
        if client.momentum_state is None:
            client.momentum_state = MomentumState.zeros_like(working)
        elif config.momentum_reset_each_round:
            client.momentum_state.reset()
    rng = spawn_rng(config.seed, "local", round_index, client.client_id)
    n = client.num_train
    order = rng.permutation(n)
    num_batches = int(np.ceil(n / config.batch_size))
    steps = min(config.local_steps, num_batches)
    losses = []
    for s in range(steps):
        rows = order[s * config.batch_size:(s + 1) * config.batch_size]
        loss, grads = loss_and_gradients(
            working, client.train_features[rows], client.train_labels[rows],
            h, training=True, rng=rng,
        )
        sgd_step(
            working, grads, config.learning_rate,
            momentum=config.momentum, momentum_state=client.momentum_state,
        )
        losses.append(loss)
    _extract_rows(working, client)
    return [a.copy() for a in working.shared_arrays()], float(np.mean(losses))


def _pooled_validation(
    model: ClassifierModel, clients: list[ClientState], metric: str
) -> tuple[float, float]:
    """Mean cross-entropy and metric over the union of validation slices."""
    total_loss = 0.0
    total = 0
    logits_parts = []
    label_parts = []
    for client in clients:
        if client.val_features.shape[0] == 0:
            continue
        h = (
            ClientOneHot(client.client_id, model.num_clients)
            if model.is_conditioned else None
        )
        logits, _ = model_forward(model, client.val_features, h, training=False)
        total_loss += loss_from_logits(
            logits, client.val_labels, model.task
        ) * client.val_features.shape[0]
        total += client.val_features.shape[0]
        logits_parts.append(logits)
        label_parts.append(client.val_labels)
    if total == 0:
        return math.nan, math.nan
    logits = np.concatenate(logits_parts, axis=0)
    labels = np.concatenate(label_parts, axis=0)
    try:
        score = metric_from_logits(logits, labels, model.task, metric)
    except UndefinedMetricError:
        score = math.nan
    return total_loss / total, score


def run_federated(
    template: ClassifierModel,
    clients: list[ClientState],
    config: FederatedConfig,
) -> FederatedResult:
    """Run the full federated round loop and return the best snapshot."""
    if len(clients) != config.num_clients:
        raise ConfigError(
            f"{len(clients)} client states for num_clients={config.num_clients}"
        )
    if template.is_conditioned and template.num_clients != config.num_clients:
        raise ConfigError(
            f"model conditions on {template.num_clients} clients, "
            f"config has {config.num_clients}"
        )
    for client in clients:
        if client.num_train == 0:
            raise ConfigError(f"client {client.client_id} has an empty dataset")
        if client.train_features.shape[1] != template.in_dim:
            raise ConfigError(
                f"client {client.client_id} feature width "
                f"{client.train_features.shape[1]} != model input {template.in_dim}"
            )

    global_model = template.clone()
    records: list[RoundRecord] = []
    best_model = None
    best_round = -1
    best_val_loss = math.inf

    for round_index in range(config.rounds):
        rng = spawn_rng(config.seed, "select", round_index)
        chosen = np.sort(
            rng.permutation(config.num_clients)[:config.clients_per_round]
        )
        shared_sets = []
        weights = []
        train_losses: dict[int, float] = {}
        for cid in chosen:
            client = clients[cid]
            shared, loss = _client_update(global_model, client, config, round_index)
            shared_sets.append(shared)
            weights.append(
                float(client.num_train)
                if config.averaging == SAMPLE_WEIGHTED else 1.0
            )
            train_losses[int(cid)] = loss
        apply_shared(global_model, average_arrays(shared_sets, weights))

        snapshot = _assemble(global_model, clients)
        val_loss, val_score = _pooled_validation(snapshot, clients, config.val_metric)
        records.append(RoundRecord(round_index, train_losses, val_loss, val_score))
        if not math.isnan(val_loss) and val_loss < best_val_loss:
            best_val_loss = val_loss
            best_round = round_index
            best_model = snapshot

    final_model = _assemble(global_model, clients)
    if best_model is None:
        best_model = final_model
        best_round = config.rounds - 1
        best_val_loss = math.nan
    return FederatedResult(best_model, best_round, best_val_loss, records, final_model)


def train_centralized(
    model: ClassifierModel,
    features: np.ndarray,
    labels: np.ndarray,
    num_steps: int,
    learning_rate: float,
    batch_size: int | None = None,
    seed: int = 0,
    client_id: int | None = None,
) -> ClassifierModel:
    """Plain (non-federated) SGD reference loop, mutating ``model`` in place.

    Uses the same per-step seeded epoch shuffle as a federated client, so a
    K=1, E=1, full-batch federation reproduces it bit-for-bit.
    """
    n = features.shape[0]
    if batch_size is None:
        batch_size = n
    h = None
    if model.is_conditioned:
        h = ClientOneHot(0 if client_id is None else client_id, model.num_clients)
    for step in range(num_steps):
        rng = spawn_rng(seed, "local", step, 0 if client_id is None else client_id)
        order = rng.permutation(n)
        rows = order[:batch_size]
        _, grads = loss_and_gradients(
            model, features[rows], labels[rows], h, training=True, rng=rng
        )
        sgd_step(model, grads, learning_rate)
    return model


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def predict_logits(
    model: ClassifierModel,
    features: np.ndarray,
    client_ids: np.ndarray | None = None,
) -> np.ndarray:
    """Inference logits; conditioned models group rows by client id."""
    features = np.asarray(features, dtype=np.float64)
    if not model.is_conditioned:
        logits, _ = model_forward(model, features, None, training=False)
        return logits
    if client_ids is None:
        raise ConfigError("conditioned model needs a client id per sample")
    client_ids = np.asarray(client_ids, dtype=np.int64)
    if client_ids.shape != (features.shape[0],):
        raise DimensionError("client_ids length must match feature rows")
    width = 1 if model.task == BINARY else model.num_classes
    logits = np.empty((features.shape[0], width))
    for cid in np.unique(client_ids):
        rows = np.flatnonzero(client_ids == cid)
        h = ClientOneHot(int(cid), model.num_clients)
        logits[rows], _ = model_forward(model, features[rows], h, training=False)
    return logits


def auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-statistic AUC (ties count one half)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    num_pos = int((labels == 1).sum())
    num_neg = int((labels == 0).sum())
    if num_pos == 0 or num_neg == 0:
        raise UndefinedMetricError(
            "AUC undefined: need both classes present"
        )
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    i = 0
    sorted_scores = scores[order]
    while i < len(scores):
        j = i
        while j < len(scores) and sorted_scores[j] == sorted_scores[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j - 1) + 1.0
        i = j
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - num_pos * (num_pos + 1) / 2.0) / (num_pos * num_neg)


def predictions_from_logits(logits: np.ndarray, task: str) -> np.ndarray:
    """Class predictions; exact ties resolve to the lowest class index."""
    if task == BINARY:
        return (logits[:, 0] > 0.0).astype(np.int64)
    return np.argmax(logits, axis=1)


def metric_from_logits(
    logits: np.ndarray, labels: np.ndarray, task: str, metric: str
) -> float:
    if metric == ACCURACY:
        preds = predictions_from_logits(logits, task)
        return float((preds == np.asarray(labels)).mean())
    if metric == AUC:
        if task != BINARY:
            raise UndefinedMetricError("AUC requires a binary task")
        return auc_score(logits[:, 0], labels)
    raise ConfigError(f"unknown metric {metric!r}")


def evaluate(
    model: ClassifierModel,
    features: np.ndarray,
    labels: np.ndarray,
    client_ids: np.ndarray | None = None,
    metric: str = ACCURACY,
) -> float:
    """Accuracy or AUC of the model on a labeled dataset."""
    logits = predict_logits(model, features, client_ids)
    return metric_from_logits(logits, np.asarray(labels), model.task, metric)


# ---------------------------------------------------------------------------
# metric emission
# ---------------------------------------------------------------------------

def write_round_csv(
    records: list[RoundRecord], target: Union[str, io.TextIOBase]
) -> None:
    if isinstance(target, str):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_round_csv(records, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["round", "mean_client_train_loss", "val_loss", "val_metric"])
    for rec in records:
        writer.writerow([
            rec.round,
            repr(rec.mean_client_train_loss),
            repr(rec.val_loss),
            repr(rec.val_metric),
        ])


def write_summary_json(
    target: Union[str, io.TextIOBase],
    config_echo: dict,
    best_round: int,
    best_val_loss: float,
    test_metric: float,
) -> None:
    payload = {
        "config": config_echo,
        "best_round": best_round,
        "best_val_loss": best_val_loss,
        "test_metric": test_metric,
    }
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return
    json.dump(payload, target, indent=2, sort_keys=True)
    target.write("\n")
