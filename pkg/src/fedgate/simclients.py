"""Simulate K non-IID clients from an embedding dataset.

The pipeline projects embeddings onto the two leading principal components
(fitted on training data only), runs K-means per class in that plane, maps
each class's centroids to clients through a seeded random permutation, and
assigns every sample to the client owning its nearest same-class centroid.
Shuffling a proportion of the assignments interpolates towards IID clients.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .data import EmbeddingDataset
from .errors import DimensionError, InfeasibleError, ParseError
from .linalg import PcaModel, kmeans, pca_fit
from .seeding import derive_seed, make_rng, spawn_rng


@dataclass
class ClientAssignment:
    """Sample-to-client mapping with the provenance that produced it."""

    assignment: np.ndarray
    num_clients: int
    centroids: dict[int, np.ndarray] = field(default_factory=dict)
    centroid_to_client: dict[int, np.ndarray] = field(default_factory=dict)
    shuffle_proportion: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.ndim != 1:
            raise DimensionError("assignment must be a 1-D vector")
        if self.assignment.size and (
            self.assignment.min() < 0 or self.assignment.max() >= self.num_clients
        ):
            raise DimensionError(
                f"client ids must lie in [0, {self.num_clients})"
            )

    def __len__(self) -> int:
        return self.assignment.size


@dataclass
class SimulationResult:
    train: ClientAssignment
    test: ClientAssignment | None
    pca: PcaModel


def simulate_clients(
    train: EmbeddingDataset,
    test: EmbeddingDataset | None,
    k: int,
    seed: int,
    num_components: int = 2,
) -> SimulationResult:
    """Derive client assignments for train (and optionally test) samples.

    Every class present in train needs at least k samples; test samples of
    a class never seen in training cannot be placed and raise an error.
    """
    if k < 1:
        raise InfeasibleError(f"k must be >= 1, got {k}")
    pca = pca_fit(train.features, min(num_components, train.dim, len(train)))
    projected = pca.project(train.features)

    centroids: dict[int, np.ndarray] = {}
    matching: dict[int, np.ndarray] = {}
    assignment = np.empty(len(train), dtype=np.int64)
    for c in range(train.num_classes):
        members = np.flatnonzero(train.labels == c)
        if members.size == 0:
            continue
        if members.size < k:
            raise InfeasibleError(
                f"class {c} has {members.size} training samples, fewer than k={k}"
            )
        cents, labels = kmeans(
            projected[members], k, derive_seed(seed, "kmeans", c)
        )
        perm = spawn_rng(seed, "match", c).permutation(k)
        centroids[c] = cents
        matching[c] = perm
        assignment[members] = perm[labels]
    train_assignment = ClientAssignment(
        assignment, k, centroids, matching, 0.0, seed
    )

    test_assignment = None
    if test is not None:
        if test.dim != train.dim:
            raise DimensionError(
                f"test dim {test.dim} does not match train dim {train.dim}"
            )
        test_projected = pca.project(test.features)
        test_ids = np.empty(len(test), dtype=np.int64)
        for c in range(test.num_classes):
            members = np.flatnonzero(test.labels == c)
            if members.size == 0:
                continue
            if c not in centroids:
                raise InfeasibleError(
                    f"test class {c} has no training samples to derive centroids"
                )
            diff = test_projected[members, None, :] - centroids[c][None, :, :]
            nearest = np.argmin(np.einsum("nkd,nkd->nk", diff, diff), axis=1)
            test_ids[members] = matching[c][nearest]
        test_assignment = ClientAssignment(
            test_ids, k, centroids, matching, 0.0, seed
        )
    return SimulationResult(train_assignment, test_assignment, pca)


def shuffle_selection(n: int, proportion: float, seed: int) -> np.ndarray:
    """The floor(proportion * n) sample indices chosen for reassignment."""
    if not 0.0 <= proportion <= 1.0:
        raise InfeasibleError(f"proportion must be in [0, 1], got {proportion}")
    count = int(np.floor(proportion * n))
    rng = make_rng(derive_seed(seed, "select"))
    return np.sort(rng.choice(n, size=count, replace=False))


def shuffle_assignment(
    a: ClientAssignment, proportion: float, seed: int
) -> ClientAssignment:
    """Reassign a seeded random proportion of samples to uniform clients.

    A reassigned sample may land on its original client, so proportion 1.0
    is fully random assignment rather than a derangement.
    """
    selected = shuffle_selection(len(a), proportion, seed)
    assignment = a.assignment.copy()
    rng = make_rng(derive_seed(seed, "reassign"))
    assignment[selected] = rng.integers(0, a.num_clients, size=selected.size)
    return ClientAssignment(
        assignment, a.num_clients, a.centroids, a.centroid_to_client,
        proportion, seed,
    )


def class_histogram(
    a: ClientAssignment, labels, num_classes: int | None = None
) -> np.ndarray:
    """Counts per (client, class); row-normalizing gives each client's
    class distribution."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != a.assignment.shape:
        raise DimensionError(
            f"labels length {labels.size} != assignment length {len(a)}"
        )
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    table = np.zeros((a.num_clients, num_classes), dtype=np.int64)
    np.add.at(table, (a.assignment, labels), 1)
    return table


def export_assignment_csv(
    a: ClientAssignment, target: Union[str, io.TextIOBase]
) -> None:
    if isinstance(target, str):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            export_assignment_csv(a, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["sample_index", "client_id"])
    for i, cid in enumerate(a.assignment):
        writer.writerow([i, int(cid)])


def import_assignment_csv(
    source: Union[str, io.TextIOBase], num_clients: int | None = None
) -> ClientAssignment:
    """Read an exported assignment; centroid provenance is not recoverable."""
    if isinstance(source, str):
        with open(source, "r", newline="", encoding="utf-8") as fh:
            return import_assignment_csv(fh, num_clients)
    reader = csv.reader(source)
    header = next(reader, None)
    if header != ["sample_index", "client_id"]:
        raise ParseError(f"unexpected assignment CSV header {header}", 0)
    ids = []
    for line_no, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise ParseError(f"line {line_no}: expected 2 fields", line_no)
        if int(row[0]) != line_no - 2:
            raise ParseError(
                f"line {line_no}: sample_index {row[0]} out of order", line_no
            )
        ids.append(int(row[1]))
    assignment = np.asarray(ids, dtype=np.int64)
    if num_clients is None:
        num_clients = int(assignment.max()) + 1 if assignment.size else 1
    return ClientAssignment(assignment, num_clients)
