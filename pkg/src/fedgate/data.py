"""Embedding datasets: binary EMB1 format, CSV import/export, synthetic
blob and XOR generators, and seeded train/validation/test splitting.

EMB1 layout (all little-endian):

    magic "EMB1" | version u32 | N u32 | D u32 | C u32
    | labels N x u32 | features N x D x f32 row-major

Features are stored as f32 (typical extractor precision) and widened to
f64 in memory; write->read round-trips are bit-exact for f32 inputs.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Union

import numpy as np

from .errors import (
    DimensionError,
    InfeasibleError,
    LabelError,
    ParseError,
    StratificationError,
)
from .seeding import make_rng

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1


@dataclass
class EmbeddingDataset:
    """N embedding rows with integer class labels in [0, num_classes)."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    names: list[str] | None = None
    client_ids: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DimensionError(f"features must be 2-D, got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DimensionError(
                f"labels shape {self.labels.shape} does not match "
                f"{self.features.shape[0]} samples"
            )
        if not np.all(np.isfinite(self.features)):
            raise DimensionError("features contain non-finite values")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            bad = int(np.argmax((self.labels < 0) | (self.labels >= self.num_classes)))
            raise LabelError(
                f"label {self.labels[bad]} at sample {bad} outside "
                f"[0, {self.num_classes})"
            )
        if self.names is not None and len(self.names) != self.num_classes:
            raise DimensionError("names must have one entry per class")
        if self.client_ids is not None:
            self.client_ids = np.asarray(self.client_ids, dtype=np.int64)
            if self.client_ids.shape != self.labels.shape:
                raise DimensionError("client_ids length must match samples")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "EmbeddingDataset":
        return EmbeddingDataset(
            self.features[indices],
            self.labels[indices],
            self.num_classes,
            self.names,
            None if self.client_ids is None else self.client_ids[indices],
        )


# ---------------------------------------------------------------------------
# EMB1 binary format
# ---------------------------------------------------------------------------

def write_emb1(dataset: EmbeddingDataset, target: Union[str, BinaryIO]) -> None:
    if isinstance(target, str):
        with open(target, "wb") as fh:
            write_emb1(dataset, fh)
        return
    n, d = dataset.features.shape
    target.write(EMB1_MAGIC)
    target.write(struct.pack("<IIII", EMB1_VERSION, n, d, dataset.num_classes))
    target.write(dataset.labels.astype("<u4").tobytes())
    target.write(np.ascontiguousarray(dataset.features, dtype="<f4").tobytes())


def read_emb1(source: Union[str, bytes, BinaryIO]) -> EmbeddingDataset:
    """Parse and validate an EMB1 stream; errors carry the byte offset."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return read_emb1(fh.read())
    if not isinstance(source, bytes):
        source = source.read()
    blob = source
    offset = 0

    def take(count: int, what: str) -> bytes:
        nonlocal offset
        if len(blob) - offset < count:
            raise ParseError(
                f"truncated stream reading {what}: expected {count} bytes, "
                f"got {len(blob) - offset}", offset,
            )
        chunk = blob[offset:offset + count]
        offset += count
        return chunk

    magic = take(4, "magic")
    if magic != EMB1_MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {EMB1_MAGIC!r}", 0)
    version, n, d, c = struct.unpack("<IIII", take(16, "header"))
    if version != EMB1_VERSION:
        raise ParseError(f"unsupported EMB1 version {version}", 4)
    if d == 0 or c == 0:
        raise ParseError(f"degenerate header: D={d}, C={c}", 8)
    labels_off = offset
    labels = np.frombuffer(take(4 * n, "labels"), dtype="<u4").astype(np.int64)
    if labels.size and labels.max() >= c:
        bad = int(np.argmax(labels >= c))
        raise ParseError(
            f"label {labels[bad]} at sample {bad} >= num_classes {c}",
            labels_off + 4 * bad,
        )
    features_off = offset
    raw = np.frombuffer(take(4 * n * d, "features"), dtype="<f4")
    if offset != len(blob):
        raise ParseError(f"{len(blob) - offset} trailing bytes after features", offset)
    if not np.all(np.isfinite(raw)):
        bad = int(np.argmax(~np.isfinite(raw)))
        raise ParseError(
            f"non-finite feature value at sample {bad // d}, column {bad % d}",
            features_off + 4 * bad,
        )
    features = raw.astype(np.float64).reshape(n, d)
    return EmbeddingDataset(features, labels, int(c))


def dumps_emb1(dataset: EmbeddingDataset) -> bytes:
    buf = io.BytesIO()
    write_emb1(dataset, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# CSV import/export (header: label,f0,...,f{D-1})
# ---------------------------------------------------------------------------

def read_csv(source: Union[str, io.TextIOBase]) -> EmbeddingDataset:
    if isinstance(source, str):
        with open(source, "r", newline="", encoding="utf-8") as fh:
            return read_csv(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty CSV", 0) from None
    if not header or header[0] != "label":
        raise ParseError(f"CSV header must start with 'label', got {header[:1]}", 0)
    d = len(header) - 1
    expected = ["label"] + [f"f{i}" for i in range(d)]
    if header != expected:
        raise ParseError(f"CSV header {header} != expected {expected}", 0)
    labels: list[int] = []
    rows: list[list[float]] = []
    for line_no, row in enumerate(reader, start=2):
        if len(row) != d + 1:
            raise ParseError(
                f"CSV line {line_no} has {len(row)} fields, expected {d + 1}",
                line_no,
            )
        labels.append(int(row[0]))
        rows.append([float(v) for v in row[1:]])
    features = np.asarray(rows, dtype=np.float64).reshape(len(rows), d)
    labels_arr = np.asarray(labels, dtype=np.int64)
    num_classes = int(labels_arr.max()) + 1 if labels_arr.size else 1
    return EmbeddingDataset(features, labels_arr, num_classes)


def write_csv(dataset: EmbeddingDataset, target: Union[str, io.TextIOBase]) -> None:
    if isinstance(target, str):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_csv(dataset, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["label"] + [f"f{i}" for i in range(dataset.dim)])
    for label, row in zip(dataset.labels, dataset.features):
        writer.writerow([int(label)] + [repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# synthetic datasets
# ---------------------------------------------------------------------------

def synth_blobs(
    num_classes: int,
    blobs_per_class: int,
    samples_per_blob: int,
    dim: int,
    separation: float,
    spread: float,
    seed: int,
    layout: str = "grid",
) -> tuple[EmbeddingDataset, np.ndarray]:
    """Isotropic Gaussian blobs per class; returns (dataset, blob ids).

    Blob id of a sample is ``class * blobs_per_class + blob_index``.

    layout="grid": blob means sit on distinct integer lattice points scaled
    by ``separation``, so distinct blobs are at least ``separation`` apart.

    layout="ring": blob means sit on a circle of radius ``separation`` in
    the first two coordinates, evenly spaced per class with the whole class
    rotated by c/num_classes of a turn. With two classes and an even blob
    count, each class-0 blob coincides with a class-1 blob, so class is
    ambiguous from position alone but unambiguous given the blob -- the
    class-conditionally non-IID regime.
    """
    if min(num_classes, blobs_per_class, samples_per_blob, dim) < 1:
        raise InfeasibleError("all counts must be >= 1")
    if separation <= 0:
        raise InfeasibleError("separation must be positive")
    if layout not in ("grid", "ring"):
        raise InfeasibleError(f"unknown layout {layout!r}")
    if layout == "ring" and dim < 2:
        raise InfeasibleError("ring layout needs dim >= 2")
    rng = make_rng(seed)
    total_blobs = num_classes * blobs_per_class
    means = np.zeros((total_blobs, dim))
    if layout == "grid":
        side = 1
        while side ** min(dim, 8) < total_blobs:
            side += 1
        axes = min(dim, 8)
        cells = rng.choice(side ** axes, size=total_blobs, replace=False)
        for b, cell in enumerate(cells):
            for axis in range(axes):
                means[b, axis] = float(cell % side) * separation
                cell //= side
    else:
        for c in range(num_classes):
            for j in range(blobs_per_class):
                angle = 2.0 * np.pi * (j / blobs_per_class + c / num_classes)
                b = c * blobs_per_class + j
                means[b, 0] = separation * np.cos(angle)
                means[b, 1] = separation * np.sin(angle)
    n = total_blobs * samples_per_blob
    features = np.empty((n, dim))
    labels = np.empty(n, dtype=np.int64)
    blob_ids = np.empty(n, dtype=np.int64)
    row = 0
    for c in range(num_classes):
        for j in range(blobs_per_class):
            b = c * blobs_per_class + j
            block = means[b] + spread * rng.standard_normal((samples_per_blob, dim))
            features[row:row + samples_per_blob] = block
            labels[row:row + samples_per_blob] = c
            blob_ids[row:row + samples_per_blob] = b
            row += samples_per_blob
    return EmbeddingDataset(features, labels, num_classes), blob_ids


def synth_xor(
    samples_per_cluster: int, spread: float = 0.25, seed: int = 0
) -> EmbeddingDataset:
    """Two-client XOR: four Gaussian clusters at (+-1, +-1).

    Same-sign clusters are the negative class (label 0), opposite-sign
    positive (label 1). Client 0 owns the x2 > 0 clusters ("up"), client 1
    the x2 < 0 ones ("down"). Samples whose signs would cross an axis are
    resampled so the sign rule holds exactly.
    """
    if samples_per_cluster < 1:
        raise InfeasibleError("samples_per_cluster must be >= 1")
    rng = make_rng(seed)
    centers = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
    rows = []
    labels = []
    clients = []
    for cx, cy in centers:
        label = 0 if cx * cy > 0 else 1
        client = 0 if cy > 0 else 1
        for _ in range(samples_per_cluster):
            while True:
                x = cx + spread * rng.standard_normal()
                y = cy + spread * rng.standard_normal()
                if x * cx > 0 and y * cy > 0:
                    break
            rows.append((x, y))
            labels.append(label)
            clients.append(client)
    return EmbeddingDataset(
        np.asarray(rows, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        2,
        names=["same-sign", "opposite-sign"],
        client_ids=np.asarray(clients, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

def _boundaries(n: int, fractions: list[float]) -> list[int]:
    cuts = [0]
    acc = 0.0
    for frac in fractions:
        acc += frac
        cuts.append(int(round(acc * n)))
    cuts[-1] = n
    return cuts


def split(
    dataset: EmbeddingDataset,
    fractions: list[float],
    stratified: bool = False,
    seed: int = 0,
) -> list[EmbeddingDataset]:
    """Seeded disjoint partition covering every sample.

    With ``stratified`` each class is split in the given proportions; a
    fraction that would leave a class empty in some part raises
    StratificationError.
    """
    fractions = [float(f) for f in fractions]
    if any(f <= 0 for f in fractions):
        raise InfeasibleError("fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InfeasibleError(f"fractions sum to {sum(fractions)}, expected 1")
    rng = make_rng(seed)
    parts: list[list[np.ndarray]] = [[] for _ in fractions]
    if stratified:
        for c in range(dataset.num_classes):
            members = np.flatnonzero(dataset.labels == c)
            if members.size == 0:
                continue
            order = members[rng.permutation(members.size)]
            cuts = _boundaries(members.size, fractions)
            for p in range(len(fractions)):
                chunk = order[cuts[p]:cuts[p + 1]]
                if chunk.size == 0:
                    raise StratificationError(
                        f"class {c} would be empty in split part {p} "
                        f"({members.size} samples, fraction {fractions[p]})"
                    )
                parts[p].append(chunk)
    else:
        order = rng.permutation(len(dataset))
        cuts = _boundaries(len(dataset), fractions)
        for p in range(len(fractions)):
            parts[p].append(order[cuts[p]:cuts[p + 1]])
    out = []
    for chunks in parts:
        indices = np.sort(np.concatenate(chunks)) if chunks else np.empty(0, np.int64)
        out.append(dataset.subset(indices))
    return out
