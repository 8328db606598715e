"""Synthetic datasets for attacking small classifiers.

`generate_blobs` is the desk-scale stand-in for a real image corpus: isotropic
Gaussian clusters, one per class, rescaled into the unit hypercube so the
epsilon budget of an attack reads like a pixel-value perturbation.
"""

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """A labeled feature matrix.

    features: (n_samples, n_features) float64, typically in [0, 1]
    labels:   (n_samples,) int64 class indices in [0, n_classes)
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = "dataset"

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ValueError("features must be a non-empty 2-D matrix")
        if labels.shape != (feats.shape[0],):
            raise ValueError("labels must be one class index per sample")
        if self.n_classes < 1:
            raise ValueError("n_classes must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n_classes == other.n_classes
            and self.name == other.name
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


def generate_blobs(
    seed: int,
    n_per_class: int = 50,
    n_classes: int = 2,
    n_features: int = 2,
    separation: float = 4.0,
) -> Dataset:
    """Gaussian blobs, one cluster per class, rescaled into [0, 1].

    Class c is centered at c * separation / sqrt(n_features) along the main
    diagonal, so consecutive centers sit exactly `separation` apart before
    unit-variance noise is added.  Deterministic for a fixed seed.
    """
    if n_per_class < 1 or n_classes < 1 or n_features < 1:
        raise ValueError("counts must be positive")
    if separation <= 0:
        raise ValueError("separation must be positive")

    rng = np.random.default_rng(seed)
    step = separation / np.sqrt(n_features)
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_per_class)
    centers = np.outer(np.arange(n_classes, dtype=np.float64) * step, np.ones(n_features))
    features = centers[labels] + rng.normal(size=(labels.size, n_features))

    # Affine rescale each feature into [0, 1]; a constant column maps to 0.
    lo = features.min(axis=0)
    span = features.max(axis=0) - lo
    span[span == 0.0] = 1.0
    features = (features - lo) / span

    name = f"blobs-seed{seed}-{n_classes}x{n_per_class}"
    return Dataset(features=features, labels=labels, n_classes=n_classes, name=name)


# ---------------------------------------------------------------------------
# CSV interchange: header f0,...,f{k-1},label; UTF-8; LF line endings
# ---------------------------------------------------------------------------


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"f{i}" for i in range(dataset.n_features)] + ["label"])
    for row, label in zip(dataset.features, dataset.labels):
        writer.writerow([repr(float(v)) for v in row] + [int(label)])
    return buf.getvalue()


def write_dataset_csv(dataset: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(dataset), encoding="utf-8", newline="")


def read_dataset_csv(path, n_classes: int | None = None, name: str | None = None) -> Dataset:
    """Load a dataset CSV.  n_classes defaults to max(label) + 1."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: expected header f0,...,f{{k-1}},label")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no samples")
    features = np.array([[float(v) for v in row[:-1]] for row in rows], dtype=np.float64)
    labels = np.array([int(row[-1]) for row in rows], dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    return Dataset(
        features=features,
        labels=labels,
        n_classes=n_classes,
        name=name if name is not None else path.stem,
    )
