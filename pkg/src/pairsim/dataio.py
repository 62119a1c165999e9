"""Synthetic cluster datasets and text-based persistence.

All formats are plain text and lossless for 64-bit floats (shortest
round-trip repr). Checkpoints are JSON with a version tag so loaders can
refuse formats they do not understand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledDataset",
    "ClusterSpec",
    "gen_clusters",
    "save_dataset",
    "load_dataset",
    "save_checkpoint",
    "load_checkpoint",
    "save_record",
]

CHECKPOINT_FORMAT = "pairsim-ckpt-v1"
RECORD_HEADER = "iter,mean_sp,mean_sn,loss,lr"


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features must be M x Din with one label per row")
        if self.labels.size < 2 or np.min(self.labels) < 0:
            raise ValueError("labels must be non-negative with M >= 2")

    @property
    def n_classes(self) -> int:
        return int(np.max(self.labels)) + 1


@dataclass(frozen=True)
class ClusterSpec:
    n_classes: int
    per_class: int
    dim: int
    center_scale: float = 1.0
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2 or self.per_class < 1 or self.dim < 1:
            raise ValueError("need n_classes >= 2, per_class >= 1, dim >= 1")
        if self.center_scale <= 0 or self.noise_sigma < 0:
            raise ValueError("center_scale must be positive, noise_sigma non-negative")


def gen_clusters(spec: ClusterSpec) -> LabeledDataset:
    """Gaussian blobs around class centers drawn uniformly on a sphere.

    Spherical centers give uniform pairwise-angle statistics, which suits
    a cosine-similarity framework better than centers in a cube.
    """
    rng = np.random.default_rng(spec.seed)
    centers = rng.standard_normal((spec.n_classes, spec.dim))
    centers *= spec.center_scale / np.linalg.norm(centers, axis=1, keepdims=True)
    features = np.repeat(centers, spec.per_class, axis=0)
    features = features + spec.noise_sigma * rng.standard_normal(features.shape)
    labels = np.repeat(np.arange(spec.n_classes), spec.per_class)
    return LabeledDataset(features=features, labels=labels)


def save_dataset(path, dataset: LabeledDataset) -> None:
    din = dataset.features.shape[1]
    header = "label," + ",".join(f"f{i}" for i in range(din))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for label, row in zip(dataset.labels, dataset.features):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def load_dataset(path) -> LabeledDataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError("no rows")
    header = lines[0].split(",")
    if header[0] != "label" or len(header) < 2:
        raise ValueError("line 1: bad header, expected 'label,f0,...'")
    width = len(header)
    if not lines[1:]:
        raise ValueError("no rows")
    features, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != width:
            raise ValueError(f"line {lineno}: expected {width} columns, got {len(parts)}")
        try:
            label = int(parts[0])
            row = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if label < 0:
            raise ValueError(f"line {lineno}: negative label {label}")
        labels.append(label)
        features.append(row)
    return LabeledDataset(features=np.array(features), labels=np.array(labels))


def save_checkpoint(path, model, config_echo: dict | None = None) -> None:
    """Self-describing JSON checkpoint; byte-stable across save/load/save."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "din": model.din,
        "embed_dim": model.embed_dim,
        "hidden": model.hidden,
        "n_classes": model.n_classes,
        "w1": model.w1.tolist(),
        "w2": None if model.w2 is None else model.w2.tolist(),
        "class_weights": None
        if model.class_weights is None
        else model.class_weights.tolist(),
        "config": config_echo or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path, expect_din: int | None = None):
    """Load an EmbeddingModel; returns (model, config_echo)."""
    from .engine import EmbeddingModel

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {doc.get('format')!r}")
    w1 = np.array(doc["w1"], dtype=np.float64)
    w2 = None if doc["w2"] is None else np.array(doc["w2"], dtype=np.float64)
    cw = (
        None
        if doc["class_weights"] is None
        else np.array(doc["class_weights"], dtype=np.float64)
    )
    model = EmbeddingModel(w1=w1, w2=w2, class_weights=cw)
    if model.din != doc["din"] or model.embed_dim != doc["embed_dim"]:
        raise ValueError("checkpoint dimension fields disagree with arrays")
    if expect_din is not None and model.din != expect_din:
        raise ValueError(f"checkpoint Din {model.din} != expected {expect_din}")
    return model, doc.get("config", {})


def save_record(path, record) -> None:
    """Trajectory CSV: iter,mean_sp,mean_sn,loss,lr (lossless floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(RECORD_HEADER + "\n")
        for i in range(record.iteration.size):
            fh.write(
                f"{int(record.iteration[i])},"
                f"{float(record.mean_sp[i])!r},{float(record.mean_sn[i])!r},"
                f"{float(record.loss[i])!r},{float(record.lr[i])!r}\n"
            )
