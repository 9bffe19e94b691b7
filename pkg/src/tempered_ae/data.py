"""Dataset loading, generation, [0,1] normalization, and train/test splitting.

Datasets persist as comma-separated text plus a ``.meta`` sidecar
(key=value) that records normalization bounds, optional label/color
columns, and the generator seed, so a saved dataset round-trips exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Malformed dataset file or invalid dataset operation."""


@dataclass
class Dataset:
    """Feature matrix with optional labels and normalization state.

    ``norm_min``/``norm_max`` are per-feature bounds of the min-max
    transform; ``None`` means the data are raw.  ``color`` is a real
    per-instance scalar carried only for visualization (the roll
    parameter of the swiss-roll generator).
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    color: np.ndarray | None = None
    norm_min: np.ndarray | None = None
    norm_max: np.ndarray | None = None
    degenerate_columns: tuple[int, ...] = ()
    kind: str = "raw"
    seed: int | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (self.n_instances,):
                raise DataError("labels length must equal n_instances")
        if self.color is not None:
            self.color = np.asarray(self.color, dtype=float)
            if self.color.shape != (self.n_instances,):
                raise DataError("color length must equal n_instances")

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_normalized(self) -> bool:
        return self.norm_min is not None


@dataclass
class SplitSpec:
    train_count: int
    test_count: int
    shuffle_seed: int = 0

    def validate(self, n_instances: int):
        if self.train_count < 0 or self.test_count < 0:
            raise DataError("split counts must be non-negative")
        if self.train_count + self.test_count > n_instances:
            raise DataError(
                f"split needs {self.train_count + self.test_count} instances, "
                f"dataset has {n_instances}"
            )


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(
            f"non-numeric cell {text!r} at row {row}, column {col}"
        ) from None


def load_csv(path, has_labels: bool = False, label_column: int = -1) -> Dataset:
    """Load a comma-separated file into a raw Dataset.

    A header row is auto-detected: if any cell of the first row fails to
    parse as a number the row is skipped.  All rows must have equal
    column counts.  When ``has_labels`` is set the ``label_column``
    (negative indices count from the end) is split off as integer labels.
    """
    if not os.path.exists(path):
        raise DataError(f"missing file: {path}")
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DataError(f"empty file: {path}")

    start = 0
    first = lines[0].split(",")
    if any(not _is_number(c) for c in first):
        start = 1
    if start == len(lines):
        raise DataError(f"no data rows in {path}")

    width = len(lines[start].split(","))
    rows = []
    for i, ln in enumerate(lines[start:], start=start):
        cells = ln.split(",")
        if len(cells) != width:
            raise DataError(
                f"ragged row {i}: expected {width} columns, got {len(cells)}"
            )
        rows.append([_parse_cell(c, i, j) for j, c in enumerate(cells)])
    mat = np.array(rows, dtype=float)

    labels = None
    if has_labels:
        col = label_column if label_column >= 0 else mat.shape[1] + label_column
        if not 0 <= col < mat.shape[1]:
            raise DataError(f"label column {label_column} out of range")
        raw = mat[:, col]
        if not np.allclose(raw, np.round(raw)):
            raise DataError(f"label column {col} holds non-integer values")
        labels = np.round(raw).astype(int)
        mat = np.delete(mat, col, axis=1)
    return Dataset(features=mat, labels=labels, kind="csv")


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def generate_swiss_roll(n_points: int, noise_sd: float = 0.0, seed: int = 0) -> Dataset:
    """Three-feature swiss-roll point cloud.

    For u uniform on [1.5*pi, 4.5*pi] and v uniform on [0, 21] each point
    is (u*cos u, v, u*sin u) plus isotropic Gaussian noise of sd
    ``noise_sd``.  The roll parameter u is kept as a color scalar for
    plotting the unrolled embedding.
    """
    if n_points <= 0:
        raise DataError("n_points must be positive")
    if noise_sd < 0:
        raise DataError("noise_sd must be non-negative")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size=n_points)
    v = rng.uniform(0.0, 21.0, size=n_points)
    pts = np.column_stack([u * np.cos(u), v, u * np.sin(u)])
    if noise_sd > 0:
        pts = pts + rng.normal(0.0, noise_sd, size=pts.shape)
    return Dataset(features=pts, color=u, kind="swissroll", seed=seed)


def generate_clusters(
    n_points: int,
    n_features: int,
    n_clusters: int = 8,
    noise_sd: float = 0.1,
    seed: int = 0,
) -> Dataset:
    """Gaussian blobs centered on random hypercube corners, binary labels.

    A synthetic stand-in for cluster-structured benchmark data: centers
    are drawn on {0.25, 0.75}^D corners, points get isotropic noise, and
    the label is the cluster parity.
    """
    if n_points <= 0 or n_features <= 0 or n_clusters <= 0:
        raise DataError("n_points, n_features, n_clusters must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = np.where(rng.random((n_clusters, n_features)) < 0.5, 0.25, 0.75)
    assign = rng.integers(0, n_clusters, size=n_points)
    pts = centers[assign] + rng.normal(0.0, noise_sd, size=(n_points, n_features))
    return Dataset(
        features=pts, labels=assign % 2, kind="clusters", seed=seed
    )


def normalize(dataset: Dataset) -> Dataset:
    """Min-max scale every feature into [0, 1] using the dataset's own bounds.

    Constant columns map to zeros and are listed in
    ``degenerate_columns``; the stored bounds make the transform
    invertible on the rest.
    """
    lo = dataset.features.min(axis=0)
    hi = dataset.features.max(axis=0)
    return apply_bounds(dataset, lo, hi)


def apply_bounds(dataset: Dataset, lo: np.ndarray, hi: np.ndarray) -> Dataset:
    """Scale ``dataset`` with externally supplied per-feature bounds."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    span = hi - lo
    degenerate = tuple(int(j) for j in np.nonzero(span == 0)[0])
    safe = np.where(span == 0, 1.0, span)
    scaled = (dataset.features - lo) / safe
    for j in degenerate:
        scaled[:, j] = 0.0
    return Dataset(
        features=scaled,
        labels=None if dataset.labels is None else dataset.labels.copy(),
        color=None if dataset.color is None else dataset.color.copy(),
        norm_min=lo.copy(),
        norm_max=hi.copy(),
        degenerate_columns=degenerate,
        kind=dataset.kind,
        seed=dataset.seed,
    )


def denormalize(dataset: Dataset) -> Dataset:
    """Invert normalize() on non-degenerate columns."""
    if not dataset.is_normalized:
        raise DataError("dataset carries no normalization bounds")
    span = dataset.norm_max - dataset.norm_min
    raw = dataset.features * span + dataset.norm_min
    return Dataset(
        features=raw,
        labels=None if dataset.labels is None else dataset.labels.copy(),
        color=None if dataset.color is None else dataset.color.copy(),
        kind=dataset.kind,
        seed=dataset.seed,
    )


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Shuffle, take disjoint train/test subsets, normalize both.

    The min-max bounds are learned on the train portion only and applied
    to the test portion, so no test information leaks into the scaling.
    """
    spec.validate(dataset.n_instances)
    rng = np.random.Generator(np.random.PCG64(spec.shuffle_seed))
    order = rng.permutation(dataset.n_instances)
    tr_idx = order[: spec.train_count]
    te_idx = order[spec.train_count : spec.train_count + spec.test_count]

    def take(idx):
        return Dataset(
            features=dataset.features[idx],
            labels=None if dataset.labels is None else dataset.labels[idx],
            color=None if dataset.color is None else dataset.color[idx],
            kind=dataset.kind,
            seed=dataset.seed,
        )

    train_raw = take(tr_idx)
    test_raw = take(te_idx)
    if spec.train_count == 0:
        # nothing to learn bounds from; leave both raw-scaled by zeros span
        lo = np.zeros(dataset.n_features)
        hi = np.zeros(dataset.n_features)
    else:
        lo = train_raw.features.min(axis=0)
        hi = train_raw.features.max(axis=0)
    return apply_bounds(train_raw, lo, hi), apply_bounds(test_raw, lo, hi)


# ---------------------------------------------------------------------------
# persistence: csv + key=value sidecar

def _fmt(x: float) -> str:
    return repr(float(x))


def meta_path(path) -> str:
    stem, _ = os.path.splitext(str(path))
    return stem + ".meta"


def save_dataset(dataset: Dataset, path):
    """Write features (plus optional label/color columns) and the sidecar."""
    cols = [dataset.features]
    label_col = -1
    color_col = -1
    j = dataset.n_features
    if dataset.labels is not None:
        cols.append(dataset.labels.reshape(-1, 1).astype(float))
        label_col = j
        j += 1
    if dataset.color is not None:
        cols.append(dataset.color.reshape(-1, 1))
        color_col = j
    full = np.hstack(cols)
    with open(path, "w") as fh:
        for row in full:
            fh.write(",".join(_fmt(x) for x in row) + "\n")

    meta = {
        "format_version": "1",
        "kind": dataset.kind,
        "n_instances": str(dataset.n_instances),
        "n_features": str(dataset.n_features),
        "label_column": str(label_col),
        "color_column": str(color_col),
    }
    if dataset.seed is not None:
        meta["seed"] = str(dataset.seed)
    if dataset.is_normalized:
        meta["norm_min"] = ",".join(_fmt(x) for x in dataset.norm_min)
        meta["norm_max"] = ",".join(_fmt(x) for x in dataset.norm_max)
        meta["degenerate_columns"] = ",".join(
            str(j) for j in dataset.degenerate_columns
        )
    with open(meta_path(path), "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k}={v}\n")


def load_dataset(path) -> Dataset:
    """Load a dataset written by save_dataset, restoring all metadata."""
    mp = meta_path(path)
    if not os.path.exists(mp):
        raise DataError(f"missing sidecar metadata: {mp}")
    meta = {}
    with open(mp) as fh:
        for ln in fh:
            ln = ln.strip()
            if ln and "=" in ln:
                k, v = ln.split("=", 1)
                meta[k] = v
    raw = load_csv(path)
    mat = raw.features
    label_col = int(meta.get("label_column", -1))
    color_col = int(meta.get("color_column", -1))
    labels = color = None
    drop = []
    if label_col >= 0:
        labels = np.round(mat[:, label_col]).astype(int)
        drop.append(label_col)
    if color_col >= 0:
        color = mat[:, color_col]
        drop.append(color_col)
    if drop:
        mat = np.delete(mat, drop, axis=1)
    ds = Dataset(
        features=mat,
        labels=labels,
        color=color,
        kind=meta.get("kind", "csv"),
        seed=int(meta["seed"]) if "seed" in meta else None,
    )
    if "norm_min" in meta:
        ds.norm_min = np.array([float(x) for x in meta["norm_min"].split(",")])
        ds.norm_max = np.array([float(x) for x in meta["norm_max"].split(",")])
        dg = meta.get("degenerate_columns", "")
        ds.degenerate_columns = tuple(int(x) for x in dg.split(",") if x != "")
    return ds
