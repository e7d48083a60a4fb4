"""Ordinal datasets: imbalanced synthetic generator, CSV ingestion and splitting."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from .numerics import SeededRng

LIMUC_PROPORTIONS = (0.541, 0.271, 0.111, 0.077)


class DatasetError(ValueError):
    pass


class CsvParseError(DatasetError):
    pass


class StratificationError(DatasetError):
    pass


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    class_names: list | None = None
    provenance: dict = field(default_factory=dict)
    indices: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise DatasetError(f"X {self.X.shape} and y {self.y.shape} do not line up")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise DatasetError(f"labels must lie in [0, {self.n_classes})")

    def __len__(self):
        return self.y.shape[0]

    @property
    def input_dim(self):
        return self.X.shape[1]

    def class_counts(self):
        return np.bincount(self.y, minlength=self.n_classes)

    def check_all_classes(self):
        missing = np.flatnonzero(self.class_counts() == 0)
        if missing.size:
            raise DatasetError(f"classes without samples: {missing.tolist()}")
        return self

    def subset(self, idx, name=None):
        idx = np.asarray(idx, dtype=np.int64)
        prov = dict(self.provenance)
        if name:
            prov["split"] = name
        base = idx if self.indices is None else self.indices[idx]
        return Dataset(self.X[idx], self.y[idx], self.n_classes, self.class_names, prov, base)


@dataclass(frozen=True)
class SyntheticParams:
    n_classes: int = 4
    input_dim: int = 8
    n_samples: int = 2000
    class_proportions: tuple = LIMUC_PROPORTIONS
    class_center_spacing: float = 1.0
    noise_sigma: float = 0.8
    overlap_jitter: float = 0.0

    def __post_init__(self):
        props = tuple(float(p) for p in self.class_proportions)
        object.__setattr__(self, "class_proportions", props)
        if len(props) != self.n_classes:
            raise DatasetError("need one proportion per class")
        if min(props) <= 0 or abs(sum(props) - 1.0) > 1e-6:
            raise DatasetError("class proportions must be positive and sum to 1")
        if self.input_dim < 1 or self.noise_sigma < 0 or self.overlap_jitter < 0:
            raise DatasetError("invalid synthetic parameters")

    def to_dict(self):
        d = asdict(self)
        d["class_proportions"] = list(self.class_proportions)
        return d


def largest_remainder(total, fractions):
    """Integer counts proportional to ``fractions`` that sum exactly to ``total``.

    Leftover units go to the largest fractional parts, earlier entries first on ties.
    """
    exact = np.asarray(fractions, dtype=np.float64) * total
    counts = np.floor(exact + 1e-9).astype(np.int64)
    rem = exact - counts
    order = sorted(range(len(counts)), key=lambda i: (-round(rem[i], 9), i))
    for i in order[: int(total - counts.sum())]:
        counts[i] += 1
    return counts


def class_counts_for(n, proportions):
    counts = largest_remainder(n, proportions)
    # every class keeps at least one sample
    while counts.min() == 0:
        counts[np.argmax(counts)] -= 1
        counts[np.argmin(counts)] += 1
    return counts


def generate_synthetic(params=SyntheticParams(), seed=0):
    """Gaussian classes with collinear, evenly spaced centers.

    Class ``k`` is centred at ``k * spacing * u`` for a random unit vector
    ``u``, so center distances grow linearly with class distance.  Samples
    get isotropic Gaussian noise ``noise_sigma`` plus an optional uniform
    shift along ``u`` of at most ``overlap_jitter * spacing``.
    """
    if params.n_samples < params.n_classes:
        raise DatasetError("n_samples must be >= number of classes")
    rng = SeededRng(seed)
    u = rng.normal(size=params.input_dim)
    u /= np.linalg.norm(u)
    counts = class_counts_for(params.n_samples, params.class_proportions)
    X_parts, y_parts = [], []
    for k, n_k in enumerate(counts):
        center = k * params.class_center_spacing * u
        shift = rng.uniform(-1.0, 1.0, size=(n_k, 1)) * params.overlap_jitter * params.class_center_spacing
        noise = rng.normal(0.0, 1.0, size=(n_k, params.input_dim)) * params.noise_sigma
        X_parts.append(center + shift * u + noise)
        y_parts.append(np.full(n_k, k, dtype=np.int64))
    order = rng.permutation(params.n_samples)
    X = np.vstack(X_parts)[order]
    y = np.concatenate(y_parts)[order]
    prov = {"source": "synthetic", "seed": int(seed), "params": params.to_dict(), "direction": u.tolist()}
    return Dataset(X, y, params.n_classes, None, prov).check_all_classes()


def class_centers(ds):
    """Centres used to generate a synthetic dataset (row ``k`` = class ``k``)."""
    p = ds.provenance["params"]
    u = np.asarray(ds.provenance["direction"])
    return np.arange(p["n_classes"])[:, None] * p["class_center_spacing"] * u[None, :]


def load_csv(path, label_column="label", n_classes=None):
    """Read a comma-separated file with a header row.

    Every column other than ``label_column`` is a numeric feature.  ``K``
    is ``n_classes`` when given, otherwise the largest label plus one.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if label_column not in header:
        raise DatasetError(f"{path}: missing label column {label_column!r}")
    li = header.index(label_column)
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise DatasetError(f"{path}: no data rows")
    feats = [j for j in range(len(header)) if j != li]
    X = np.empty((len(body), len(feats)))
    y = np.empty(len(body), dtype=np.int64)
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvParseError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for out_j, j in enumerate(feats):
            try:
                X[i - 2, out_j] = float(row[j])
            except ValueError:
                raise CsvParseError(f"{path}: row {i}, column {header[j]!r}: not a number: {row[j]!r}") from None
        try:
            lab = float(row[li])
        except ValueError:
            raise CsvParseError(f"{path}: row {i}, column {label_column!r}: not a number: {row[li]!r}") from None
        if lab != int(lab) or lab < 0:
            raise CsvParseError(f"{path}: row {i}: label must be a non-negative integer, got {row[li]!r}")
        y[i - 2] = int(lab)
    if not np.all(np.isfinite(X)):
        raise CsvParseError(f"{path}: non-finite feature values")
    K = int(y.max()) + 1 if n_classes is None else int(n_classes)
    if y.max() >= K:
        raise DatasetError(f"{path}: label {int(y.max())} is out of range for {K} classes")
    prov = {"source": "csv", "path": str(path), "label_column": label_column}
    return Dataset(X, y, K, None, prov).check_all_classes()


def export_csv(ds, path, label_column="label"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(ds.input_dim)] + [label_column])
        for xi, yi in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in xi] + [int(yi)])


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.8, 0.1, 0.1)
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        f = tuple(float(x) for x in self.fractions)
        object.__setattr__(self, "fractions", f)
        if len(f) != 3 or min(f) < 0 or abs(sum(f) - 1.0) > 1e-9:
            raise DatasetError("split fractions must be three non-negative numbers summing to 1")


def split_indices(y, n_classes, spec):
    rng = SeededRng(spec.seed)
    parts = [[], [], []]
    if spec.stratified:
        n_splits = sum(f > 0 for f in spec.fractions)
        for k in range(n_classes):
            idx = np.flatnonzero(y == k)
            if idx.size < n_splits:
                raise StratificationError(f"class {k} has {idx.size} samples, fewer than {n_splits} splits")
            idx = idx[rng.permutation(idx.size)]
            bounds = np.cumsum(largest_remainder(idx.size, spec.fractions))
            for s, chunk in enumerate(np.split(idx, bounds[:-1])):
                parts[s].append(chunk)
    else:
        idx = rng.permutation(y.size)
        bounds = np.cumsum(largest_remainder(y.size, spec.fractions))
        for s, chunk in enumerate(np.split(idx, bounds[:-1])):
            parts[s].append(chunk)
    return tuple(np.sort(np.concatenate(p)) if p else np.empty(0, dtype=np.int64) for p in parts)


def split(ds, spec=SplitSpec()):
    """Disjoint train/val/test partition, stratified per class by default."""
    tr, va, te = split_indices(ds.y, ds.n_classes, spec)
    return ds.subset(tr, "train"), ds.subset(va, "val"), ds.subset(te, "test")
