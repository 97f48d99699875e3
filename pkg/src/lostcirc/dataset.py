"""Column-major numeric dataset, CSV ingestion and exploratory statistics."""

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

# Severity classes in increasing order of loss severity. When a dataset's
# labels all come from this vocabulary, reports are ordered this way instead
# of by first occurrence.
SEVERITY_ORDER = ("No Loss", "Seepage Loss", "Partial Loss", "Severe Loss", "Complete Loss")


class Dataset:
    """Immutable table of named numeric feature columns plus one label column.

    Feature values are stored as a float64 matrix of shape (n_rows, n_features).
    Labels are strings drawn from ``class_vocab``. Instances are safe to share
    across threads; every operation below returns a new Dataset.
    """

    def __init__(self, feature_names, X, labels, class_vocab=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        labels = np.asarray(labels, dtype=object)
        if X.shape[0] != labels.shape[0]:
            raise ValueError(
                f"feature rows ({X.shape[0]}) and labels ({labels.shape[0]}) differ in length")
        feature_names = tuple(str(n) for n in feature_names)
        if len(feature_names) != X.shape[1]:
            raise ValueError("feature_names length does not match matrix width")
        if len(set(feature_names)) != len(feature_names):
            raise ValueError("duplicate feature names")
        if X.size and not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise ValueError(
                f"non-finite value in column '{feature_names[bad[1]]}', row {bad[0]}")
        if class_vocab is None:
            class_vocab = infer_class_vocab(labels)
        else:
            class_vocab = tuple(class_vocab)
        vocab_set = set(class_vocab)
        for lab in labels:
            if lab not in vocab_set:
                raise ValueError(f"label {lab!r} not in class vocabulary")
        self.feature_names = feature_names
        self.X = X
        self.X.setflags(write=False)
        self.labels = labels
        self.labels.setflags(write=False)
        self.class_vocab = class_vocab

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def column(self, name):
        return self.X[:, self.feature_names.index(name)]

    def label_indices(self):
        """Labels encoded as indices into class_vocab."""
        lookup = {c: i for i, c in enumerate(self.class_vocab)}
        return np.array([lookup[lab] for lab in self.labels], dtype=np.intp)

    def take(self, indices):
        """Row subset (new Dataset, vocab preserved)."""
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.feature_names, self.X[indices], self.labels[indices],
                       self.class_vocab)

    def replace_values(self, X_new):
        """Same schema and labels, new feature values."""
        return Dataset(self.feature_names, X_new, self.labels, self.class_vocab)

    def select_columns(self, names):
        idx = [self.feature_names.index(n) for n in names]
        return Dataset(tuple(names), self.X[:, idx], self.labels, self.class_vocab)

    def drop_columns(self, names):
        drop = set(names)
        missing = drop - set(self.feature_names)
        if missing:
            raise ValueError(f"cannot drop unknown columns: {sorted(missing)}")
        keep = [n for n in self.feature_names if n not in drop]
        return self.select_columns(keep)

    def with_shuffled_column(self, name, rng):
        """Copy with one feature column permuted in place (for importance runs)."""
        j = self.feature_names.index(name)
        X = self.X.copy()
        X[:, j] = X[rng.permutation(self.n_rows), j]
        return self.replace_values(X)

    def to_csv(self, path, label_column="label"):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(self.feature_names) + [label_column])
            for i in range(self.n_rows):
                writer.writerow([repr(v) for v in self.X[i]] + [self.labels[i]])


def infer_class_vocab(labels):
    """Severity-canonical order when labels allow it, else first occurrence."""
    seen = []
    seen_set = set()
    for lab in labels:
        if lab not in seen_set:
            seen.append(lab)
            seen_set.add(lab)
    if seen_set <= set(SEVERITY_ORDER):
        return tuple(c for c in SEVERITY_ORDER if c in seen_set)
    return tuple(seen)


def load_csv(path, label_column, class_vocab=None):
    """Read a comma-separated table with a header row into a Dataset.

    Every non-label cell must parse as a finite number; parse failures are
    reported with their line number and column name.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        rows = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: line {lineno} has {len(row)} cells, expected {len(header)}")
            vals = []
            for i, cell in enumerate(row):
                if i == label_idx:
                    labels.append(cell.strip())
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno}, column {header[i]!r}: cannot parse {cell.strip()!r} as a number") from None
                if not np.isfinite(v):
                    raise ValueError(
                        f"{path}: line {lineno}, column {header[i]!r}: non-finite value {cell.strip()!r}")
                vals.append(v)
            rows.append(vals)
        if not rows:
            raise ValueError(f"{path}: no data rows")
    X = np.array(rows, dtype=np.float64)
    return Dataset(feature_names, X, labels, class_vocab)


# ---------------------------------------------------------------------------
# Descriptive statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnSummary:
    """Moments and quartiles of one column, in its native units."""
    mean: float
    std_dev: float
    minimum: float
    q25: float
    q50: float
    q75: float
    maximum: float
    sample_std: bool = True  # std_dev uses the n-1 denominator


def quantile(values, q):
    """Linear interpolation between closest order statistics (index q*(n-1))."""
    return float(np.quantile(np.asarray(values, dtype=np.float64), q, method="linear"))


def summarize_column(values):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot summarize an empty column")
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    q25, q50, q75 = (quantile(values, q) for q in (0.25, 0.50, 0.75))
    return ColumnSummary(mean=float(values.mean()), std_dev=std,
                         minimum=float(values.min()), q25=q25, q50=q50, q75=q75,
                         maximum=float(values.max()))


def describe(dataset):
    """Per-feature ColumnSummary rows, in schema order."""
    if dataset.n_rows < 1:
        raise ValueError("cannot describe an empty dataset")
    return [(name, summarize_column(dataset.X[:, j]))
            for j, name in enumerate(dataset.feature_names)]


def pearson_matrix(dataset):
    """Symmetric feature-correlation matrix; errors on zero-variance columns."""
    X = dataset.X
    stds = X.std(axis=0)
    for j, s in enumerate(stds):
        if s == 0.0:
            raise ValueError(f"column '{dataset.feature_names[j]}' has zero variance")
    r = np.corrcoef(X, rowvar=False)
    r = np.atleast_2d(r)
    np.fill_diagonal(r, 1.0)
    return np.clip(r, -1.0, 1.0)


@dataclass(frozen=True)
class ClassDistribution:
    classes: tuple  # of (name, count, fraction)
    n_rows: int


def class_distribution(dataset):
    if dataset.n_rows < 1:
        raise ValueError("empty dataset")
    n = dataset.n_rows
    counts = {c: 0 for c in dataset.class_vocab}
    for lab in dataset.labels:
        counts[lab] += 1
    classes = tuple((c, counts[c], counts[c] / n) for c in dataset.class_vocab)
    return ClassDistribution(classes=classes, n_rows=n)


def histogram(values, n_bins):
    """Equal-width bins over [min, max]; returns (bin_lo, bin_hi, count) triples.

    A constant column yields a single zero-width bin holding every point.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty column")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return [(lo, hi, int(values.size))]
    counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(n_bins)]


@dataclass(frozen=True)
class BoxplotStats:
    q25: float
    q50: float
    q75: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple


def boxplot_stats(values):
    """Tukey box-and-whisker summary: whiskers reach the most extreme points
    within 1.5*IQR of the box; anything beyond is listed as an outlier."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty column")
    q25, q50, q75 = (quantile(values, q) for q in (0.25, 0.50, 0.75))
    iqr = q75 - q25
    lo_fence, hi_fence = q25 - 1.5 * iqr, q75 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    # The box always contains data, so `inside` is never empty.
    whisker_lo, whisker_hi = float(inside.min()), float(inside.max())
    outliers = values[(values < lo_fence) | (values > hi_fence)]
    return BoxplotStats(q25=q25, q50=q50, q75=q75, whisker_lo=whisker_lo,
                        whisker_hi=whisker_hi, outliers=tuple(float(v) for v in np.sort(outliers)))


# ---------------------------------------------------------------------------
# Stable CSV/JSON export of the exploratory results
# ---------------------------------------------------------------------------

def write_describe_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "mean", "std_dev", "min", "q25", "q50", "q75", "max"])
        for name, s in rows:
            w.writerow([name] + [repr(v) for v in
                                 (s.mean, s.std_dev, s.minimum, s.q25, s.q50, s.q75, s.maximum)])


def write_describe_json(rows, path):
    payload = [{"feature": name, "mean": s.mean, "std_dev": s.std_dev,
                "min": s.minimum, "q25": s.q25, "q50": s.q50, "q75": s.q75,
                "max": s.maximum, "sample_std": s.sample_std}
               for name, s in rows]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_matrix_csv(names, matrix, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature"] + list(names))
        for i, name in enumerate(names):
            w.writerow([name] + [repr(float(v)) for v in matrix[i]])


def write_matrix_json(names, matrix, path):
    payload = {"features": list(names),
               "matrix": [[float(v) for v in row] for row in matrix]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
