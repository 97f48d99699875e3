"""Preprocessing transforms: IQR capping, correlation pruning, min-max
scaling, Box-Cox, stratified splitting, and leakage-safe pipelines.

Every transform is fitted on training rows only and applies stored
parameters verbatim afterwards.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, pearson_matrix, quantile

BOXCOX_EPS = 1e-6


def iqr_fences(q1, q3, whisker=1.5):
    """Tukey fences: (q1 - 1.5*IQR, q3 + 1.5*IQR)."""
    iqr = q3 - q1
    return q1 - whisker * iqr, q3 + whisker * iqr


# ---------------------------------------------------------------------------
# Outlier capping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CapBounds:
    """Per-column clamp interval derived from quartile fences."""
    bounds: dict  # name -> (lo, hi)


def cap_fit(train):
    if train.n_rows < 2:
        raise ValueError("capping needs at least 2 rows to compute quartiles")
    bounds = {}
    for j, name in enumerate(train.feature_names):
        col = train.X[:, j]
        lo, hi = iqr_fences(quantile(col, 0.25), quantile(col, 0.75))
        bounds[name] = (float(lo), float(hi))
    return CapBounds(bounds=bounds)


def cap_apply(data, cap_bounds):
    """Clamp values into [lo, hi]; in-range values pass through bit-identical."""
    X = data.X.copy()
    for j, name in enumerate(data.feature_names):
        if name not in cap_bounds.bounds:
            raise ValueError(f"no cap bounds for column '{name}'")
        lo, hi = cap_bounds.bounds[name]
        np.clip(X[:, j], lo, hi, out=X[:, j])
    return data.replace_values(X)


# ---------------------------------------------------------------------------
# Correlation pruning
# ---------------------------------------------------------------------------

def corr_prune(data, threshold=0.7, *, seed=None):
    """Drop one member of each over-correlated feature pair until no pair
    has |r| > threshold.

    Greedy on the highest remaining |r|. By default the column later in
    schema order is dropped; with a seed, the victim is chosen at random
    (seeded) instead. Returns (pruned dataset, audit trail of
    (kept, dropped, r)).
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    current = data
    removed = []
    while current.n_features >= 2:
        r = pearson_matrix(current)
        absr = np.abs(r)
        np.fill_diagonal(absr, 0.0)
        flat = np.argmax(absr)  # row-major argmax: lowest i, then lowest j on ties
        i, j = np.unravel_index(flat, absr.shape)
        if i > j:
            i, j = j, i
        if absr[i, j] <= threshold:
            break
        if rng is not None and rng.random() < 0.5:
            drop_idx, keep_idx = i, j
        else:
            drop_idx, keep_idx = j, i
        removed.append((current.feature_names[keep_idx], current.feature_names[drop_idx],
                        float(r[i, j])))
        current = current.drop_columns([current.feature_names[drop_idx]])
    return current, removed


# ---------------------------------------------------------------------------
# Min-max scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinMaxParams:
    ranges: dict  # name -> (x_min, x_max)


def minmax_fit(train):
    ranges = {}
    for j, name in enumerate(train.feature_names):
        col = train.X[:, j]
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            raise ValueError(f"column '{name}' is constant; min-max scaling undefined")
        ranges[name] = (lo, hi)
    return MinMaxParams(ranges=ranges)


def minmax_apply(data, params):
    """y = (x - x_min)/(x_max - x_min). Out-of-range rows are not clipped."""
    X = data.X.copy()
    for j, name in enumerate(data.feature_names):
        if name not in params.ranges:
            raise ValueError(f"no min-max range for column '{name}'")
        lo, hi = params.ranges[name]
        X[:, j] = (X[:, j] - lo) / (hi - lo)
    return data.replace_values(X)


# ---------------------------------------------------------------------------
# Box-Cox power transform
# ---------------------------------------------------------------------------

def boxcox_transform(values, lam):
    """(v^lambda - 1)/lambda, ln v at lambda = 0; values must be positive."""
    logv = np.log(values)
    if lam == 0.0:
        return logv
    return np.expm1(lam * logv) / lam


def boxcox_llf(lam, values):
    """Profile log-likelihood of the Box-Cox parameter for positive values."""
    y = boxcox_transform(values, lam)
    n = values.size
    var = y.var()
    return -0.5 * n * np.log(var) + (lam - 1.0) * np.log(values).sum()


def _golden_max(f, lo, hi, tol=1e-4):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def fit_boxcox_lambda(values, lam_lo=-5.0, lam_hi=5.0, tol=1e-4):
    """Maximize the Box-Cox log-likelihood: coarse grid, then golden-section
    refinement around the best grid point."""
    grid = np.linspace(lam_lo, lam_hi, 101)
    scores = [boxcox_llf(l, values) for l in grid]
    k = int(np.argmax(scores))
    lo = grid[max(0, k - 1)]
    hi = grid[min(len(grid) - 1, k + 1)]
    return float(_golden_max(lambda l: boxcox_llf(l, values), lo, hi, tol=tol))


@dataclass(frozen=True)
class BoxCoxParams:
    params: dict  # name -> (lam, shift)


def boxcox_fit(train):
    """Fit per-column (lambda, shift). Shift makes every fit value strictly
    positive (min shifted value = BOXCOX_EPS when the column has non-positive
    values, zero shift otherwise)."""
    out = {}
    for j, name in enumerate(train.feature_names):
        col = train.X[:, j]
        if np.unique(col).size < 2:
            raise ValueError(f"column '{name}' is degenerate; Box-Cox undefined")
        mn = float(col.min())
        shift = BOXCOX_EPS - mn if mn <= 0.0 else 0.0
        lam = fit_boxcox_lambda(col + shift)
        out[name] = (lam, shift)
    return BoxCoxParams(params=out)


def boxcox_apply(data, params):
    """Apply stored (lambda, shift); values that are still non-positive after
    shifting are clamped to BOXCOX_EPS so the transform stays defined."""
    X = data.X.copy()
    for j, name in enumerate(data.feature_names):
        if name not in params.params:
            raise ValueError(f"no Box-Cox parameters for column '{name}'")
        lam, shift = params.params[name]
        v = np.maximum(X[:, j] + shift, BOXCOX_EPS)
        X[:, j] = boxcox_transform(v, lam)
    return data.replace_values(X)


# ---------------------------------------------------------------------------
# Hold-out split
# ---------------------------------------------------------------------------

def split(data, test_frac=0.2, *, seed, stratified=True):
    """Disjoint (train, test) row split, stratified by class by default.

    Stratification keeps every class present in both subsets, with the
    per-class test share within one row of test_frac.
    """
    rng = np.random.default_rng(seed)
    n = data.n_rows
    if stratified:
        labels = data.labels
        test_idx = []
        for cls in data.class_vocab:
            cls_idx = np.flatnonzero(labels == cls)
            if cls_idx.size == 0:
                continue
            if cls_idx.size < 2:
                raise ValueError(
                    f"class {cls!r} has a single member; stratified split impossible")
            perm = cls_idx[rng.permutation(cls_idx.size)]
            n_test = int(round(test_frac * cls_idx.size))
            n_test = min(max(n_test, 1), cls_idx.size - 1)
            test_idx.append(perm[:n_test])
        test_idx = np.sort(np.concatenate(test_idx))
    else:
        perm = rng.permutation(n)
        n_test = min(max(int(round(test_frac * n)), 0), n)
        test_idx = np.sort(perm[:n_test])
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    return data.take(train_idx), data.take(test_idx)


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------

class CapStage:
    name = "cap"

    def __init__(self):
        self.bounds_ = None

    def clone(self):
        return CapStage()

    def fit(self, ds):
        if self.bounds_ is not None:
            raise RuntimeError("stage already fitted")
        self.bounds_ = cap_fit(ds)
        return self

    def apply(self, ds):
        return cap_apply(ds, self.bounds_)

    def to_dict(self):
        return {"kind": self.name, "bounds": {k: list(v) for k, v in self.bounds_.bounds.items()}}

    @classmethod
    def from_dict(cls, d):
        st = cls()
        st.bounds_ = CapBounds(bounds={k: tuple(v) for k, v in d["bounds"].items()})
        return st


class MinMaxStage:
    name = "minmax"

    def __init__(self):
        self.params_ = None

    def clone(self):
        return MinMaxStage()

    def fit(self, ds):
        if self.params_ is not None:
            raise RuntimeError("stage already fitted")
        self.params_ = minmax_fit(ds)
        return self

    def apply(self, ds):
        return minmax_apply(ds, self.params_)

    def to_dict(self):
        return {"kind": self.name, "ranges": {k: list(v) for k, v in self.params_.ranges.items()}}

    @classmethod
    def from_dict(cls, d):
        st = cls()
        st.params_ = MinMaxParams(ranges={k: tuple(v) for k, v in d["ranges"].items()})
        return st


class BoxCoxStage:
    name = "boxcox"

    def __init__(self):
        self.params_ = None

    def clone(self):
        return BoxCoxStage()

    def fit(self, ds):
        if self.params_ is not None:
            raise RuntimeError("stage already fitted")
        self.params_ = boxcox_fit(ds)
        return self

    def apply(self, ds):
        return boxcox_apply(ds, self.params_)

    def to_dict(self):
        return {"kind": self.name, "params": {k: list(v) for k, v in self.params_.params.items()}}

    @classmethod
    def from_dict(cls, d):
        st = cls()
        st.params_ = BoxCoxParams(params={k: tuple(v) for k, v in d["params"].items()})
        return st


class PruneStage:
    name = "prune"

    def __init__(self, threshold=0.7, seed=None):
        self.threshold = threshold
        self.seed = seed
        self.keep_ = None
        self.removed_ = None

    def clone(self):
        return PruneStage(self.threshold, self.seed)

    def fit(self, ds):
        if self.keep_ is not None:
            raise RuntimeError("stage already fitted")
        pruned, removed = corr_prune(ds, self.threshold, seed=self.seed)
        self.keep_ = list(pruned.feature_names)
        self.removed_ = removed
        return self

    def apply(self, ds):
        return ds.select_columns(self.keep_)

    def to_dict(self):
        return {"kind": self.name, "threshold": self.threshold, "keep": self.keep_,
                "removed": [list(r) for r in self.removed_]}

    @classmethod
    def from_dict(cls, d):
        st = cls(threshold=d["threshold"])
        st.keep_ = list(d["keep"])
        st.removed_ = [tuple(r) for r in d["removed"]]
        return st


STAGE_KINDS = {"cap": CapStage, "minmax": MinMaxStage, "boxcox": BoxCoxStage,
               "prune": PruneStage}


def build_stages(names, threshold=0.7, seed=None):
    stages = []
    for name in names:
        if name not in STAGE_KINDS:
            raise ValueError(f"unknown pipeline stage {name!r}")
        stages.append(PruneStage(threshold, seed) if name == "prune" else STAGE_KINDS[name]())
    return stages


def stage_from_dict(d):
    kind = d["kind"]
    if kind not in STAGE_KINDS:
        raise ValueError(f"unknown pipeline stage {kind!r}")
    return STAGE_KINDS[kind].from_dict(d)


@dataclass
class Pipeline:
    """Ordered transforms plus a terminal classifier, fitted together on
    training rows only. Fitting a Pipeline twice is an error; build a fresh
    one to refit (see evaluate.build_pipeline)."""
    stages: list
    model: object
    fitted: bool = field(default=False, init=False)
    class_vocab_: tuple = field(default=None, init=False)
    feature_names_: tuple = field(default=None, init=False)

    def fit(self, train):
        if self.fitted:
            raise RuntimeError("pipeline already fitted; build a new one to refit")
        ds = train
        for stage in self.stages:
            ds = stage.fit(ds).apply(ds)
        self.class_vocab_ = train.class_vocab
        self.feature_names_ = ds.feature_names
        self.model.fit(ds.X, ds.label_indices(), n_classes=len(train.class_vocab))
        self.fitted = True
        return self

    def transform(self, data):
        ds = data
        for stage in self.stages:
            ds = stage.apply(ds)
        return ds

    def predict(self, data):
        idx = self.model.predict(self.transform(data).X)
        vocab = np.array(self.class_vocab_, dtype=object)
        return vocab[idx]

    def predict_proba(self, data):
        return self.model.predict_proba(self.transform(data).X)
