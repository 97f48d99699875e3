"""Binary decision trees grown by greedy impurity minimization.

The classification tree minimizes weighted Gini impurity; the regression
tree minimizes sum of squared errors (used as the stage learner in gradient
boosting). Both place thresholds at midpoints between consecutive distinct
sorted feature values and break ties toward the lowest feature index, then
the lowest threshold.
"""

import numpy as np

_LEAF = -1


class _FlatTree:
    """Growable array-of-nodes representation (children by index)."""

    def __init__(self, n_classes):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []      # class counts (classification) or leaf value (regression)
        self.n_samples = []
        self.n_classes = n_classes

    def add_node(self, value, n_samples):
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(value)
        self.n_samples.append(int(n_samples))
        return len(self.feature) - 1

    def make_internal(self, node, feat, thr, left, right):
        self.feature[node] = int(feat)
        self.threshold[node] = float(thr)
        self.left[node] = left
        self.right[node] = right

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.intp)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.intp)
        self.right = np.asarray(self.right, dtype=np.intp)
        self.value = np.asarray(self.value, dtype=np.float64)
        self.n_samples = np.asarray(self.n_samples, dtype=np.intp)

    def apply(self, X):
        """Leaf node index for every row (vectorized level-by-level descent)."""
        n = X.shape[0]
        cur = np.zeros(n, dtype=np.intp)
        while True:
            active = np.flatnonzero(self.feature[cur] != _LEAF)
            if active.size == 0:
                return cur
            nodes = cur[active]
            go_left = X[active, self.feature[nodes]] <= self.threshold[nodes]
            cur[active] = np.where(go_left, self.left[nodes], self.right[nodes])

    def max_depth(self):
        depth = np.zeros(len(self.feature), dtype=np.intp)
        out = 0
        for node in range(len(self.feature)):  # parents precede children
            if self.feature[node] != _LEAF:
                for child in (self.left[node], self.right[node]):
                    depth[child] = depth[node] + 1
                    out = max(out, depth[child])
        return out

    def node_to_dict(self, node):
        if self.feature[node] == _LEAF:
            val = self.value[node]
            val = val.tolist() if isinstance(val, np.ndarray) else float(val)
            return {"value": val, "n_samples": int(self.n_samples[node])}
        return {"feature": int(self.feature[node]),
                "threshold": float(self.threshold[node]),
                "n_samples": int(self.n_samples[node]),
                "left": self.node_to_dict(self.left[node]),
                "right": self.node_to_dict(self.right[node])}

    @classmethod
    def from_dict(cls, d, n_classes):
        tree = cls(n_classes)

        def build(nd):
            if "feature" not in nd:
                val = nd["value"]
                val = np.asarray(val, dtype=np.float64) if isinstance(val, list) else float(val)
                return tree.add_node(val, nd["n_samples"])
            node = tree.add_node(np.zeros(n_classes) if n_classes else 0.0, nd["n_samples"])
            left = build(nd["left"])
            right = build(nd["right"])
            tree.make_internal(node, nd["feature"], nd["threshold"], left, right)
            return node

        build(d)
        tree.finalize()
        return tree


def _class_split_scores(sv, cum_counts, positions, min_leaf, n_node):
    """Split quality Sum_k c_Lk^2/C_L + Sum_k c_Rk^2/C_R at each boundary.

    Maximizing this is equivalent to maximizing the weighted Gini decrease;
    the parent term is constant within a node.
    """
    left_counts = cum_counts[positions]
    total = cum_counts[-1]
    right_counts = total - left_counts
    c_left = left_counts.sum(axis=1)
    c_right = right_counts.sum(axis=1)
    n_left = positions + 1
    ok = (n_left >= min_leaf) & ((n_node - n_left) >= min_leaf) & (c_left > 0) & (c_right > 0)
    if not ok.any():
        return None, None
    scores = np.full(positions.shape, -np.inf)
    scores[ok] = ((left_counts[ok] ** 2).sum(axis=1) / c_left[ok]
                  + (right_counts[ok] ** 2).sum(axis=1) / c_right[ok])
    return scores, ok


class DecisionTreeClassifier:
    """CART-style classifier. Leaf probabilities are class-count fractions.

    max_features limits the candidate features examined per split (sampled
    without replacement from the tree's seeded generator); None examines all
    features in index order, which keeps single-tree fits rng-free.
    """

    supports_sample_weight = True

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=None, seed=None):
        if min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed
        self.tree_ = None
        self.n_classes_ = None

    def get_params(self):
        return {"max_depth": self.max_depth, "min_samples_split": self.min_samples_split,
                "min_samples_leaf": self.min_samples_leaf, "max_features": self.max_features,
                "seed": self.seed}

    def fit(self, X, y, n_classes=None, sample_weight=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.intp)
        if X.shape[0] == 0:
            raise ValueError("cannot fit on zero rows")
        n, p = X.shape
        K = int(n_classes) if n_classes is not None else int(y.max()) + 1
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
        if self.max_features is None:
            m_feats = p
        else:
            m_feats = int(self.max_features)
            if not 1 <= m_feats <= p:
                raise ValueError(f"max_features={m_feats} outside [1, {p}]")
        rng = np.random.default_rng(self.seed)
        max_depth = np.inf if self.max_depth is None else int(self.max_depth)

        tree = _FlatTree(K)
        # Depth-first growth with an explicit stack (no recursion limit).
        root_rows = np.arange(n, dtype=np.intp)
        stack = [(root_rows, 0, None, None)]  # rows, depth, parent, is_left
        while stack:
            rows, depth, parent, is_left = stack.pop()
            counts = np.bincount(y[rows], weights=w[rows], minlength=K)
            node = tree.add_node(counts, rows.size)
            if parent is not None:
                if is_left:
                    tree.left[parent] = node
                else:
                    tree.right[parent] = node
            pure = np.count_nonzero(counts) <= 1
            if (pure or depth >= max_depth or rows.size < self.min_samples_split
                    or rows.size < 2 * self.min_samples_leaf):
                continue
            split = self._best_split(X, y, w, rows, K, p, m_feats, rng)
            if split is None:
                continue
            feat, thr = split
            go_left = X[rows, feat] <= thr
            tree.make_internal(node, feat, thr, _LEAF, _LEAF)
            # Push right first so the left child is grown (and numbered) first.
            stack.append((rows[~go_left], depth + 1, node, False))
            stack.append((rows[go_left], depth + 1, node, True))
        tree.finalize()
        self.tree_ = tree
        self.n_classes_ = K
        return self

    def _best_split(self, X, y, w, rows, K, p, m_feats, rng):
        if m_feats >= p:
            candidates = range(p)
        else:
            candidates = np.sort(rng.choice(p, size=m_feats, replace=False))
        counts = np.bincount(y[rows], weights=w[rows], minlength=K)
        parent_score = (counts ** 2).sum() / counts.sum()
        y_node = y[rows]
        w_node = w[rows]
        best = None
        best_score = parent_score
        for feat in candidates:
            v = X[rows, feat]
            order = np.argsort(v)
            sv = v[order]
            positions = np.flatnonzero(sv[:-1] != sv[1:])
            if positions.size == 0:
                continue
            onehot = np.zeros((rows.size, K))
            onehot[np.arange(rows.size), y_node[order]] = w_node[order]
            cum = np.cumsum(onehot, axis=0)
            scores, ok = _class_split_scores(sv, cum, positions, self.min_samples_leaf, rows.size)
            if scores is None:
                continue
            k = int(np.argmax(scores))
            if scores[k] > best_score:
                best_score = scores[k]
                pos = positions[k]
                best = (int(feat), (sv[pos] + sv[pos + 1]) / 2.0)
        return best

    def predict_proba(self, X):
        X = np.asarray(X, dtype=np.float64)
        leaves = self.tree_.apply(X)
        counts = self.tree_.value[leaves]
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def depth(self):
        return self.tree_.max_depth()

    def n_nodes(self):
        return len(self.tree_.feature)

    def to_dict(self):
        return {"kind": "cart", "params": self.get_params(), "n_classes": self.n_classes_,
                "root": self.tree_.node_to_dict(0)}

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.n_classes_ = d["n_classes"]
        model.tree_ = _FlatTree.from_dict(d["root"], d["n_classes"])
        return model


class RegressionTree:
    """Least-squares tree for one boosting stage.

    Leaf values default to leaf means; the booster replaces them with Newton
    steps via set_leaf_values/apply.
    """

    def __init__(self, max_depth=3, min_samples_split=2, min_samples_leaf=1):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.tree_ = None

    def fit(self, X, r):
        X = np.asarray(X, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        n, p = X.shape
        max_depth = np.inf if self.max_depth is None else int(self.max_depth)
        tree = _FlatTree(None)
        stack = [(np.arange(n, dtype=np.intp), 0, None, None)]
        while stack:
            rows, depth, parent, is_left = stack.pop()
            node = tree.add_node(float(r[rows].mean()), rows.size)
            if parent is not None:
                if is_left:
                    tree.left[parent] = node
                else:
                    tree.right[parent] = node
            if (depth >= max_depth or rows.size < self.min_samples_split
                    or rows.size < 2 * self.min_samples_leaf):
                continue
            split = self._best_split(X, r, rows, p)
            if split is None:
                continue
            feat, thr = split
            go_left = X[rows, feat] <= thr
            tree.make_internal(node, feat, thr, _LEAF, _LEAF)
            stack.append((rows[~go_left], depth + 1, node, False))
            stack.append((rows[go_left], depth + 1, node, True))
        tree.finalize()
        self.tree_ = tree
        return self

    def _best_split(self, X, r, rows, p):
        r_node = r[rows]
        total = r_node.sum()
        parent_score = total * total / rows.size
        best = None
        best_score = parent_score
        for feat in range(p):
            v = X[rows, feat]
            order = np.argsort(v)
            sv = v[order]
            positions = np.flatnonzero(sv[:-1] != sv[1:])
            if positions.size == 0:
                continue
            cum = np.cumsum(r_node[order])
            n_left = positions + 1
            n_right = rows.size - n_left
            ok = (n_left >= self.min_samples_leaf) & (n_right >= self.min_samples_leaf)
            if not ok.any():
                continue
            s_left = cum[positions]
            s_right = total - s_left
            scores = np.full(positions.shape, -np.inf)
            scores[ok] = (s_left[ok] ** 2 / n_left[ok] + s_right[ok] ** 2 / n_right[ok])
            k = int(np.argmax(scores))
            if scores[k] > best_score:
                best_score = scores[k]
                pos = positions[k]
                best = (int(feat), (sv[pos] + sv[pos + 1]) / 2.0)
        return best

    def apply(self, X):
        return self.tree_.apply(np.asarray(X, dtype=np.float64))

    def n_leaves(self):
        return int((self.tree_.feature == _LEAF).sum())

    def set_leaf_values(self, leaf_node_values):
        """leaf_node_values: dict of node index -> value."""
        value = self.tree_.value.copy()
        for node, val in leaf_node_values.items():
            value[node] = val
        self.tree_.value = value

    def predict(self, X):
        return self.tree_.value[self.apply(X)]

    def to_dict(self):
        return {"kind": "regression_tree",
                "params": {"max_depth": self.max_depth,
                           "min_samples_split": self.min_samples_split,
                           "min_samples_leaf": self.min_samples_leaf},
                "root": self.tree_.node_to_dict(0)}

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.tree_ = _FlatTree.from_dict(d["root"], None)
        return model
