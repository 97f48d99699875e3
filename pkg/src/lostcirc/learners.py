"""The six base classifiers behind one fit/predict/predict_proba contract.

All learners consume an already-transformed feature matrix and integer class
indices; none rescales internally. predict is always the argmax of
predict_proba, with ties going to the lowest class index. Refitting with the
same data, parameters, and seed reproduces bit-identical models.
"""

import numpy as np

from .tree import DecisionTreeClassifier  # noqa: F401  (part of the learner roster)
from .util import child_seed


def softmax(scores):
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _as_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    return X.reshape(X.shape[0], -1) if X.ndim == 1 else X


class GaussianNB:
    """Per-class Gaussian densities with a shared variance floor."""

    supports_sample_weight = False

    def __init__(self, var_floor_ratio=1e-9, seed=None):
        self.var_floor_ratio = var_floor_ratio
        self.seed = seed

    def get_params(self):
        return {"var_floor_ratio": self.var_floor_ratio, "seed": self.seed}

    def fit(self, X, y, n_classes=None, sample_weight=None):
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.intp)
        n, p = X.shape
        K = int(n_classes) if n_classes is not None else int(y.max()) + 1
        counts = np.bincount(y, minlength=K).astype(np.float64)
        if not counts.any():
            raise ValueError("no training samples")
        floor = self.var_floor_ratio * max(float(X.var(axis=0).max()), np.finfo(float).tiny)
        means = np.zeros((K, p))
        variances = np.ones((K, p))
        for c in range(K):
            rows = y == c
            if not rows.any():
                continue
            means[c] = X[rows].mean(axis=0)
            variances[c] = np.maximum(X[rows].var(axis=0), floor)
        self.means_ = means
        self.variances_ = variances
        with np.errstate(divide="ignore"):
            self.log_prior_ = np.log(counts / n)
        return self

    def _log_joint(self, X):
        X = _as_matrix(X)
        out = np.empty((X.shape[0], self.means_.shape[0]))
        for c in range(self.means_.shape[0]):
            diff = X - self.means_[c]
            out[:, c] = self.log_prior_[c] - 0.5 * (
                np.log(2.0 * np.pi * self.variances_[c]) + diff ** 2 / self.variances_[c]
            ).sum(axis=1)
        return out

    def predict_proba(self, X):
        return softmax(self._log_joint(X))

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"kind": "gnb", "params": self.get_params(),
                "means": self.means_.tolist(), "variances": self.variances_.tolist(),
                "log_prior": self.log_prior_.tolist()}

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.means_ = np.asarray(d["means"])
        model.variances_ = np.asarray(d["variances"])
        model.log_prior_ = np.asarray(d["log_prior"])
        return model


class LinearDiscriminant:
    """LDA with a pooled within-class covariance plus a small ridge term."""

    supports_sample_weight = False

    def __init__(self, ridge=1e-6, seed=None):
        self.ridge = ridge
        self.seed = seed

    def get_params(self):
        return {"ridge": self.ridge, "seed": self.seed}

    def fit(self, X, y, n_classes=None, sample_weight=None):
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.intp)
        n, p = X.shape
        K = int(n_classes) if n_classes is not None else int(y.max()) + 1
        counts = np.bincount(y, minlength=K).astype(np.float64)
        present = int((counts > 0).sum())
        if n - present < 1:
            raise ValueError("too few samples to estimate the pooled covariance")
        means = np.zeros((K, p))
        scatter = np.zeros((p, p))
        for c in range(K):
            rows = y == c
            if not rows.any():
                continue
            means[c] = X[rows].mean(axis=0)
            diff = X[rows] - means[c]
            scatter += diff.T @ diff
        cov = scatter / (n - present) + self.ridge * np.eye(p)
        self.means_ = means
        self.coef_ = np.linalg.solve(cov, means.T).T          # K x p
        self.intercept_ = -0.5 * (self.coef_ * means).sum(axis=1)
        with np.errstate(divide="ignore"):
            self.intercept_ += np.log(counts / n)
        return self

    def decision_function(self, X):
        return _as_matrix(X) @ self.coef_.T + self.intercept_

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"kind": "lda", "params": self.get_params(), "coef": self.coef_.tolist(),
                "intercept": self.intercept_.tolist(), "means": self.means_.tolist()}

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.coef_ = np.asarray(d["coef"])
        model.intercept_ = np.asarray(d["intercept"])
        model.means_ = np.asarray(d["means"])
        return model


def softmax_ce_value_and_grad(W, b, X, Y, l2=1.0):
    """Mean cross-entropy of a multinomial softmax model plus an L2 penalty
    l2/(2n)*||W||^2 (bias unpenalized), with its exact gradient."""
    n = X.shape[0]
    P = softmax(X @ W + b)
    eps = np.finfo(float).tiny
    loss = -(Y * np.log(np.maximum(P, eps))).sum() / n + 0.5 * l2 * (W ** 2).sum() / n
    G = (P - Y) / n
    grad_w = X.T @ G + l2 * W / n
    grad_b = G.sum(axis=0)
    return loss, grad_w, grad_b


class LogisticRegression:
    """Multinomial softmax regression trained by full-batch gradient descent
    with backtracking line search. `converged` records whether the gradient
    tolerance was reached within max_iter."""

    supports_sample_weight = False

    def __init__(self, l2=1.0, max_iter=1000, tol=1e-6, seed=None):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed
        self.converged = False

    def get_params(self):
        return {"l2": self.l2, "max_iter": self.max_iter, "tol": self.tol, "seed": self.seed}

    def fit(self, X, y, n_classes=None, sample_weight=None):
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.intp)
        n, p = X.shape
        K = int(n_classes) if n_classes is not None else int(y.max()) + 1
        Y = np.zeros((n, K))
        Y[np.arange(n), y] = 1.0
        W = np.zeros((p, K))
        b = np.zeros(K)
        step = 1.0
        loss, gw, gb = softmax_ce_value_and_grad(W, b, X, Y, self.l2)
        self.converged = False
        for _ in range(self.max_iter):
            gnorm = max(np.abs(gw).max() if gw.size else 0.0, np.abs(gb).max())
            if gnorm <= self.tol:
                self.converged = True
                break
            gsq = (gw ** 2).sum() + (gb ** 2).sum()
            while True:
                W_new = W - step * gw
                b_new = b - step * gb
                loss_new, gw_new, gb_new = softmax_ce_value_and_grad(W_new, b_new, X, Y, self.l2)
                if loss_new <= loss - 1e-4 * step * gsq or step < 1e-12:
                    break
                step *= 0.5
            W, b, loss, gw, gb = W_new, b_new, loss_new, gw_new, gb_new
            step = min(step * 2.0, 1e6)
        self.coef_ = W
        self.intercept_ = b
        return self

    def predict_proba(self, X):
        return softmax(_as_matrix(X) @ self.coef_ + self.intercept_)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"kind": "logreg", "params": self.get_params(), "coef": self.coef_.tolist(),
                "intercept": self.intercept_.tolist(), "converged": self.converged}

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.coef_ = np.asarray(d["coef"])
        model.intercept_ = np.asarray(d["intercept"])
        model.converged = d["converged"]
        return model


def rbf_kernel(A, B, gamma):
    sq = (A ** 2).sum(axis=1)[:, None] + (B ** 2).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class KernelSVM:
    """One-vs-rest soft-margin SVM with an RBF kernel, trained by mini-batch
    kernelized Pegasos subgradient descent on the averaged hinge objective
    lam/2*||w||^2 + mean hinge, lam = 1/C.

    An approximate solver: adequate as a comparison baseline. The averaged
    objective makes predictions invariant to duplicating the training set.
    predict_proba is a softmax over margins and is not calibrated.
    """

    supports_sample_weight = False
    calibrated_proba = False

    def __init__(self, C=1.0, gamma="scale", epochs=5, batch_size=256, seed=None):
        if C <= 0:
            raise ValueError("C must be positive")
        self.C = C
        self.gamma = gamma
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def get_params(self):
        return {"C": self.C, "gamma": self.gamma, "epochs": self.epochs,
                "batch_size": self.batch_size, "seed": self.seed}

    def _resolve_gamma(self, X):
        if self.gamma == "scale":
            var = float(X.var())
            return 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        return float(self.gamma)

    def fit(self, X, y, n_classes=None, sample_weight=None):
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.intp)
        n = X.shape[0]
        K = int(n_classes) if n_classes is not None else int(y.max()) + 1
        if np.unique(y).size < 2:
            raise ValueError("SVM needs at least 2 classes in the training data")
        gamma = self._resolve_gamma(X)
        lam = 1.0 / self.C
        B = min(self.batch_size, n)
        steps = self.epochs * max(1, -(-n // B))
        sqnorm = (X ** 2).sum(axis=1)
        coefs = np.zeros((K, n))
        for c in range(K):
            y_bin = np.where(y == c, 1.0, -1.0)
            rng = np.random.default_rng(child_seed(self.seed or 0, "ovr", c))
            hits = np.zeros(n)
            active = np.zeros(n, dtype=bool)
            for t in range(1, steps + 1):
                batch = rng.integers(0, n, size=B)
                if t == 1 or not active.any():
                    f = np.zeros(B)
                else:
                    idx = np.flatnonzero(active)
                    kb = np.exp(-gamma * np.maximum(
                        sqnorm[batch][:, None] + sqnorm[idx][None, :]
                        - 2.0 * (X[batch] @ X[idx].T), 0.0))
                    f = (kb @ (hits[idx] * y_bin[idx])) / (lam * (t - 1) * B)
                viol = batch[y_bin[batch] * f < 1.0]
                np.add.at(hits, viol, 1.0)
                active[viol] = True
            coefs[c] = hits * y_bin / (lam * steps * B)
        support = np.flatnonzero((coefs != 0).any(axis=0))
        self.gamma_ = gamma
        self.support_vectors_ = X[support].copy()
        self.dual_coef_ = coefs[:, support]
        return self

    def decision_function(self, X):
        Km = rbf_kernel(_as_matrix(X), self.support_vectors_, self.gamma_)
        return Km @ self.dual_coef_.T

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"kind": "svm", "params": self.get_params(), "gamma_": self.gamma_,
                "support_vectors": self.support_vectors_.tolist(),
                "dual_coef": self.dual_coef_.tolist()}

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.gamma_ = d["gamma_"]
        model.support_vectors_ = np.asarray(d["support_vectors"])
        model.dual_coef_ = np.asarray(d["dual_coef"])
        return model


class KNeighborsClassifier:
    """Majority vote among the k nearest training points (Euclidean).

    Distance ties are broken by training-row order, vote ties by the lowest
    class index.
    """

    supports_sample_weight = False

    def __init__(self, k=5, seed=None):
        self.k = k
        self.seed = seed

    def get_params(self):
        return {"k": self.k, "seed": self.seed}

    def fit(self, X, y, n_classes=None, sample_weight=None):
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.intp)
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.k > X.shape[0]:
            raise ValueError(f"k={self.k} exceeds the {X.shape[0]} training rows")
        self.X_ = X.copy()
        self.y_ = y.copy()
        self.n_classes_ = int(n_classes) if n_classes is not None else int(y.max()) + 1
        self._sqnorm = (self.X_ ** 2).sum(axis=1)
        return self

    def _neighbors(self, Xq):
        n = self.X_.shape[0]
        k = self.k
        d = np.maximum((Xq ** 2).sum(axis=1)[:, None] + self._sqnorm[None, :]
                       - 2.0 * (Xq @ self.X_.T), 0.0)
        if k >= n:
            return np.tile(np.arange(n), (Xq.shape[0], 1))
        part = np.argpartition(d, k - 1, axis=1)[:, :k]
        rows = np.arange(Xq.shape[0])[:, None]
        kth = d[rows, part].max(axis=1)
        # Exact tie handling at the k-th distance: re-rank by (distance, index).
        ambiguous = np.flatnonzero((d <= kth[:, None]).sum(axis=1) > k)
        out = np.sort(part, axis=1)
        for i in ambiguous:
            order = np.lexsort((np.arange(n), d[i]))
            out[i] = np.sort(order[:k])
        return out

    def predict_proba(self, X):
        Xq = _as_matrix(X)
        out = np.empty((Xq.shape[0], self.n_classes_))
        chunk = max(1, int(4e6 / max(1, self.X_.shape[0])))
        for start in range(0, Xq.shape[0], chunk):
            nbrs = self._neighbors(Xq[start:start + chunk])
            votes = np.apply_along_axis(np.bincount, 1, self.y_[nbrs],
                                        minlength=self.n_classes_)
            out[start:start + nbrs.shape[0]] = votes / self.k if self.k < self.X_.shape[0] \
                else votes / self.X_.shape[0]
        return out

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"kind": "knn", "params": self.get_params(), "X": self.X_.tolist(),
                "y": self.y_.tolist(), "n_classes": self.n_classes_}

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.X_ = np.asarray(d["X"], dtype=np.float64)
        model.y_ = np.asarray(d["y"], dtype=np.intp)
        model.n_classes_ = d["n_classes"]
        model._sqnorm = (model.X_ ** 2).sum(axis=1)
        return model
