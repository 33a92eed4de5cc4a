"""Classifier suite over feature rows: eight models, stratified splits,
and conflict-class evaluation metrics.

Models are trained from scratch on numpy so every run is deterministic for
a fixed seed and all models serialize to JSON:

* DecisionTree      - the CART from the hypotheses module
* RandomForest      - bagged CARTs with per-split feature subsampling
* AdaBoost          - SAMME over depth-1 stumps picked by weighted error
* LogisticRegression- L2 negative log-likelihood, batch gradient descent
* LinearSVM         - hinge + L2 via Pegasos-style stochastic subgradient
* GaussianNB        - per-class per-feature Gaussians with a variance floor
* MLP / DeepNN      - tanh hidden layers, logistic-loss backprop (1 vs >=2
                      hidden layers)

Batch-gradient models use a halve-on-increase step, so their recorded
training loss is non-increasing across epochs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import (
    InsufficientDataError,
    InvalidInputError,
    NonConvergenceError,
    StratificationError,
)
from .features import FeatureRow, to_matrix
from .hypotheses import TreeNode, grow_tree, predict_leaf, tree_from_dict, tree_to_dict

CLASSIFIER_KINDS = (
    "DecisionTree", "RandomForest", "AdaBoost", "LogisticRegression",
    "LinearSVM", "GaussianNB", "MLP", "DeepNN",
)

_DEFAULT_HYPERPARAMS = {
    "DecisionTree": {"max_depth": 4, "min_leaf": 1},
    "RandomForest": {"n_estimators": 30, "max_depth": 12, "min_leaf": 1,
                     "max_features": "sqrt", "bootstrap": True},
    "AdaBoost": {"n_rounds": 50},
    "LogisticRegression": {"l2": 1e-3, "lr": 0.5, "epochs": 400, "tol": 1e-9,
                           "class_weight": None},
    "LinearSVM": {"l2": 1e-3, "epochs": 30, "class_weight": None},
    "GaussianNB": {"var_smoothing": 1e-9},
    "MLP": {"hidden": (32,), "l2": 1e-4, "lr": 0.2, "epochs": 400, "tol": 1e-9,
            "class_weight": None},
    "DeepNN": {"hidden": (64, 64), "l2": 1e-4, "lr": 0.2, "epochs": 400, "tol": 1e-9,
               "class_weight": None},
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def resolved(self) -> dict:
        if self.kind not in CLASSIFIER_KINDS:
            raise InvalidInputError(f"unknown classifier kind {self.kind!r}")
        hp = dict(_DEFAULT_HYPERPARAMS[self.kind])
        for k, v in self.hyperparams.items():
            if k not in hp:
                raise InvalidInputError(f"{self.kind} has no hyperparameter {k!r}")
            hp[k] = v
        return hp


def default_suite(seed: int = 0) -> list[ClassifierSpec]:
    """One spec per kind, default hyperparameters, shared seed."""
    return [ClassifierSpec(kind=k, seed=seed) for k in CLASSIFIER_KINDS]


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    auc: float | None  # None when the labels are single-class


@dataclass(frozen=True)
class EvalRow:
    classifier: str
    precision: float
    recall: float
    f1: float
    auc: float | None


@dataclass(frozen=True)
class EvalReport:
    rows: tuple
    split: str
    seed: int


# ---------------------------------------------------------------------------
# split and metrics


def split(rows: list[FeatureRow], test_fraction: float, seed: int
          ) -> tuple[list[FeatureRow], list[FeatureRow]]:
    """Stratified random split preserving the class ratio within one row."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidInputError("test_fraction must be in (0, 1)")
    labels = np.array([r.label for r in rows])
    if labels.min(initial=1) == labels.max(initial=0):
        raise InsufficientDataError("split needs both classes present")
    rng = np.random.default_rng(seed)
    test_idx: list[int] = []
    train_idx: list[int] = []
    for cls in (0, 1):
        idx = np.nonzero(labels == cls)[0]
        n_test = int(round(test_fraction * len(idx)))
        if n_test == 0 or n_test == len(idx):
            raise StratificationError(
                f"class {cls} has {len(idx)} rows; cannot place it on both sides "
                f"of a {test_fraction:.0%} split")
        perm = rng.permutation(len(idx))
        test_idx.extend(idx[perm[:n_test]])
        train_idx.extend(idx[perm[n_test:]])
    return ([rows[i] for i in sorted(train_idx)], [rows[i] for i in sorted(test_idx)])


def metrics(scores, labels, threshold: float = 0.5) -> Metrics:
    """Precision/recall/F1 for the conflict class at the threshold, plus
    rank-statistic AUC (ties count 0.5). AUC is None for single-class labels."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    pred = scores >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    fp = int(np.sum(pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    n1 = int((labels == 1).sum())
    n0 = len(labels) - n1
    if n1 == 0 or n0 == 0:
        return Metrics(precision, recall, f1, None)
    ranks = rankdata(scores)
    auc = (float(ranks[labels == 1].sum()) - n1 * (n1 + 1) / 2.0) / (n0 * n1)
    return Metrics(precision, recall, f1, auc)


# ---------------------------------------------------------------------------
# models


class TreeModel:
    kind = "DecisionTree"

    def __init__(self, hyperparams: dict, seed: int):
        self.hyperparams = hyperparams
        self.seed = seed
        self.root: TreeNode | None = None
        self.n_features = 0

    def fit(self, X, y):
        self.n_features = X.shape[1]
        self.root = grow_tree(X, y, self.hyperparams["max_depth"],
                              self.hyperparams["min_leaf"])
        return self

    def predict_proba(self, X):
        return np.array([predict_leaf(self.root, x).purity for x in X])

    def state_dict(self):
        return {"tree": tree_to_dict(self.root), "n_features": self.n_features}

    def load_state(self, state):
        self.root = tree_from_dict(state["tree"])
        self.n_features = state["n_features"]


class ForestModel:
    kind = "RandomForest"

    def __init__(self, hyperparams: dict, seed: int):
        self.hyperparams = hyperparams
        self.seed = seed
        self.trees: list[TreeNode] = []
        self.n_features = 0

    def _n_split_features(self, d: int) -> int | None:
        mf = self.hyperparams["max_features"]
        if mf is None:
            return None
        if mf == "sqrt":
            return max(1, int(math.sqrt(d)))
        return int(mf)

    def fit(self, X, y):
        self.n_features = X.shape[1]
        rng = np.random.default_rng(self.seed)
        k = self._n_split_features(X.shape[1])
        self.trees = []
        for _ in range(self.hyperparams["n_estimators"]):
            if self.hyperparams["bootstrap"]:
                idx = rng.integers(0, len(y), size=len(y))
                Xb, yb = X[idx], y[idx]
            else:
                Xb, yb = X, y
            self.trees.append(grow_tree(
                Xb, yb, self.hyperparams["max_depth"], self.hyperparams["min_leaf"],
                rng=rng, max_features=k))
        return self

    def predict_proba(self, X):
        acc = np.zeros(len(X))
        for tree in self.trees:
            acc += np.array([predict_leaf(tree, x).purity for x in X])
        return acc / len(self.trees)

    def state_dict(self):
        return {"trees": [tree_to_dict(t) for t in self.trees],
                "n_features": self.n_features}

    def load_state(self, state):
        self.trees = [tree_from_dict(d) for d in state["trees"]]
        self.n_features = state["n_features"]


class AdaBoostModel:
    kind = "AdaBoost"

    def __init__(self, hyperparams: dict, seed: int):
        self.hyperparams = hyperparams
        self.seed = seed
        self.stumps: list[tuple[int, float, int]] = []
        self.alphas: list[float] = []
        self.n_features = 0

    def fit(self, X, y):
        self.n_features = X.shape[1]
        n = len(y)
        w = np.full(n, 1.0 / n)
        self.stumps, self.alphas = [], []
        for _ in range(self.hyperparams["n_rounds"]):
            stump = _best_stump(X, y, w)
            if stump is None:
                break
            f, thr, pol = stump
            pred = _stump_predict(X, f, thr, pol)
            err = float(w[pred != y].sum())
            if err >= 0.5:
                break
            alpha = math.log((1.0 - err) / max(err, 1e-12))
            self.stumps.append(stump)
            self.alphas.append(alpha)
            if err <= 0.0:
                break
            w = w * np.exp(alpha * (pred != y))
            w /= w.sum()
        if not self.stumps:
            raise NonConvergenceError("no usable stump found", last_loss=None)
        return self

    def predict_proba(self, X):
        vote = np.zeros(len(X))
        total = sum(self.alphas)
        for (f, thr, pol), alpha in zip(self.stumps, self.alphas):
            vote += alpha * _stump_predict(X, f, thr, pol)
        return vote / total

    def state_dict(self):
        return {"stumps": [[f, thr, pol] for f, thr, pol in self.stumps],
                "alphas": list(self.alphas), "n_features": self.n_features}

    def load_state(self, state):
        self.stumps = [(int(f), float(t), int(p)) for f, t, p in state["stumps"]]
        self.alphas = [float(a) for a in state["alphas"]]
        self.n_features = state["n_features"]


def _stump_predict(X, f: int, thr: float, pol: int) -> np.ndarray:
    gt = X[:, f] > thr
    return (gt if pol == 1 else ~gt).astype(int)


def _best_stump(X, y, w) -> tuple[int, float, int] | None:
    """Exhaustive weighted-error stump search over midpoint thresholds.

    Polarity +1 predicts class 1 on value > threshold, -1 on value <=
    threshold. Ties resolve to the lowest feature, lowest threshold,
    polarity +1 first.
    """
    n, d = X.shape
    pos_total = float(w[y == 1].sum())
    best = None  # (err, f, thr, pol_rank)
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        wp = np.cumsum(np.where(y[order] == 1, w[order], 0.0))  # positive mass left
        wn = np.cumsum(np.where(y[order] == 0, w[order], 0.0))  # negative mass left
        neg_total = float(wn[-1])
        for i in np.nonzero(xs[:-1] < xs[1:])[0]:
            thr = float((xs[i] + xs[i + 1]) / 2.0)
            pos_left, neg_left = float(wp[i]), float(wn[i])
            err_gt = pos_left + (neg_total - neg_left)
            err_le = (pos_total - pos_left) + neg_left
            for pol_rank, err in enumerate((err_gt, err_le)):
                # round away cumsum dust so genuinely tied errors fall
                # through to the (feature, threshold, polarity) tie rule
                cand = (round(err, 9), f, thr, pol_rank)
                if best is None or cand < best:
                    best = cand
    if best is None:
        return None
    return (best[1], best[2], 1 if best[3] == 0 else -1)


class LogisticModel:
    kind = "LogisticRegression"

    def __init__(self, hyperparams: dict, seed: int):
        self.hyperparams = hyperparams
        self.seed = seed
        self.w: np.ndarray | None = None  # last entry is the bias
        self.loss_history: list[float] = []

    def fit(self, X, y):
        hp = self.hyperparams
        sw = _sample_weights(y, hp["class_weight"])
        w0 = np.zeros(X.shape[1] + 1)
        self.w, self.loss_history = _batch_gd(
            lambda w: logistic_loss_grad(w, X, y, hp["l2"], sw),
            w0, lr=hp["lr"], epochs=hp["epochs"], tol=hp["tol"])
        return self

    def predict_proba(self, X):
        _check_dim(X, len(self.w) - 1)
        return _sigmoid(X @ self.w[:-1] + self.w[-1])

    def state_dict(self):
        return {"w": self.w.tolist()}

    def load_state(self, state):
        self.w = np.asarray(state["w"], dtype=float)


class SvmModel:
    kind = "LinearSVM"

    def __init__(self, hyperparams: dict, seed: int):
        self.hyperparams = hyperparams
        self.seed = seed
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, X, y):
        hp = self.hyperparams
        lam = hp["l2"]
        sw = _sample_weights(y, hp["class_weight"])
        rng = np.random.default_rng(self.seed)
        ypm = np.where(y == 1, 1.0, -1.0)
        w = np.zeros(X.shape[1])
        b = 0.0
        t = 0
        for _ in range(hp["epochs"]):
            for i in rng.permutation(len(y)):
                t += 1
                eta = 1.0 / (lam * t)
                margin = ypm[i] * (X[i] @ w + b)
                w *= (1.0 - eta * lam)
                if margin < 1.0:
                    w += eta * sw[i] * ypm[i] * X[i]
                    b += eta * sw[i] * ypm[i]
        if not np.isfinite(w).all() or not math.isfinite(b):
            raise NonConvergenceError("SVM weights diverged", last_loss=None)
        self.w, self.b = w, b
        return self

    def predict_proba(self, X):
        """Logistic link over the margin."""
        _check_dim(X, len(self.w))
        return _sigmoid(X @ self.w + self.b)

    def state_dict(self):
        return {"w": self.w.tolist(), "b": self.b}

    def load_state(self, state):
        self.w = np.asarray(state["w"], dtype=float)
        self.b = float(state["b"])


class NaiveBayesModel:
    kind = "GaussianNB"

    def __init__(self, hyperparams: dict, seed: int):
        self.hyperparams = hyperparams
        self.seed = seed
        self.theta = None   # (2, d) class means
        self.var = None     # (2, d) class variances
        self.log_prior = None

    def fit(self, X, y):
        d = X.shape[1]
        theta = np.zeros((2, d))
        var = np.zeros((2, d))
        prior = np.zeros(2)
        for cls in (0, 1):
            Xc = X[y == cls]
            theta[cls] = Xc.mean(axis=0)
            var[cls] = Xc.var(axis=0)
            prior[cls] = len(Xc) / len(X)
        var += self.hyperparams["var_smoothing"] * float(X.var(axis=0).max())
        var = np.maximum(var, 1e-300)
        self.theta, self.var, self.log_prior = theta, var, np.log(prior)
        return self

    def _joint_log_likelihood(self, X):
        jll = np.zeros((len(X), 2))
        for cls in (0, 1):
            log_det = np.sum(np.log(2.0 * np.pi * self.var[cls]))
            sq = ((X - self.theta[cls]) ** 2 / self.var[cls]).sum(axis=1)
            jll[:, cls] = self.log_prior[cls] - 0.5 * (log_det + sq)
        return jll

    def predict_proba(self, X):
        _check_dim(X, self.theta.shape[1])
        jll = self._joint_log_likelihood(X)
        m = jll.max(axis=1, keepdims=True)
        e = np.exp(jll - m)
        return e[:, 1] / e.sum(axis=1)

    def state_dict(self):
        return {"theta": self.theta.tolist(), "var": self.var.tolist(),
                "log_prior": self.log_prior.tolist()}

    def load_state(self, state):
        self.theta = np.asarray(state["theta"], dtype=float)
        self.var = np.asarray(state["var"], dtype=float)
        self.log_prior = np.asarray(state["log_prior"], dtype=float)


class MlpModel:
    """One or more tanh hidden layers with a logistic output unit."""

    kind = "MLP"

    def __init__(self, hyperparams: dict, seed: int, kind: str = "MLP"):
        self.kind = kind
        self.hyperparams = hyperparams
        self.seed = seed
        self.layers: list[tuple[np.ndarray, np.ndarray]] = []  # (W, b) pairs
        self.loss_history: list[float] = []

    def fit(self, X, y):
        hp = self.hyperparams
        sw = _sample_weights(y, hp["class_weight"])
        sizes = [X.shape[1], *hp["hidden"], 1]
        rng = np.random.default_rng(self.seed)
        params = init_mlp_params(sizes, rng)
        flat, shapes = _flatten_params(params)
        flat, self.loss_history = _batch_gd(
            lambda p: mlp_loss_grad(p, shapes, X, y, hp["l2"], sw),
            flat, lr=hp["lr"], epochs=hp["epochs"], tol=hp["tol"])
        self.layers = _unflatten_params(flat, shapes)
        return self

    def predict_proba(self, X):
        _check_dim(X, self.layers[0][0].shape[0])
        return _sigmoid(_mlp_logits(self.layers, X))

    def state_dict(self):
        return {"layers": [[W.tolist(), b.tolist()] for W, b in self.layers]}

    def load_state(self, state):
        self.layers = [(np.asarray(W, dtype=float), np.asarray(b, dtype=float))
                       for W, b in state["layers"]]


# ---------------------------------------------------------------------------
# shared numerical pieces


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_dim(X, expected: int):
    if X.shape[1] != expected:
        raise InvalidInputError(f"model expects {expected} features, got {X.shape[1]}")


def _sample_weights(y, class_weight) -> np.ndarray:
    """Uniform mean-1 weights, or inverse-frequency when 'balanced'."""
    n = len(y)
    if class_weight is None:
        return np.ones(n)
    if class_weight != "balanced":
        raise InvalidInputError(f"unknown class_weight {class_weight!r}")
    n1 = int(np.sum(y == 1))
    w = np.where(y == 1, n / (2.0 * n1), n / (2.0 * (n - n1)))
    return w


def logistic_loss_grad(w, X, y, l2: float, sample_weight=None):
    """Mean weighted cross-entropy + (l2/2)||w||^2 (bias unregularized).

    w's last entry is the bias. Returns (loss, grad).
    """
    n = len(y)
    sw = np.ones(n) if sample_weight is None else sample_weight
    z = X @ w[:-1] + w[-1]
    # log(1 + e^z) - y z, computed stably
    loss = float(np.mean(sw * (np.logaddexp(0.0, z) - y * z)))
    loss += 0.5 * l2 * float(w[:-1] @ w[:-1])
    resid = sw * (_sigmoid(z) - y) / n
    grad = np.empty_like(w)
    grad[:-1] = X.T @ resid + l2 * w[:-1]
    grad[-1] = resid.sum()
    return loss, grad


def init_mlp_params(sizes: list[int], rng: np.random.Generator):
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        params.append((rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(fan_in, fan_out)),
                       np.zeros(fan_out)))
    return params


def _flatten_params(params):
    shapes = [(W.shape, b.shape) for W, b in params]
    flat = np.concatenate([np.concatenate([W.ravel(), b]) for W, b in params])
    return flat, shapes


def _unflatten_params(flat, shapes):
    params = []
    k = 0
    for (ws, bs) in shapes:
        nw = ws[0] * ws[1]
        W = flat[k:k + nw].reshape(ws)
        k += nw
        b = flat[k:k + bs[0]]
        k += bs[0]
        params.append((W.copy(), b.copy()))
    return params


def _mlp_logits(layers, X):
    h = X
    for W, b in layers[:-1]:
        h = np.tanh(h @ W + b)
    W, b = layers[-1]
    return (h @ W + b).ravel()


def mlp_loss_grad(flat, shapes, X, y, l2: float, sample_weight=None):
    """Loss and flattened gradient of the tanh MLP with logistic output."""
    n = len(y)
    sw = np.ones(n) if sample_weight is None else sample_weight
    layers = _unflatten_params(flat, shapes)
    acts = [X]
    h = X
    for W, b in layers[:-1]:
        h = np.tanh(h @ W + b)
        acts.append(h)
    Wo, bo = layers[-1]
    z = (h @ Wo + bo).ravel()
    loss = float(np.mean(sw * (np.logaddexp(0.0, z) - y * z)))
    loss += 0.5 * l2 * sum(float((W * W).sum()) for W, _ in layers)

    grads = [None] * len(layers)
    delta = (sw * (_sigmoid(z) - y) / n)[:, None]  # (n, 1)
    grads[-1] = (acts[-1].T @ delta + l2 * Wo, delta.sum(axis=0))
    back = delta @ Wo.T
    for li in range(len(layers) - 2, -1, -1):
        W, b = layers[li]
        d = back * (1.0 - acts[li + 1] ** 2)
        grads[li] = (acts[li].T @ d + l2 * W, d.sum(axis=0))
        back = d @ W.T
    flat_grad = np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])
    return loss, flat_grad


def _batch_gd(loss_grad, x0, lr: float, epochs: int, tol: float):
    """Gradient descent with halve-on-increase steps: accepted loss never
    increases. Raises NonConvergenceError on a non-finite loss."""
    x = x0
    loss, grad = loss_grad(x)
    if not math.isfinite(loss):
        raise NonConvergenceError("initial loss is not finite", last_loss=loss)
    history = [loss]
    for _ in range(epochs):
        step = lr
        for _ in range(60):
            trial = x - step * grad
            t_loss, t_grad = loss_grad(trial)
            if math.isfinite(t_loss) and t_loss <= loss:
                break
            step *= 0.5
        else:
            history.append(loss)
            break
        improved = loss - t_loss
        x, loss, grad = trial, t_loss, t_grad
        lr = min(step * 1.25, 10.0)
        history.append(loss)
        if improved < tol:
            break
    if not math.isfinite(loss):
        raise NonConvergenceError("training diverged", last_loss=loss)
    return x, history


# ---------------------------------------------------------------------------
# training façade


_MODEL_CLASSES = {
    "DecisionTree": TreeModel,
    "RandomForest": ForestModel,
    "AdaBoost": AdaBoostModel,
    "LogisticRegression": LogisticModel,
    "LinearSVM": SvmModel,
    "GaussianNB": NaiveBayesModel,
}


def _new_model(spec: ClassifierSpec):
    hp = spec.resolved()
    if spec.kind in ("MLP", "DeepNN"):
        return MlpModel(hp, spec.seed, kind=spec.kind)
    return _MODEL_CLASSES[spec.kind](hp, spec.seed)


def train(spec: ClassifierSpec, rows: list[FeatureRow]):
    """Fit one classifier on feature rows; both classes must be present."""
    if not rows:
        raise InsufficientDataError("cannot train on an empty dataset")
    X, y = to_matrix(rows)
    if not np.isfinite(X).all():
        raise InvalidInputError("non-finite feature values")
    if y.min(initial=1) == y.max(initial=0):
        raise InsufficientDataError("training needs both classes present")
    return _new_model(spec).fit(X, y)


def predict_proba(model, rows: list[FeatureRow]) -> np.ndarray:
    """Conflict-class score per row, in [0, 1]."""
    X, _ = to_matrix(rows)
    return model.predict_proba(X)


def save_model(model, spec: ClassifierSpec, path) -> None:
    doc = {"kind": spec.kind, "hyperparams": _jsonable(spec.resolved()),
           "seed": spec.seed, "state": model.state_dict()}
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    spec = ClassifierSpec(kind=doc["kind"],
                          hyperparams=_tupled(doc["kind"], doc["hyperparams"]),
                          seed=doc["seed"])
    model = _new_model(spec)
    model.load_state(doc["state"])
    return model, spec


def _jsonable(hp: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in hp.items()}


def _tupled(kind: str, hp: dict) -> dict:
    out = dict(hp)
    if "hidden" in out:
        out["hidden"] = tuple(out["hidden"])
    return out


# ---------------------------------------------------------------------------
# suite runner


def run_suite(rows: list[FeatureRow], specs: list[ClassifierSpec],
              test_fraction: float = 0.2, seed: int = 0) -> EvalReport:
    """Train every spec on one stratified split and score the test side."""
    train_rows, test_rows = split(rows, test_fraction, seed)
    y_test = np.array([r.label for r in test_rows])
    out = []
    for spec in specs:
        model = train(spec, train_rows)
        m = metrics(predict_proba(model, test_rows), y_test)
        out.append(EvalRow(classifier=spec.kind, precision=m.precision,
                           recall=m.recall, f1=m.f1, auc=m.auc))
    desc = f"stratified {1 - test_fraction:.0%}/{test_fraction:.0%} split"
    return EvalReport(rows=tuple(out), split=desc, seed=seed)


def best_row(report: EvalReport) -> EvalRow:
    """Highest F1; ties broken by AUC."""
    return max(report.rows,
               key=lambda r: (r.f1, r.auc if r.auc is not None else -1.0))


def write_suite_csv(report: EvalReport, path) -> None:
    import csv

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Classifier", "Precision", "Recall", "F1-Score", "AUC"])
        for r in report.rows:
            w.writerow([r.classifier, repr(r.precision), repr(r.recall), repr(r.f1),
                        "NA" if r.auc is None else repr(r.auc)])
