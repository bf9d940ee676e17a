"""Four regressor families behind one fit/predict contract.

* linear     — ridge regression via normal equations (intercept unpenalized)
* svr_linear — linear epsilon-insensitive regression by subgradient descent
* mlp        — one hidden tanh layer trained with full-batch gradient descent
* gbdt       — histogram gradient-boosted regression trees (variance gain,
               equal-frequency bins, deterministic tie-breaking)

Every fit is deterministic given (X, y, hyperparameters, seed), and a saved
artifact reloads to bit-identical predictions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError

FAMILIES = ("linear", "svr_linear", "mlp", "gbdt")

DEFAULT_HYPERPARAMS = {
    "linear": {"ridge_lambda": 1e-6},
    "svr_linear": {"epsilon": 1.0, "c": 1.0, "epochs": 200, "learning_rate": 0.5},
    "mlp": {"hidden": 32, "learning_rate": 0.01, "epochs": 500},
    "gbdt": {"n_trees": 200, "max_depth": 6, "learning_rate": 0.1, "min_leaf": 20, "n_bins": 64},
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}")
        unknown = set(self.params) - set(DEFAULT_HYPERPARAMS[self.family])
        if unknown:
            raise ConfigError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")

    def resolved(self) -> dict:
        out = dict(DEFAULT_HYPERPARAMS[self.family])
        out.update(self.params)
        return out


def default_specs(seed: int = 0) -> list[ModelSpec]:
    return [ModelSpec(family=f, seed=seed) for f in FAMILIES]


@dataclass
class ModelArtifact:
    family: str
    columns: list[str]
    params: dict
    meta: dict = field(default_factory=dict)
    _compiled: Optional[list] = field(default=None, repr=False, compare=False)


def _as_matrix(X, columns) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ConfigError("X must be a 2-D matrix")
    if X.shape[1] != len(columns):
        raise ConfigError(
            f"X has {X.shape[1]} columns but {len(columns)} column names were given"
        )
    return X


def _check_training_inputs(X, y, columns):
    X = _as_matrix(X, columns)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ConfigError("y must be a vector with one entry per row of X")
    if X.size and not np.isfinite(X).all():
        raise ConfigError("X contains missing or non-finite values")
    if y.size and not np.isfinite(y).all():
        raise ConfigError("y contains missing or non-finite values")
    return X, y


def _rmse(y, f) -> float:
    return float(np.sqrt(np.mean((y - f) ** 2)))


# --- linear (ridge) ---


def fit_linear(X, y, columns: Sequence[str], ridge_lambda: float = 1e-6, seed: int = 0) -> ModelArtifact:
    """Minimize ||y - Xw - b||^2 + lambda ||w||^2 by normal equations."""
    if ridge_lambda < 0:
        raise ConfigError("ridge_lambda must be >= 0")
    X, y = _check_training_inputs(X, y, columns)
    n, p = X.shape
    if n < 2:
        raise ConfigError("fit_linear needs at least 2 rows")
    A = np.hstack([X, np.ones((n, 1))])
    if ridge_lambda == 0.0 and np.linalg.matrix_rank(A) < p + 1:
        raise ConfigError(
            "singular system with ridge_lambda = 0; set ridge_lambda > 0"
        )
    reg = np.diag([ridge_lambda] * p + [0.0])
    theta = np.linalg.solve(A.T @ A + reg, A.T @ y)
    w, b = theta[:p], float(theta[p])
    artifact = ModelArtifact(
        family="linear",
        columns=list(columns),
        params={"weights": w.tolist(), "intercept": b},
        meta={"n_rows": n, "seed": seed, "hyperparams": {"ridge_lambda": ridge_lambda}},
    )
    artifact.meta["train_rmse"] = _rmse(y, _predict_aligned(artifact, X))
    return artifact


# --- linear epsilon-SVR ---


def fit_svr_linear(
    X,
    y,
    columns: Sequence[str],
    epsilon: float = 1.0,
    c: float = 1.0,
    epochs: int = 200,
    learning_rate: float = 0.5,
    seed: int = 0,
) -> ModelArtifact:
    """Subgradient descent on the epsilon-insensitive objective

        sum_i max(0, |y_i - f(x_i)| - epsilon) + ||w||^2 / (2c)

    scaled per sample, so larger c weakens the regularizer exactly as in the
    usual SVR parameterization. Features are standardized internally and the
    intercept starts at mean(y) so the bounded subgradient steps only have to
    fit the residual structure. The quadratic term uses its proximal
    (shrinkage) update, which is stable for any step size; the loss term
    takes plain subgradient steps with a 1/sqrt(t) decay over a fixed epoch
    count, so the fit is fully deterministic.
    """
    if epsilon < 0:
        raise ConfigError("epsilon must be >= 0")
    if c <= 0:
        raise ConfigError("c must be > 0")
    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    X, y = _check_training_inputs(X, y, columns)
    n, p = X.shape
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    Z = (X - mean) / scale

    w = np.zeros(p)
    b = float(y.mean())
    for t in range(epochs):
        r = y - (Z @ w + b)
        active = np.abs(r) > epsilon
        sign = np.sign(r) * active
        g_w = -(sign @ Z) / n
        g_b = -float(sign.mean())
        step = learning_rate / math.sqrt(t + 1.0)
        w = (w - step * g_w) / (1.0 + step / (c * n))
        b = b - step * g_b

    artifact = ModelArtifact(
        family="svr_linear",
        columns=list(columns),
        params={
            "weights": w.tolist(),
            "intercept": float(b),
            "x_mean": mean.tolist(),
            "x_scale": scale.tolist(),
        },
        meta={
            "n_rows": n,
            "seed": seed,
            "hyperparams": {
                "epsilon": epsilon,
                "c": c,
                "epochs": epochs,
                "learning_rate": learning_rate,
            },
        },
    )
    artifact.meta["train_rmse"] = _rmse(y, _predict_aligned(artifact, X))
    return artifact


# --- single-hidden-layer perceptron ---


def _mlp_unpack(theta: np.ndarray, p: int, hidden: int):
    i = 0
    w1 = theta[i : i + hidden * p].reshape(hidden, p)
    i += hidden * p
    b1 = theta[i : i + hidden]
    i += hidden
    w2 = theta[i : i + hidden]
    i += hidden
    b2 = theta[i]
    return w1, b1, w2, b2


def mlp_forward(theta: np.ndarray, Z: np.ndarray, hidden: int) -> np.ndarray:
    """Standardized-space forward pass: tanh hidden layer, linear output."""
    w1, b1, w2, b2 = _mlp_unpack(theta, Z.shape[1], hidden)
    return np.tanh(Z @ w1.T + b1) @ w2 + b2


def mlp_loss_and_grad(theta: np.ndarray, Z: np.ndarray, ys: np.ndarray, hidden: int):
    """Squared loss L = sum((f - y)^2) / (2n) and its exact gradient."""
    n, p = Z.shape
    w1, b1, w2, b2 = _mlp_unpack(theta, p, hidden)
    A = np.tanh(Z @ w1.T + b1)
    f = A @ w2 + b2
    r = (f - ys) / n
    loss = 0.5 * float(np.sum((f - ys) ** 2)) / n
    g_w2 = A.T @ r
    g_b2 = float(r.sum())
    dA = np.outer(r, w2)
    dZpre = dA * (1.0 - A * A)
    g_w1 = dZpre.T @ Z
    g_b1 = dZpre.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])
    return loss, grad


def fit_mlp(
    X,
    y,
    columns: Sequence[str],
    hidden: int = 32,
    learning_rate: float = 0.01,
    epochs: int = 500,
    seed: int = 0,
) -> ModelArtifact:
    """Full-batch gradient descent; inputs and target are standardized
    internally and weights start from a seeded uniform init in [-0.5, 0.5]."""
    if hidden < 1:
        raise ConfigError("hidden must be >= 1")
    if learning_rate <= 0:
        raise ConfigError("learning_rate must be > 0")
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")
    X, y = _check_training_inputs(X, y, columns)
    n, p = X.shape
    x_mean = X.mean(axis=0)
    x_scale = np.where(X.std(axis=0) == 0.0, 1.0, X.std(axis=0))
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    Z = (X - x_mean) / x_scale
    ys = (y - y_mean) / y_scale

    rng = np.random.default_rng(seed)
    theta = rng.uniform(-0.5, 0.5, size=hidden * p + hidden + hidden + 1)
    for _ in range(epochs):
        _, grad = mlp_loss_and_grad(theta, Z, ys, hidden)
        theta = theta - learning_rate * grad

    w1, b1, w2, b2 = _mlp_unpack(theta, p, hidden)
    artifact = ModelArtifact(
        family="mlp",
        columns=list(columns),
        params={
            "w1": w1.tolist(),
            "b1": b1.tolist(),
            "w2": w2.tolist(),
            "b2": float(b2),
            "x_mean": x_mean.tolist(),
            "x_scale": x_scale.tolist(),
            "y_mean": y_mean,
            "y_scale": y_scale,
        },
        meta={
            "n_rows": n,
            "seed": seed,
            "hyperparams": {"hidden": hidden, "learning_rate": learning_rate, "epochs": epochs},
        },
    )
    artifact.meta["train_rmse"] = _rmse(y, _predict_aligned(artifact, X))
    return artifact


# --- histogram GBDT ---


def _equal_frequency_edges(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin edges at equal-frequency cuts, placed midway between neighbouring
    order statistics so no edge coincides with a data value (unless tied)."""
    xs = np.sort(values)
    n = xs.shape[0]
    edges = []
    for j in range(1, n_bins):
        idx = (j * n) // n_bins
        if idx < 1 or idx > n - 1:
            continue
        lo, hi = xs[idx - 1], xs[idx]
        if lo < hi:
            edges.append(0.5 * (lo + hi))
    return np.unique(np.asarray(edges, dtype=float))


def _grow_tree(
    bins: np.ndarray,
    residual: np.ndarray,
    edges: list[np.ndarray],
    indices: np.ndarray,
    max_depth: int,
    min_leaf: int,
    n_bins: int,
    shrinkage: float,
) -> list[list]:
    """Depth-first greedy growth; returns nodes as
    [feature, threshold, left, right, value] with feature = -1 for leaves."""
    p = bins.shape[1]
    n_edges = np.asarray([e.shape[0] for e in edges])
    boundary_valid = np.arange(n_bins - 1)[None, :] < n_edges[:, None]  # (p, n_bins-1)
    nodes: list[list] = []

    def leaf(idx: np.ndarray) -> int:
        nodes.append([-1, 0.0, -1, -1, shrinkage * float(residual[idx].mean())])
        return len(nodes) - 1

    def build(idx: np.ndarray, depth: int) -> int:
        m = idx.shape[0]
        if depth >= max_depth or m < 2 * min_leaf:
            return leaf(idx)
        rsub = residual[idx]
        total = float(rsub.sum())
        sub = bins[idx]
        flat = (sub + np.arange(p, dtype=sub.dtype) * n_bins).ravel()
        counts = np.bincount(flat, minlength=p * n_bins).reshape(p, n_bins)
        sums = np.bincount(
            flat, weights=np.repeat(rsub, p), minlength=p * n_bins
        ).reshape(p, n_bins)
        n_l = counts.cumsum(axis=1)[:, : n_bins - 1]
        s_l = sums.cumsum(axis=1)[:, : n_bins - 1]
        n_r = m - n_l
        s_r = total - s_l
        valid = boundary_valid & (n_l >= min_leaf) & (n_r >= min_leaf)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = s_l**2 / n_l + s_r**2 / n_r - total**2 / m
        gain = np.where(valid, gain, -np.inf)
        best = int(np.argmax(gain))  # first max: lowest feature, then lowest boundary
        f, b = divmod(best, n_bins - 1)
        if not np.isfinite(gain[f, b]) or gain[f, b] <= 0.0:
            return leaf(idx)
        node_id = len(nodes)
        nodes.append([int(f), float(edges[f][b]), -1, -1, 0.0])
        go_left = sub[:, f] <= b
        nodes[node_id][2] = build(idx[go_left], depth + 1)
        nodes[node_id][3] = build(idx[~go_left], depth + 1)
        return node_id

    build(np.arange(bins.shape[0]), 0)
    return nodes


def fit_gbdt(
    X,
    y,
    columns: Sequence[str],
    n_trees: int = 200,
    max_depth: int = 6,
    learning_rate: float = 0.1,
    min_leaf: int = 20,
    n_bins: int = 64,
    seed: int = 0,
) -> ModelArtifact:
    """Gradient boosting on squared loss: stage 0 is mean(y); each round fits
    a depth-limited tree to the residuals over histogram bins and is shrunk
    by the learning rate. Gain ties break to the lowest feature index, then
    the lowest bin boundary."""
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    if max_depth < 1:
        raise ConfigError("max_depth must be >= 1")
    if min_leaf < 1:
        raise ConfigError("min_leaf must be >= 1")
    if n_bins < 2:
        raise ConfigError("n_bins must be >= 2")
    if learning_rate < 0:
        raise ConfigError("learning_rate must be >= 0")
    X, y = _check_training_inputs(X, y, columns)
    n, p = X.shape
    if n < min_leaf:
        raise ConfigError("fewer rows than min_leaf")

    edges = [_equal_frequency_edges(X[:, f], n_bins) for f in range(p)]
    bins = np.empty((n, p), dtype=np.int64)
    for f in range(p):
        bins[:, f] = np.searchsorted(edges[f], X[:, f], side="right")

    base = float(y.mean())
    pred = np.full(n, base)
    trees = []
    rmse_per_round = []
    for _ in range(n_trees):
        residual = y - pred
        nodes = _grow_tree(bins, residual, edges, np.arange(n), max_depth, min_leaf, n_bins, learning_rate)
        trees.append(nodes)
        pred = pred + _tree_predict_nodes(_compile_tree(nodes), X)
        rmse_per_round.append(_rmse(y, pred))

    artifact = ModelArtifact(
        family="gbdt",
        columns=list(columns),
        params={"base": base, "trees": trees},
        meta={
            "n_rows": n,
            "seed": seed,
            "hyperparams": {
                "n_trees": n_trees,
                "max_depth": max_depth,
                "learning_rate": learning_rate,
                "min_leaf": min_leaf,
                "n_bins": n_bins,
            },
            "train_rmse_per_round": rmse_per_round,
        },
    )
    artifact.meta["train_rmse"] = rmse_per_round[-1]
    return artifact


def _compile_tree(nodes: list[list]):
    arr = np.asarray(nodes, dtype=float)
    return (
        arr[:, 0].astype(np.int64),
        arr[:, 1],
        arr[:, 2].astype(np.int64),
        arr[:, 3].astype(np.int64),
        arr[:, 4],
    )


def _tree_predict_nodes(compiled, X: np.ndarray) -> np.ndarray:
    feature, threshold, left, right, value = compiled
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    while True:
        feat = feature[node]
        live = feat >= 0
        if not live.any():
            break
        f_safe = np.where(live, feat, 0)
        go_left = X[np.arange(n), f_safe] < threshold[node]
        nxt = np.where(go_left, left[node], right[node])
        node = np.where(live, nxt, node)
    return value[node]


# --- shared predict / (de)serialization ---


def _predict_aligned(artifact: ModelArtifact, X: np.ndarray) -> np.ndarray:
    """Predict on a matrix whose columns already match artifact.columns."""
    n = X.shape[0]
    if n == 0:
        return np.zeros(0)
    params = artifact.params
    if artifact.family == "linear":
        return X @ np.asarray(params["weights"]) + params["intercept"]
    if artifact.family == "svr_linear":
        Z = (X - np.asarray(params["x_mean"])) / np.asarray(params["x_scale"])
        return Z @ np.asarray(params["weights"]) + params["intercept"]
    if artifact.family == "mlp":
        Z = (X - np.asarray(params["x_mean"])) / np.asarray(params["x_scale"])
        A = np.tanh(Z @ np.asarray(params["w1"]).T + np.asarray(params["b1"]))
        f = A @ np.asarray(params["w2"]) + params["b2"]
        return f * params["y_scale"] + params["y_mean"]
    if artifact.family == "gbdt":
        if artifact._compiled is None:
            artifact._compiled = [_compile_tree(t) for t in params["trees"]]
        out = np.full(n, params["base"])
        for compiled in artifact._compiled:
            out = out + _tree_predict_nodes(compiled, X)
        return out
    raise ConfigError(f"unknown model family {artifact.family!r}")


def predict(artifact: ModelArtifact, X, columns: Sequence[str]) -> np.ndarray:
    """Deterministic predictions; columns are aligned by name, so column
    order does not matter. Missing or extra columns are an error."""
    X = _as_matrix(X, columns)
    given = list(columns)
    missing = [c for c in artifact.columns if c not in given]
    extra = [c for c in given if c not in artifact.columns]
    if missing or extra:
        raise ConfigError(
            f"column mismatch: missing {missing or 'none'}, unexpected {extra or 'none'}"
        )
    perm = [given.index(c) for c in artifact.columns]
    return _predict_aligned(artifact, X[:, perm])


def fit_from_spec(spec: ModelSpec, X, y, columns: Sequence[str]) -> ModelArtifact:
    hp = spec.resolved()
    if spec.family == "linear":
        return fit_linear(X, y, columns, ridge_lambda=hp["ridge_lambda"], seed=spec.seed)
    if spec.family == "svr_linear":
        return fit_svr_linear(
            X,
            y,
            columns,
            epsilon=hp["epsilon"],
            c=hp["c"],
            epochs=hp["epochs"],
            learning_rate=hp["learning_rate"],
            seed=spec.seed,
        )
    if spec.family == "mlp":
        return fit_mlp(
            X,
            y,
            columns,
            hidden=hp["hidden"],
            learning_rate=hp["learning_rate"],
            epochs=hp["epochs"],
            seed=spec.seed,
        )
    return fit_gbdt(
        X,
        y,
        columns,
        n_trees=hp["n_trees"],
        max_depth=hp["max_depth"],
        learning_rate=hp["learning_rate"],
        min_leaf=hp["min_leaf"],
        n_bins=hp["n_bins"],
        seed=spec.seed,
    )


def save_model(artifact: ModelArtifact, path: str) -> None:
    doc = {
        "family": artifact.family,
        "columns": artifact.columns,
        "params": artifact.params,
        "meta": artifact.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> ModelArtifact:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return ModelArtifact(
        family=doc["family"],
        columns=list(doc["columns"]),
        params=doc["params"],
        meta=doc.get("meta", {}),
    )
