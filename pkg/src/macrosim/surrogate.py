"""Surrogate models predicting congestion metrics from encoded signal timings.

Two model families: ordinary least squares via the normal equations (with a
tiny ridge term for rank safety), and a fully-connected two-hidden-layer
network trained by mini-batch gradient descent with adaptive moment
estimation. Features are the [0, 1] configuration encoding; targets are
standardized internally and de-standardized on prediction. Model quality is
reported as the k-fold cross-validated RMSE pooled over all held-out rows.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np


class SurrogateError(Exception):
    pass


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray    # (n_features, n_targets)
    intercept: np.ndarray  # (n_targets,)
    targets: tuple[str, ...] = ("avg_speed", "queue_length")
    feature_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class MlpHyper:
    """Training hyperparameters for the neural surrogate."""

    hidden: tuple[int, ...] = (100, 50)
    activation: str = "relu"
    learning_rate: float = 0.001
    batch_size: int = 32
    alpha: float = 0.0001       # L2 penalty on the weight matrices
    max_epochs: int = 500
    patience: int = 10          # epochs without validation improvement before stopping
    validation_fraction: float = 0.1
    tol: float = 1e-4           # minimum improvement that resets patience

    def __post_init__(self):
        if self.activation not in ("relu", "tanh"):
            raise ValueError("activation must be 'relu' or 'tanh'")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("hidden layer sizes must be positive")
        if not (0 < self.validation_fraction < 1):
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass(frozen=True)
class MlpModel:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str
    target_mean: np.ndarray
    target_scale: np.ndarray
    targets: tuple[str, ...] = ("avg_speed", "queue_length")
    feature_ids: tuple[str, ...] = ()
    epochs_trained: int = 0


def _as_2d(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def fit_linear(X, Y, ridge: float = 1e-8, targets=("avg_speed", "queue_length"), feature_ids=()) -> LinearModel:
    """Least squares with intercept through the normal equations.

    Solving one system with a multi-column right-hand side decouples across
    targets, so joint and per-target fits agree. The ridge term is small
    enough to be invisible at any sane conditioning but keeps degenerate
    designs solvable.
    """
    X = np.asarray(X, dtype=float)
    Y = _as_2d(Y)
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("X must be 2-d with one row per target row")
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty design matrix")
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    gram = A.T @ A + ridge * np.eye(A.shape[1])
    theta = np.linalg.solve(gram, A.T @ Y)
    targets = tuple(targets)[: Y.shape[1]]
    return LinearModel(
        weights=theta[:-1, :], intercept=theta[-1, :], targets=targets, feature_ids=tuple(feature_ids)
    )


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(float)
    t = np.tanh(z)
    return 1.0 - t * t


def _forward(weights, biases, X, activation):
    """Returns (activations per layer incl. input, pre-activations per layer)."""
    acts = [X]
    pres = []
    h = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        pres.append(z)
        h = z if i == last else _activate(z, activation)
        acts.append(h)
    return acts, pres


def loss_and_gradients(weights, biases, X, Y, activation, alpha):
    """Mean squared error plus L2 weight penalty, and its exact gradients.

    loss = ||pred - Y||^2 / (2m) + alpha * sum(W^2) / (2m) with m = len(X).
    Biases are not penalized. Shared by training and the finite-difference
    gradient check.
    """
    m = X.shape[0]
    acts, pres = _forward(weights, biases, X, activation)
    resid = acts[-1] - Y
    loss = float(np.sum(resid**2)) / (2 * m)
    loss += alpha * sum(float(np.sum(W**2)) for W in weights) / (2 * m)

    grads_w = [None] * len(weights)
    grads_b = [None] * len(biases)
    delta = resid / m
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta + (alpha / m) * weights[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * _activate_grad(pres[i - 1], activation)
    return loss, grads_w, grads_b


def fit_mlp(X, Y, hyper: MlpHyper = MlpHyper(), seed: int = 0,
            targets=("avg_speed", "queue_length"), feature_ids=()) -> MlpModel:
    """Train the neural surrogate; deterministic for a fixed seed.

    Targets are standardized internally. A seeded shuffle sets aside
    ``validation_fraction`` of the rows; training stops when the validation
    MSE has not improved by more than ``tol`` for ``patience`` consecutive
    epochs (or at ``max_epochs``), and the weights of the best validation
    epoch are kept.
    """
    X = np.asarray(X, dtype=float)
    Y = _as_2d(Y)
    if X.shape[0] != Y.shape[0] or X.ndim != 2:
        raise ValueError("X and Y must have matching row counts")
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least 3 rows to train with a validation split")

    mean = Y.mean(axis=0)
    scale = Y.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    Ys = (Y - mean) / scale

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = max(1, int(round(hyper.validation_fraction * n)))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if train_idx.size == 0:
        raise ValueError("validation split leaves no training rows")
    X_train, Y_train = X[train_idx], Ys[train_idx]
    X_val, Y_val = X[val_idx], Ys[val_idx]

    sizes = [X.shape[1], *hyper.hidden, Y.shape[1]]
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))

    m_w = [np.zeros_like(W) for W in weights]
    v_w = [np.zeros_like(W) for W in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    adam_t = 0

    best_val = np.inf
    best_weights = [W.copy() for W in weights]
    best_biases = [b.copy() for b in biases]
    stall = 0
    epochs_done = 0

    n_train = X_train.shape[0]
    for epoch in range(hyper.max_epochs):
        epochs_done = epoch + 1
        perm = rng.permutation(n_train)
        for start in range(0, n_train, hyper.batch_size):
            batch = perm[start : start + hyper.batch_size]
            _, gw, gb = loss_and_gradients(
                weights, biases, X_train[batch], Y_train[batch], hyper.activation, hyper.alpha
            )
            adam_t += 1
            correction1 = 1.0 - beta1**adam_t
            correction2 = 1.0 - beta2**adam_t
            for i in range(len(weights)):
                m_w[i] = beta1 * m_w[i] + (1 - beta1) * gw[i]
                v_w[i] = beta2 * v_w[i] + (1 - beta2) * gw[i] ** 2
                weights[i] -= hyper.learning_rate * (m_w[i] / correction1) / (
                    np.sqrt(v_w[i] / correction2) + eps
                )
                m_b[i] = beta1 * m_b[i] + (1 - beta1) * gb[i]
                v_b[i] = beta2 * v_b[i] + (1 - beta2) * gb[i] ** 2
                biases[i] -= hyper.learning_rate * (m_b[i] / correction1) / (
                    np.sqrt(v_b[i] / correction2) + eps
                )

        val_pred = _forward(weights, biases, X_val, hyper.activation)[0][-1]
        val_mse = float(np.mean((val_pred - Y_val) ** 2))
        if val_mse < best_val - hyper.tol:
            best_val = val_mse
            best_weights = [W.copy() for W in weights]
            best_biases = [b.copy() for b in biases]
            stall = 0
        else:
            stall += 1
            if stall >= hyper.patience:
                break

    return MlpModel(
        weights=tuple(best_weights),
        biases=tuple(best_biases),
        activation=hyper.activation,
        target_mean=mean,
        target_scale=scale,
        targets=tuple(targets)[: Y.shape[1]],
        feature_ids=tuple(feature_ids),
        epochs_trained=epochs_done,
    )


def predict(model, X) -> np.ndarray:
    """Per-target predictions; accepts a single feature vector or a matrix."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if isinstance(model, LinearModel):
        out = X @ model.weights + model.intercept
    elif isinstance(model, MlpModel):
        out = _forward(list(model.weights), list(model.biases), X, model.activation)[0][-1]
        out = out * model.target_scale + model.target_mean
    else:
        raise TypeError(f"unknown model type {type(model)!r}")
    return out[0] if single else out


def kfold_rmse(fit, X, Y, k: int = 5, seed: int = 0):
    """Cross-validated RMSE pooled over all held-out rows.

    ``fit`` is any callable (X_train, Y_train) -> model usable by
    :func:`predict`. Rows are shuffled once with the given seed and split
    into k folds; each row is predicted by the model trained without it, and
    the RMSE is computed per target over the pooled predictions. Returns
    (per_target_rmse, mean_over_targets).
    """
    X = np.asarray(X, dtype=float)
    Y = _as_2d(Y)
    n = X.shape[0]
    if not (2 <= k <= n):
        raise ValueError(f"k must be in [2, {n}]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.array_split(order, k)
    pooled = np.empty_like(Y)
    for held_out in folds:
        train = np.setdiff1d(order, held_out, assume_unique=True)
        model = fit(X[train], Y[train])
        pooled[held_out] = np.atleast_2d(predict(model, X[held_out]))
    per_target = np.sqrt(np.mean((pooled - Y) ** 2, axis=0))
    return per_target, float(np.mean(per_target))


def grid_search_mlp(X, Y, seed: int = 0, k: int = 5, base: MlpHyper = MlpHyper()):
    """Small exhaustive search over the neural surrogate's training grid.

    Tries activation {relu, tanh} x alpha {1e-4, 1e-3} x learning rate
    {1e-3, 1e-2}, scores each by k-fold pooled RMSE (mean over targets), and
    returns (best_hyper, results) with results as (hyper, score) pairs.
    """
    results = []
    for activation in ("relu", "tanh"):
        for alpha in (0.0001, 0.001):
            for lr in (0.001, 0.01):
                hyper = replace(base, activation=activation, alpha=alpha, learning_rate=lr)
                _, score = kfold_rmse(lambda Xt, Yt: fit_mlp(Xt, Yt, hyper, seed=seed), X, Y, k=k, seed=seed)
                results.append((hyper, score))
    best = min(results, key=lambda item: item[1])
    return best[0], results


def save_model(model, path) -> None:
    """Persist a surrogate as a structured text document."""
    if isinstance(model, LinearModel):
        doc = {
            "kind": "linear",
            "targets": list(model.targets),
            "feature_ids": list(model.feature_ids),
            "feature_bounds": [0.0, 1.0],
            "weights": model.weights.tolist(),
            "intercept": model.intercept.tolist(),
        }
    elif isinstance(model, MlpModel):
        doc = {
            "kind": "mlp",
            "targets": list(model.targets),
            "feature_ids": list(model.feature_ids),
            "feature_bounds": [0.0, 1.0],
            "activation": model.activation,
            "weights": [W.tolist() for W in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "target_mean": model.target_mean.tolist(),
            "target_scale": model.target_scale.tolist(),
            "epochs_trained": model.epochs_trained,
        }
    else:
        raise TypeError(f"unknown model type {type(model)!r}")
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "linear":
        return LinearModel(
            weights=np.array(doc["weights"], dtype=float),
            intercept=np.array(doc["intercept"], dtype=float),
            targets=tuple(doc["targets"]),
            feature_ids=tuple(doc["feature_ids"]),
        )
    if kind == "mlp":
        return MlpModel(
            weights=tuple(np.array(W, dtype=float) for W in doc["weights"]),
            biases=tuple(np.array(b, dtype=float) for b in doc["biases"]),
            activation=doc["activation"],
            target_mean=np.array(doc["target_mean"], dtype=float),
            target_scale=np.array(doc["target_scale"], dtype=float),
            targets=tuple(doc["targets"]),
            feature_ids=tuple(doc["feature_ids"]),
            epochs_trained=int(doc.get("epochs_trained", 0)),
        )
    raise SurrogateError(f"{path}: unknown model kind {kind!r}")
