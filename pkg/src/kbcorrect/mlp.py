"""Small feed-forward classifier trained with mini-batch gradient descent.

Hidden layers use rectified-linear activation, the output is a single
sigmoid unit, and the loss is binary cross-entropy. Training is fully
deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import PathKey, PathVocabulary

MODEL_FORMAT = "kbcorrect-mlp-1"


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_sizes: tuple[int, ...]
    seed: int
    activation: str = "relu"
    vocabulary: PathVocabulary | None = None
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_mlp(n_in: int, hidden_sizes: tuple[int, ...], seed: int) -> MlpModel:
    """Glorot-uniform initialization in +-sqrt(6/(fan_in+fan_out))."""
    rng = np.random.default_rng(seed)
    sizes = [n_in, *hidden_sizes, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases, hidden_sizes=tuple(hidden_sizes), seed=seed)


def _forward(model: MlpModel, X: np.ndarray):
    activations = [X]
    a = X
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        a = _sigmoid(z) if i == len(model.weights) - 1 else np.maximum(z, 0.0)
        activations.append(a)
    return activations


def mlp_loss(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy of the batch."""
    probs = _forward(model, X)[-1][:, 0]
    probs = np.clip(probs, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(probs) + (1 - y) * np.log(1 - probs)))


def mlp_gradients(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """Analytic gradients of the mean cross-entropy w.r.t. all parameters."""
    acts = _forward(model, X)
    n = X.shape[0]
    grads_w = [np.zeros_like(W) for W in model.weights]
    grads_b = [np.zeros_like(b) for b in model.biases]
    # Sigmoid + cross-entropy collapse to (p - y) at the output pre-activation.
    delta = (acts[-1][:, 0] - y)[:, None] / n
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (acts[layer] > 0)
    return grads_w, grads_b


def train_mlp(
    X: np.ndarray,
    y: np.ndarray,
    hidden_sizes: tuple[int, ...] = (64,),
    epochs: int = 200,
    batch_size: int = 32,
    learning_rate: float = 0.01,
    seed: int = 0,
    vocabulary: PathVocabulary | None = None,
) -> MlpModel:
    """Train on binary labels; raises on single-class input."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("features and labels disagree in shape")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    if len(np.unique(y)) < 2:
        raise ValueError("training requires at least one sample of each class")

    model = init_mlp(X.shape[1], hidden_sizes, seed)
    model.vocabulary = vocabulary
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    for _epoch in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = perm[start : start + batch_size]
            gw, gb = mlp_gradients(model, X[batch], y[batch])
            for i in range(len(model.weights)):
                model.weights[i] -= learning_rate * gw[i]
                model.biases[i] -= learning_rate * gb[i]
        model.history.append(mlp_loss(model, X, y))
    return model


def mlp_score(model: MlpModel, feature: np.ndarray) -> float:
    """Sigmoid output for one feature vector."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != (model.input_width,):
        raise ValueError(
            f"feature width {feature.shape} does not match model input {model.input_width}"
        )
    return float(_forward(model, feature[None, :])[-1][0, 0])


def mlp_scores(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.input_width:
        raise ValueError("feature width does not match model input")
    return _forward(model, X)[-1][:, 0]


# -- persistence -------------------------------------------------------------


def save_mlp(model: MlpModel, path: str | Path) -> None:
    vocab = model.vocabulary
    payload = {
        "format": MODEL_FORMAT,
        "seed": model.seed,
        "activation": model.activation,
        "hidden_sizes": list(model.hidden_sizes),
        "weights": [W.tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "vocabulary": None
        if vocab is None
        else {
            "keys": [[d, list(seq)] for d, seq in vocab.keys],
            "merge_directions": vocab.merge_directions,
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_mlp(path: str | Path) -> MlpModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {payload.get('format')!r}")
    vocab = None
    if payload["vocabulary"] is not None:
        keys: list[PathKey] = [
            (d, tuple(seq)) for d, seq in payload["vocabulary"]["keys"]
        ]
        vocab = PathVocabulary(keys, payload["vocabulary"]["merge_directions"])
    return MlpModel(
        weights=[np.array(W, dtype=np.float64) for W in payload["weights"]],
        biases=[np.array(b, dtype=np.float64) for b in payload["biases"]],
        hidden_sizes=tuple(payload["hidden_sizes"]),
        seed=payload["seed"],
        activation=payload["activation"],
        vocabulary=vocab,
    )
