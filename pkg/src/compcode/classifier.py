"""Multilayer perceptron over frozen text embeddings.

Architecture: affine + ReLU hidden layers, affine + softmax head.
Training is plain mini-batch SGD on mean cross-entropy with an optional
L2 penalty on the weights (not the biases), fully deterministic under
the run seed: Glorot-uniform init, seeded shuffling, fixed summation
order. Weights are float64 end to end so the finite-difference gradient
check is meaningful.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    CorruptFile,
    DimensionMismatch,
    EmptyDataset,
    FingerprintMismatch,
    NonFiniteLoss,
    VersionMismatch,
)
from .weaklabel import LabeledDataset

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpHyperparams:
    hidden_dims: tuple[int, ...] = (256,)
    learning_rate: float = 0.05  # plain SGD needs a coarser step than adaptive optimizers
    epochs: int = 100
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0
    early_stop_patience: int = 10  # 0 disables early stopping

    def __post_init__(self):
        if any(h <= 0 for h in self.hidden_dims):
            raise ValueError(f"hidden_dims must be positive, got {self.hidden_dims}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if self.l2 < 0 or self.early_stop_patience < 0:
            raise ValueError("l2 and early_stop_patience must be non-negative")


@dataclass
class MlpModel:
    input_dim: int
    class_labels: list[str]
    layers: list[tuple[np.ndarray, np.ndarray]]  # (weights (fan_in, fan_out), bias)
    activation: str = "relu"
    provider_fingerprint: str = ""

    def __post_init__(self):
        dims = [self.input_dim] + [w.shape[1] for w, _ in self.layers]
        for i, (w, b) in enumerate(self.layers):
            if w.shape[0] != dims[i] or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i} shape {w.shape} breaks the dimension chain")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i} contains non-finite parameters")
        if dims[-1] != len(self.class_labels):
            raise ValueError(
                f"output width {dims[-1]} != number of classes {len(self.class_labels)}"
            )

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)


@dataclass(frozen=True)
class TopKPrediction:
    ranked: list[tuple[str, float]]  # (class id, probability), descending

    def ids(self) -> list[str]:
        return [cid for cid, _ in self.ranked]


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    def to_json_obj(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_accuracy": self.val_accuracy,
            "best_epoch": self.best_epoch,
            "stopped_epoch": self.stopped_epoch,
        }


def _softmax(z: np.ndarray) -> np.ndarray:
    # rows; subtract the row max so confident logits cannot overflow
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward_batch(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Class probabilities for a batch of row vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"input of shape {x.shape}, model expects (*, {model.input_dim})"
        )
    a = x
    for w, b in model.layers[:-1]:
        a = np.maximum(a @ w + b, 0.0)
    w, b = model.layers[-1]
    return _softmax(a @ w + b)


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Probability vector over classes for one embedding."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D embedding, got shape {x.shape}")
    return forward_batch(model, x[None, :])[0]


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], n_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _loss_from_probs(probs: np.ndarray, labels: np.ndarray, model: MlpModel, l2: float) -> float:
    # mean cross-entropy; epsilon floors the log for hard-saturated rows
    picked = probs[np.arange(labels.shape[0]), labels]
    ce = -float(np.mean(np.log(np.maximum(picked, 1e-300))))
    if l2 > 0.0:
        ce += 0.5 * l2 * sum(float(np.sum(w * w)) for w, _ in model.layers)
    return ce


def compute_loss(model: MlpModel, batch: Sequence[tuple[np.ndarray, int]], l2: float = 0.0) -> float:
    """Mean cross-entropy over ``batch`` plus 0.5 * l2 * sum of squared weights."""
    if not batch:
        raise EmptyDataset("loss over an empty batch")
    x = np.stack([np.asarray(b[0], dtype=np.float64) for b in batch])
    y = np.asarray([b[1] for b in batch], dtype=np.int64)
    return _loss_from_probs(forward_batch(model, x), y, model, l2)


def compute_gradients(
    model: MlpModel, batch: Sequence[tuple[np.ndarray, int]], l2: float = 0.0
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Backprop gradients of compute_loss w.r.t. every weight and bias.

    Returned list mirrors model.layers in shape and order.
    """
    if not batch:
        raise EmptyDataset("gradients over an empty batch")
    x = np.stack([np.asarray(b[0], dtype=np.float64) for b in batch])
    y = np.asarray([b[1] for b in batch], dtype=np.int64)
    grads, _ = _gradients_and_loss(model, x, y, l2)
    return grads


def _gradients_and_loss(
    model: MlpModel, x: np.ndarray, y: np.ndarray, l2: float
) -> tuple[list[tuple[np.ndarray, np.ndarray]], float]:
    if x.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"input of shape {x.shape}, model expects (*, {model.input_dim})"
        )
    n = x.shape[0]
    activations = [x]
    pre = []
    a = x
    for w, b in model.layers[:-1]:
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        activations.append(a)
    w_out, b_out = model.layers[-1]
    probs = _softmax(a @ w_out + b_out)
    loss = _loss_from_probs(probs, y, model, l2)

    delta = (probs - _one_hot(y, model.n_classes)) / n
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for i in range(len(model.layers) - 1, -1, -1):
        w, _ = model.layers[i]
        a_prev = activations[i]
        dw = a_prev.T @ delta
        if l2 > 0.0:
            dw = dw + l2 * w
        db = delta.sum(axis=0)
        grads.append((dw, db))
        if i > 0:
            delta = (delta @ w.T) * (pre[i - 1] > 0.0)
    grads.reverse()
    return grads, loss


def _init_layers(
    input_dim: int, hidden_dims: Sequence[int], n_classes: int, rng: np.random.Generator
) -> list[tuple[np.ndarray, np.ndarray]]:
    dims = [input_dim, *hidden_dims, n_classes]
    layers = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append((w, np.zeros(fan_out, dtype=np.float64)))
    return layers


def _top1_accuracy(model: MlpModel, x: np.ndarray, labels: list[str]) -> float:
    if x.shape[0] == 0:
        return 0.0
    probs = forward_batch(model, x)
    pred = np.argmax(probs, axis=1)
    hits = sum(1 for p, gold in zip(pred, labels) if model.class_labels[p] == gold)
    return hits / len(labels)


def train_mlp(
    train: LabeledDataset,
    valid: LabeledDataset,
    hp: MlpHyperparams,
    provider_fingerprint: str = "",
) -> tuple[MlpModel, TrainHistory]:
    """Train an MLP on (embedding -> industry label) pairs.

    Deterministic under hp.seed. Tracks per-epoch full-train loss and
    validation top-1 accuracy; the returned weights are the snapshot from
    the best-validation epoch (earliest on ties). With
    early_stop_patience = p > 0, training stops after p consecutive
    epochs without a validation improvement.
    """
    if not train.examples:
        raise EmptyDataset("training set is empty")
    dims = {ex.embedding.shape[0] for ex in train.examples} | {
        ex.embedding.shape[0] for ex in valid.examples
    }
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed embedding dimensions in dataset: {sorted(dims)}")
    input_dim = dims.pop()

    class_labels = list(train.class_labels)
    class_index = {c: i for i, c in enumerate(class_labels)}
    x_train = np.stack([ex.embedding.astype(np.float64) for ex in train.examples])
    y_train = np.asarray([class_index[ex.label] for ex in train.examples], dtype=np.int64)
    x_val = (
        np.stack([ex.embedding.astype(np.float64) for ex in valid.examples])
        if valid.examples
        else np.zeros((0, input_dim))
    )
    val_labels = [ex.label for ex in valid.examples]

    rng = np.random.default_rng(hp.seed)
    model = MlpModel(
        input_dim=input_dim,
        class_labels=class_labels,
        layers=_init_layers(input_dim, hp.hidden_dims, len(class_labels), rng),
        provider_fingerprint=provider_fingerprint,
    )

    history = TrainHistory()
    best_acc = -1.0
    best_layers = [(w.copy(), b.copy()) for w, b in model.layers]
    best_epoch = 0
    since_improve = 0
    n = x_train.shape[0]

    for epoch in range(1, hp.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            grads, loss = _gradients_and_loss(model, x_train[idx], y_train[idx], hp.l2)
            if not math.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became non-finite at epoch {epoch}; lower the learning rate"
                )
            model.layers = [
                (w - hp.learning_rate * dw, b - hp.learning_rate * db)
                for (w, b), (dw, db) in zip(model.layers, grads)
            ]
        epoch_loss = _loss_from_probs(forward_batch(model, x_train), y_train, model, hp.l2)
        if not math.isfinite(epoch_loss):
            raise NonFiniteLoss(f"loss became non-finite at epoch {epoch}")
        val_acc = _top1_accuracy(model, x_val, val_labels)
        history.train_loss.append(epoch_loss)
        history.val_accuracy.append(val_acc)
        history.stopped_epoch = epoch

        if val_acc > best_acc:
            best_acc = val_acc
            best_layers = [(w.copy(), b.copy()) for w, b in model.layers]
            best_epoch = epoch
            since_improve = 0
        else:
            since_improve += 1
            if hp.early_stop_patience > 0 and since_improve >= hp.early_stop_patience:
                break

    model.layers = best_layers
    history.best_epoch = best_epoch
    return model, history


def predict_topk(model: MlpModel, x: np.ndarray, k: int) -> TopKPrediction:
    """Top-min(k, C) classes by probability, ties toward the ascending id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    probs = forward(model, x)
    order = sorted(
        range(model.n_classes), key=lambda i: (-probs[i], model.class_labels[i])
    )
    top = order[: min(k, model.n_classes)]
    return TopKPrediction(ranked=[(model.class_labels[i], float(probs[i])) for i in top])


def save_model(model: MlpModel, path: str | Path) -> None:
    obj = {
        "version": MODEL_FORMAT_VERSION,
        "input_dim": model.input_dim,
        "activation": model.activation,
        "class_labels": model.class_labels,
        "provider_fingerprint": model.provider_fingerprint,
        "layers": [
            {
                "rows": int(w.shape[0]),
                "cols": int(w.shape[1]),
                "weights": [float(v) for v in w.ravel(order="C")],
                "bias": [float(v) for v in b],
            }
            for w, b in model.layers
        ],
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str | Path) -> MlpModel:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: unreadable model file ({exc})") from exc
    if not isinstance(obj, dict) or "version" not in obj:
        raise CorruptFile(f"{path}: not a model file")
    if obj["version"] != MODEL_FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: model format version {obj['version']!r}, "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    try:
        layers = []
        for spec in obj["layers"]:
            w = np.asarray(spec["weights"], dtype=np.float64).reshape(
                spec["rows"], spec["cols"]
            )
            b = np.asarray(spec["bias"], dtype=np.float64)
            layers.append((w, b))
        model = MlpModel(
            input_dim=int(obj["input_dim"]),
            class_labels=[str(c) for c in obj["class_labels"]],
            layers=layers,
            activation=str(obj.get("activation", "relu")),
            provider_fingerprint=str(obj.get("provider_fingerprint", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: malformed model file ({exc})") from exc
    return model


def check_fingerprint(model: MlpModel, provider, strict: bool = True) -> bool:
    """Compare the model's embedding fingerprint against ``provider``'s.

    Raises FingerprintMismatch when strict, else returns False on mismatch
    so callers can warn and proceed.
    """
    if model.provider_fingerprint == provider.fingerprint:
        return True
    if strict:
        raise FingerprintMismatch(
            f"model was trained with {model.provider_fingerprint!r}, "
            f"provider is {provider.fingerprint!r}"
        )
    return False
