"""Multinomial logistic-regression readout trained by mini-batch gradient descent."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from liquidstate.frames import N_CLASSES, PostureLabel

MODEL_FORMAT = "liquidstate-readout"
MODEL_VERSION = 1
FEATURE_KINDS = ("liquid_state", "raw_frame", "encoded_flat")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    l2_penalty: float = 1e-4
    max_epochs: int = 300
    batch_size: int = 64
    convergence_tol: float = 1e-6
    seed: int = 42

    def __post_init__(self):
        if min(self.learning_rate, self.l2_penalty, self.convergence_tol) <= 0:
            raise ValueError("learning_rate, l2_penalty and convergence_tol must be positive")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be positive")


@dataclass(frozen=True, eq=False)
class ReadoutModel:
    W: np.ndarray  # (classes, features)
    b: np.ndarray  # (classes,)
    mean: np.ndarray  # (features,)
    scale: np.ndarray  # (features,), 1 where the training variance was zero
    trained_on: str = "liquid_state"
    train_config: TrainConfig | None = None
    loss_history: tuple[float, ...] = ()
    meta: dict | None = None  # pipeline description echoed into model files

    def __post_init__(self):
        if self.trained_on not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.trained_on!r}")
        if self.W.shape != (len(self.b), len(self.mean)) or self.mean.shape != self.scale.shape:
            raise ValueError("inconsistent readout parameter shapes")
        for arr in (self.W, self.b, self.mean, self.scale):
            if not np.all(np.isfinite(arr)):
                raise ValueError("readout parameters must be finite")

    @property
    def n_features(self) -> int:
        return self.W.shape[1]

    def standardize(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def logits(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"feature length {X.shape[1]} does not match model ({self.n_features})")
        return self.standardize(X) @ self.W.T + self.b

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.logits(X))

    def predict_ids(self, X) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "trained_on": self.trained_on,
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "feature_mean": self.mean.tolist(),
            "feature_scale": self.scale.tolist(),
            "train_config": None if self.train_config is None else asdict(self.train_config),
            "loss_history": list(self.loss_history),
            "meta": self.meta or {},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReadoutModel":
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise ValueError("not a version-1 liquidstate readout model")
        cfg = doc.get("train_config")
        return cls(
            W=np.array(doc["W"], dtype=np.float64),
            b=np.array(doc["b"], dtype=np.float64),
            mean=np.array(doc["feature_mean"], dtype=np.float64),
            scale=np.array(doc["feature_scale"], dtype=np.float64),
            trained_on=doc["trained_on"],
            train_config=None if cfg is None else TrainConfig(**cfg),
            loss_history=tuple(doc.get("loss_history", ())),
            meta=doc.get("meta") or {},
        )

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ReadoutModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray,
                  l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax cross-entropy plus ``0.5 * l2 * ||W||^2`` and its gradients."""
    n = len(y)
    p = softmax(X @ W.T + b)
    loss = -np.mean(np.log(p[np.arange(n), y] + 1e-300)) + 0.5 * l2 * np.sum(W * W)
    p[np.arange(n), y] -= 1.0
    p /= n
    return float(loss), p.T @ X + l2 * W, p.sum(axis=0)


def _as_ids(labels) -> np.ndarray:
    return np.array([lab.id if isinstance(lab, PostureLabel) else int(lab) for lab in labels], dtype=np.int64)


def train_readout(features: Sequence, labels: Sequence, cfg: TrainConfig = TrainConfig(),
                  trained_on: str = "liquid_state", n_classes: int = N_CLASSES,
                  meta: dict | None = None) -> ReadoutModel:
    if len(features) == 0:
        raise ValueError("no training samples")
    if len(features) != len(labels):
        raise ValueError(f"{len(features)} feature vectors but {len(labels)} labels")
    try:
        X = np.asarray(features, dtype=np.float64)
    except ValueError:
        raise ValueError("feature vectors have differing lengths") from None
    if X.ndim != 2:
        raise ValueError("feature vectors have differing lengths")
    y = _as_ids(labels)
    if len(np.unique(y)) < 2:
        raise ValueError("need at least two classes to train")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Xs = (X - mean) / scale

    rng = np.random.default_rng(cfg.seed)
    W = np.zeros((n_classes, X.shape[1]))
    b = np.zeros(n_classes)
    history = []
    prev = np.inf
    for _ in range(cfg.max_epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, gW, gb = loss_and_grad(W, b, Xs[idx], y[idx], cfg.l2_penalty)
            W -= cfg.learning_rate * gW
            b -= cfg.learning_rate * gb
        loss = loss_and_grad(W, b, Xs, y, cfg.l2_penalty)[0]
        history.append(loss)
        if abs(prev - loss) < cfg.convergence_tol:
            break
        prev = loss
    return ReadoutModel(W, b, mean, scale, trained_on, cfg, tuple(history), meta)


def predict(model: ReadoutModel, feature) -> tuple[PostureLabel, np.ndarray]:
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 1:
        raise ValueError("predict takes a single feature vector")
    proba = model.predict_proba(feature)[0]
    return PostureLabel.from_id(int(np.argmax(proba))), proba
