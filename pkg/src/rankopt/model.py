"""Linear prediction model c_hat = W'x + b with plain SGD updates."""

from __future__ import annotations

import json

import numpy as np

from .core import DimensionError


class NumericalAbort(RuntimeError):
    """A gradient or parameter became non-finite; the run must stop."""


class LinearModel:
    """Dense linear map from features (length P) to costs (length K)."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray | None,
                 seed: int = 0, epoch: int = 0):
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise DimensionError("weights must be a (P, K) matrix")
        self.bias = None if bias is None else np.asarray(bias, dtype=np.float64)
        if self.bias is not None and len(self.bias) != self.weights.shape[1]:
            raise DimensionError("bias length must equal K")
        self.seed = seed
        self.epoch = epoch
        self._acc_w = None
        self._acc_b = None
        self._acc_n = 0

    @classmethod
    def init(cls, feature_dim: int, out_dim: int, seed: int = 0,
             bias: bool = True) -> "LinearModel":
        """Weights iid uniform in [-1/sqrt(P), 1/sqrt(P)], bias zero."""
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(feature_dim)
        w = rng.uniform(-bound, bound, size=(feature_dim, out_dim))
        b = np.zeros(out_dim) if bias else None
        return cls(w, b, seed=seed)

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if len(x) != self.feature_dim:
            raise DimensionError(f"feature length {len(x)} != {self.feature_dim}")
        out = x @ self.weights
        if self.bias is not None:
            out = out + self.bias
        return out

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        out = x @ self.weights
        if self.bias is not None:
            out = out + self.bias
        return out

    def step(self, x: np.ndarray, grad_chat: np.ndarray, lr: float) -> None:
        """One SGD step: dL/dW = outer(x, dL/dc_hat), dL/db = dL/dc_hat."""
        if lr <= 0:
            raise ValueError("learning rate must be > 0")
        if not np.all(np.isfinite(grad_chat)):
            raise NumericalAbort("non-finite loss gradient")
        self.weights -= lr * np.outer(x, grad_chat)
        if self.bias is not None:
            self.bias -= lr * grad_chat

    def accumulate(self, x: np.ndarray, grad_chat: np.ndarray) -> None:
        """Buffer a per-instance gradient for a later aggregated step."""
        if not np.all(np.isfinite(grad_chat)):
            raise NumericalAbort("non-finite loss gradient")
        if self._acc_w is None:
            self._acc_w = np.zeros_like(self.weights)
            self._acc_b = np.zeros(self.out_dim)
        self._acc_w += np.outer(x, grad_chat)
        self._acc_b += grad_chat
        self._acc_n += 1

    def step_accumulated(self, lr: float) -> None:
        """Apply the mean of the buffered gradients and clear the buffer."""
        if lr <= 0:
            raise ValueError("learning rate must be > 0")
        if self._acc_n == 0:
            return
        self.weights -= lr * self._acc_w / self._acc_n
        if self.bias is not None:
            self.bias -= lr * self._acc_b / self._acc_n
        self._acc_w = None
        self._acc_b = None
        self._acc_n = 0

    def is_finite(self) -> bool:
        if not np.all(np.isfinite(self.weights)):
            return False
        return self.bias is None or bool(np.all(np.isfinite(self.bias)))

    def copy(self) -> "LinearModel":
        return LinearModel(
            self.weights.copy(),
            None if self.bias is None else self.bias.copy(),
            seed=self.seed,
            epoch=self.epoch,
        )

    def save(self, path) -> None:
        doc = {
            "weights": self.weights.tolist(),
            "bias": None if self.bias is None else self.bias.tolist(),
            "seed": self.seed,
            "epoch": self.epoch,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def load(cls, path) -> "LinearModel":
        with open(path) as fh:
            doc = json.load(fh)
        bias = None if doc["bias"] is None else np.asarray(doc["bias"])
        return cls(np.asarray(doc["weights"]), bias,
                   seed=doc.get("seed", 0), epoch=doc.get("epoch", 0))
