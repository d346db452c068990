"""Surrogate loss functions with closed-form gradients with respect to the
predicted cost vector.

Every pool loss is a pure function of (c_hat, c, pool) and is evaluated
through the kernel backend.  Maximisation problems are handled by orienting
the cost vectors (negating) so that lower oriented objective always means
better; gradients are mapped back through the chain rule.  Pool rows may be
binary assignments or nonnegative weight vectors (reduced problems); all
formulas hold for either.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .core import MINIMIZE, sense_sign
from .pool import SolutionPool

LOSS_KINDS = (
    "mse",
    "pointwise",
    "pairwise",
    "pairwise_diff",
    "listwise",
    "listwise_kl",
    "nce",
    "combined",
)

PAIR_SCHEMES = ("best_versus_rest", "all_pairs")
PAIRDIFF_NORMS = ("pairs", "pool")

#: loss kinds that never read the pool
POOL_FREE_KINDS = ("mse",)


@dataclass(frozen=True)
class LossResult:
    value: float
    gradient: np.ndarray


@dataclass(frozen=True)
class LossSpec:
    """Which surrogate loss to train with, plus its hyperparameters."""

    kind: str = "listwise"
    margin: float = 0.1
    temperature: float = 1.0
    mix_alpha: float = 0.5
    pair_scheme: str = "best_versus_rest"
    pairdiff_norm: str = "pairs"

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if not 0.0 <= self.mix_alpha <= 1.0:
            raise ValueError("mix_alpha must lie in [0, 1]")
        if self.pair_scheme not in PAIR_SCHEMES:
            raise ValueError(f"unknown pair scheme {self.pair_scheme!r}")
        if self.pairdiff_norm not in PAIRDIFF_NORMS:
            raise ValueError(f"unknown pairdiff_norm {self.pairdiff_norm!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "LossSpec":
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "margin": self.margin,
            "temperature": self.temperature,
            "mix_alpha": self.mix_alpha,
            "pair_scheme": self.pair_scheme,
            "pairdiff_norm": self.pairdiff_norm,
        }


@dataclass(frozen=True)
class OrderedPairs:
    """Index pairs (p, q) into a pool with item p strictly better than q
    under the true cost the pairs were generated from."""

    items: np.ndarray          # pool snapshot the indices refer to
    index_pairs: np.ndarray    # (n_pairs, 2) int64
    pool_size: int
    sense: str = MINIMIZE

    def __len__(self) -> int:
        return len(self.index_pairs)


def _pool_matrix(pool) -> np.ndarray:
    if isinstance(pool, SolutionPool):
        mat = pool.matrix()
    else:
        mat = np.ascontiguousarray(pool, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ValueError("pool must be a nonempty (S, d) matrix")
    return mat


def mse(c_hat, c) -> LossResult:
    """Multi-output squared error, summed over coordinates."""
    c_hat = np.asarray(c_hat, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if c_hat.shape != c.shape:
        raise ValueError("c_hat and c must have equal length")
    e = c - c_hat
    return LossResult(float(e @ e), -2.0 * e)


def pointwise(c_hat, c, pool, sense: str = MINIMIZE) -> LossResult:
    """Mean squared error between predicted and true objective values at
    every pooled solution."""
    items = _pool_matrix(pool)
    val, grad = kernels.pointwise_loss(items, np.asarray(c_hat, float),
                                       np.asarray(c, float))
    return LossResult(val, grad)  # invariant under orientation


def pointwise_weighted_form(c_hat, c, pool) -> float:
    """Weighted-MSE expansion of the pointwise loss: eps' G eps with
    G = (1/S) sum_v v v'.  Algebraic cross-check of pointwise()."""
    items = _pool_matrix(pool)
    eps = np.asarray(c_hat, float) - np.asarray(c, float)
    g = items.T @ items / items.shape[0]
    return float(eps @ g @ eps)


def generate_pairs(pool, c, scheme: str = "best_versus_rest",
                   sense: str = MINIMIZE) -> OrderedPairs:
    """Ordered index pairs under the true cost; only strict orderings count.

    best_versus_rest pairs the pool's best with every strictly worse member;
    all_pairs emits every strictly ordered pair (quadratic in pool size).
    """
    if scheme not in PAIR_SCHEMES:
        raise ValueError(f"unknown pair scheme {scheme!r}")
    items = _pool_matrix(pool)
    sigma = sense_sign(sense)
    obj = sigma * (items @ np.asarray(c, float))
    if scheme == "best_versus_rest":
        best = int(np.argmin(obj))
        worse = np.flatnonzero(obj > obj[best])
        pairs = np.column_stack([np.full(len(worse), best, dtype=np.int64),
                                 worse.astype(np.int64)])
    else:
        p_idx, q_idx = np.nonzero(obj[:, None] < obj[None, :])
        pairs = np.column_stack([p_idx.astype(np.int64), q_idx.astype(np.int64)])
    return OrderedPairs(items, np.ascontiguousarray(pairs), items.shape[0], sense)


def pairwise(c_hat, c, pairs: OrderedPairs, margin: float = 0.0) -> LossResult:
    """Margin ranking loss over the ordered pairs (hinge on predicted
    objective differences).  Empty pair sets give value 0, zero gradient."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    sigma = sense_sign(pairs.sense)
    c_hat_o = sigma * np.asarray(c_hat, float)
    val, grad = kernels.hinge_pair_loss(pairs.items, c_hat_o,
                                        pairs.index_pairs, float(margin))
    return LossResult(val, sigma * grad)


def nce(c_hat, c, pool, sense: str = MINIMIZE) -> LossResult:
    """Mean gap between the pool best's predicted objective and each pooled
    member's.  Unbounded below; the hinge-free form of best-versus-rest."""
    items = _pool_matrix(pool)
    sigma = sense_sign(sense)
    obj = sigma * (items @ np.asarray(c, float))
    best = int(np.argmin(obj))
    val, grad = kernels.nce_loss(items, sigma * np.asarray(c_hat, float), best)
    return LossResult(val, sigma * grad)


def pairwise_diff(c_hat, c, pairs: OrderedPairs,
                  norm: str = "pairs") -> LossResult:
    """Squared error between predicted and true objective differences over
    the ordered pairs.  ``norm`` selects the 1/|pairs| (default) or 1/|S|
    normalisation convention."""
    if norm not in PAIRDIFF_NORMS:
        raise ValueError(f"unknown pairdiff norm {norm!r}")
    denom = len(pairs) if norm == "pairs" else pairs.pool_size
    if len(pairs) == 0:
        return LossResult(0.0, np.zeros(len(np.asarray(c_hat))))
    val, grad = kernels.square_pair_loss(
        pairs.items, np.asarray(c_hat, float), np.asarray(c, float),
        pairs.index_pairs, float(denom))
    return LossResult(val, grad)  # invariant under orientation


def pairwise_diff_weighted_form(c_hat, c, pairs: OrderedPairs,
                                norm: str = "pairs") -> float:
    """Weighted-MSE expansion over pair differences: eps' Gbar eps with
    Gbar built from (v_p - v_q).  Algebraic cross-check of pairwise_diff()."""
    if len(pairs) == 0:
        return 0.0
    denom = len(pairs) if norm == "pairs" else pairs.pool_size
    d = pairs.items[pairs.index_pairs[:, 0]] - pairs.items[pairs.index_pairs[:, 1]]
    gbar = d.T @ d / denom
    eps = np.asarray(c_hat, float) - np.asarray(c, float)
    return float(eps @ gbar @ eps)


def softmax_distribution(c, pool, temperature: float,
                         sense: str = MINIMIZE) -> np.ndarray:
    """Probability of each pooled solution being the best under c,
    exp(-objective/temperature) normalised over the pool."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    items = _pool_matrix(pool)
    sigma = sense_sign(sense)
    return kernels.softmax_pool(items, sigma * np.asarray(c, float),
                                float(temperature))


def listwise(c_hat, c, pool, temperature: float,
             sense: str = MINIMIZE) -> LossResult:
    """Cross entropy between the pool softmax under c and under c_hat,
    scaled by 1/S."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    items = _pool_matrix(pool)
    sigma = sense_sign(sense)
    val, grad = kernels.listwise_loss(items, sigma * np.asarray(c_hat, float),
                                      sigma * np.asarray(c, float),
                                      float(temperature))
    return LossResult(val, sigma * grad)


def listwise_kl(c_hat, c, pool, temperature: float,
                sense: str = MINIMIZE) -> LossResult:
    """KL-divergence variant: listwise minus the (c_hat independent) entropy
    term, so the gradient is identical to listwise()."""
    res = listwise(c_hat, c, pool, temperature, sense)
    items = _pool_matrix(pool)
    sigma = sense_sign(sense)
    p = kernels.softmax_pool(items, sigma * np.asarray(c, float),
                             float(temperature))
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.sum(np.where(p > 0, p * np.log(p), 0.0))
    return LossResult(res.value - ent / items.shape[0], res.gradient)


def combined(c_hat, c, pool, temperature: float, mix_alpha: float,
             sense: str = MINIMIZE) -> LossResult:
    """Convex combination mix_alpha * listwise + (1 - mix_alpha) * mse."""
    if not 0.0 <= mix_alpha <= 1.0:
        raise ValueError("mix_alpha must lie in [0, 1]")
    m = mse(c_hat, c)
    if mix_alpha == 0.0:
        return m
    lw = listwise(c_hat, c, pool, temperature, sense)
    return LossResult(
        mix_alpha * lw.value + (1.0 - mix_alpha) * m.value,
        mix_alpha * lw.gradient + (1.0 - mix_alpha) * m.gradient,
    )


def evaluate_loss(spec: LossSpec, c_hat, c, pool,
                  sense: str = MINIMIZE) -> LossResult:
    """Dispatch a LossSpec to the matching loss function."""
    kind = spec.kind
    if kind == "mse":
        return mse(c_hat, c)
    if kind == "pointwise":
        return pointwise(c_hat, c, pool, sense)
    if kind == "pairwise":
        pairs = generate_pairs(pool, c, spec.pair_scheme, sense)
        return pairwise(c_hat, c, pairs, spec.margin)
    if kind == "pairwise_diff":
        pairs = generate_pairs(pool, c, spec.pair_scheme, sense)
        return pairwise_diff(c_hat, c, pairs, spec.pairdiff_norm)
    if kind == "listwise":
        return listwise(c_hat, c, pool, spec.temperature, sense)
    if kind == "listwise_kl":
        return listwise_kl(c_hat, c, pool, spec.temperature, sense)
    if kind == "nce":
        return nce(c_hat, c, pool, sense)
    if kind == "combined":
        return combined(c_hat, c, pool, spec.temperature, spec.mix_alpha, sense)
    raise ValueError(f"unknown loss kind {kind!r}")
