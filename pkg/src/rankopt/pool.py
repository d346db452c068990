"""The cached pool of feasible solutions that the ranking losses operate on.

One pool per problem; rows are prediction-space item vectors (binary
assignments, or their transform images for reduced problems), deduplicated
on exact content in insertion order.
"""

from __future__ import annotations

import json

import numpy as np

from .core import Dataset, Instance


class SolutionPool:
    """Ordered, deduplicated collection of item vectors for one problem."""

    def __init__(self, dim: int):
        self.dim = dim
        self._buf = np.empty((16, dim))
        self._n = 0
        self._seen: set[bytes] = set()

    def __len__(self) -> int:
        return self._n

    def add(self, item: np.ndarray) -> bool:
        """Insert an item; returns False when it was already present."""
        item = np.ascontiguousarray(item, dtype=np.float64)
        key = item.tobytes()
        if key in self._seen:
            return False
        if self._n == len(self._buf):
            grown = np.empty((2 * len(self._buf), self.dim))
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        self._buf[self._n] = item
        self._n += 1
        self._seen.add(key)
        return True

    def matrix(self) -> np.ndarray:
        """(S, dim) view of the pool contents; do not mutate."""
        return self._buf[: self._n]

    def items(self):
        return [self._buf[i].copy() for i in range(self._n)]


def init_pool(dataset: Dataset, problem) -> SolutionPool:
    """Seed the pool with the true optima of every training instance.

    Optimal assignments are cached back onto the instances (frozen
    dataclasses are replaced in place in the dataset list).
    """
    pool = SolutionPool(problem.predict_dim)
    for i, ins in enumerate(dataset.instances):
        if ins.optimal is None:
            x = problem.solve(ins.cost)
            dataset.instances[i] = Instance(ins.features, ins.cost, optimal=x)
        else:
            x = ins.optimal
        pool.add(problem.item_of(x))
    if len(pool) == 0:
        raise RuntimeError("pool is empty after initialization")
    return pool


def maybe_grow(pool: SolutionPool, c_hat: np.ndarray, p_solve: float, rng,
               problem) -> bool:
    """With probability p_solve, solve under c_hat and insert the solution.

    The random draw happens before the solve, so the oracle-call count equals
    the number of successful draws exactly.  Returns whether the oracle was
    called; duplicate insertions are no-ops.
    """
    if not 0.0 <= p_solve <= 1.0:
        raise ValueError("p_solve must lie in [0, 1]")
    if not rng.random() < p_solve:
        return False
    x = problem.solve(c_hat)
    pool.add(problem.item_of(x))
    return True


def save_pool(pool: SolutionPool, path) -> None:
    with open(path, "w") as fh:
        for i in range(len(pool)):
            fh.write(json.dumps(pool.matrix()[i].tolist()) + "\n")


def load_pool(path, dim: int) -> SolutionPool:
    pool = SolutionPool(dim)
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                pool.add(np.asarray(json.loads(line), dtype=np.float64))
    return pool
