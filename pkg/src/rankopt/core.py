"""Shared domain types, the regret metric and dataset serialization.

Cost vectors and solutions are plain float64 numpy arrays; the dataclasses
below add the structure that the rest of the package relies on.  All types
are immutable value objects in spirit: nothing here mutates its inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

#: absolute tolerance for objective comparisons (solver tie tolerance)
TIE_TOL = 1e-9

MINIMIZE = "minimize"
MAXIMIZE = "maximize"


class DimensionError(ValueError):
    """Raised when vector lengths disagree with the problem dimension."""


def as_cost_vector(values, k: int | None = None) -> np.ndarray:
    """Validate and convert a cost vector: finite float64, optional length."""
    c = np.asarray(values, dtype=np.float64)
    if c.ndim != 1:
        raise DimensionError(f"cost vector must be 1-d, got shape {c.shape}")
    if k is not None and len(c) != k:
        raise DimensionError(f"cost vector has length {len(c)}, expected {k}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost vector has non-finite entries")
    return c


def as_solution(values, k: int | None = None) -> np.ndarray:
    """Validate a binary assignment vector."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"solution must be 1-d, got shape {v.shape}")
    if k is not None and len(v) != k:
        raise DimensionError(f"solution has length {len(v)}, expected {k}")
    if not np.all((v == 0.0) | (v == 1.0)):
        raise ValueError("solution entries must be 0 or 1")
    return v


def sense_sign(sense: str) -> float:
    """+1 for minimize, -1 for maximize."""
    if sense == MINIMIZE:
        return 1.0
    if sense == MAXIMIZE:
        return -1.0
    raise ValueError(f"unknown objective sense {sense!r}")


@dataclass(frozen=True)
class Instance:
    """One observation: features, true cost vector, optional cached optimum."""

    features: np.ndarray
    cost: np.ndarray
    optimal: np.ndarray | None = None


@dataclass
class Dataset:
    """Ordered list of instances belonging to one split of one problem."""

    instances: list[Instance]
    split: str = "train"
    problem_id: str = ""

    def __post_init__(self):
        if not self.instances:
            raise ValueError("dataset must be nonempty")
        p = len(self.instances[0].features)
        k = len(self.instances[0].cost)
        for ins in self.instances:
            if len(ins.features) != p or len(ins.cost) != k:
                raise DimensionError("instances disagree on feature/cost dimensions")

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def feature_dim(self) -> int:
        return len(self.instances[0].features)

    @property
    def cost_dim(self) -> int:
        return len(self.instances[0].cost)

    def features_matrix(self) -> np.ndarray:
        return np.array([ins.features for ins in self.instances])

    def costs_matrix(self) -> np.ndarray:
        return np.array([ins.cost for ins in self.instances])


@dataclass
class DatasetBundle:
    """Train/validation/test splits of one generated problem."""

    train: Dataset
    validation: Dataset
    test: Dataset
    meta: dict = field(default_factory=dict)


def objective_value(v: np.ndarray, c: np.ndarray) -> float:
    """Linear objective c'v.

    ``v`` may be a binary assignment or a nonnegative weight vector (the
    image of an assignment under a problem reduction).
    """
    if len(v) != len(c):
        raise DimensionError(f"length mismatch: {len(v)} vs {len(c)}")
    return float(np.dot(c, v))


def regret(c_hat: np.ndarray, c: np.ndarray, problem) -> float:
    """Objective gap, under the true costs, between deciding with c_hat and
    deciding with c.  Sense-adjusted so the result is >= 0 up to tie
    tolerance.
    """
    if len(c_hat) != len(c):
        raise DimensionError(f"length mismatch: {len(c_hat)} vs {len(c)}")
    v_hat = problem.solve(c_hat)
    v_star = problem.solve(c)
    gap = objective_value(problem.item_of(v_hat), c) - objective_value(
        problem.item_of(v_star), c
    )
    return sense_sign(problem.sense) * gap


def percentage_regret(c_hat: np.ndarray, c: np.ndarray, problem) -> float:
    """Regret divided by |optimal objective|; NaN when the optimum is 0."""
    v_star = problem.solve(c)
    opt = objective_value(problem.item_of(v_star), c)
    if abs(opt) <= TIE_TOL:
        return float("nan")
    v_hat = problem.solve(c_hat)
    gap = objective_value(problem.item_of(v_hat), c) - opt
    return sense_sign(problem.sense) * gap / abs(opt)


# --- JSON-lines dataset serialization -------------------------------------
#
# One instance per line: {"features": [...], "cost": [...], "optimal": [...]}.
# Python's float repr is shortest-round-trip, so doubles survive bit-exactly.


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        for ins in dataset.instances:
            rec = {"features": ins.features.tolist(), "cost": ins.cost.tolist()}
            if ins.optimal is not None:
                rec["optimal"] = [int(b) for b in ins.optimal]
            fh.write(json.dumps(rec) + "\n")


def load_dataset(path, split: str = "train", problem_id: str = "") -> Dataset:
    instances = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            opt = None
            if "optimal" in rec:
                opt = np.asarray(rec["optimal"], dtype=np.float64)
            instances.append(
                Instance(
                    features=np.asarray(rec["features"], dtype=np.float64),
                    cost=np.asarray(rec["cost"], dtype=np.float64),
                    optimal=opt,
                )
            )
    return Dataset(instances, split=split, problem_id=problem_id)
