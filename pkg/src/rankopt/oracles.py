"""Exact solvers for the 0-1 problem families.

A declarative ``ProblemSpec`` holds the linear constraints; ``solve`` runs a
depth-first branch and bound with a constraint-ignoring bound plus interval
propagation.  ``GridSpec`` problems additionally get a dynamic-programming
fast path, and scheduling problems carry the linear transform that maps a
price series to objective coefficients.  All solvers break objective ties by
returning the lexicographically smallest assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .core import (
    MAXIMIZE,
    MINIMIZE,
    DimensionError,
    as_cost_vector,
    sense_sign,
)

CMP_CODES = {"<=": -1, "==": 0, ">=": 1}

#: feasibility slack; must match the kernel constant
EPS = 1e-9

#: enumerate_feasible refuses larger dimensions without an explicit limit
ENUM_MAX_DIM = 24


class InfeasibleError(RuntimeError):
    """The feasible set of a spec is empty."""


@dataclass(frozen=True)
class Constraint:
    coeffs: np.ndarray
    cmp: str  # one of <=, ==, >=
    rhs: float

    def __post_init__(self):
        if self.cmp not in CMP_CODES:
            raise ValueError(f"unknown comparator {self.cmp!r}")
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=np.float64))
        object.__setattr__(self, "rhs", float(self.rhs))


class ProblemSpec:
    """Declarative 0-1 linear program: sense, dimension, linear constraints."""

    def __init__(self, dimension, sense=MINIMIZE, constraints=(), problem_id="",
                 meta=None, validate=True):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = int(dimension)
        self.sense = sense
        sense_sign(sense)  # validates
        self.constraints = list(constraints)
        for con in self.constraints:
            if len(con.coeffs) != self.dimension:
                raise DimensionError("constraint coefficient length != dimension")
        self.problem_id = problem_id
        self.meta = dict(meta or {})
        self._matrix_cache = None
        if validate and not self.is_feasible():
            raise InfeasibleError(f"spec {problem_id!r} has no feasible point")

    def constraint_arrays(self):
        """(A, ops, rhs) in the kernel's calling convention."""
        if self._matrix_cache is None:
            m = len(self.constraints)
            a = np.zeros((m, self.dimension))
            ops = np.zeros(m, dtype=np.int8)
            rhs = np.zeros(m)
            for i, con in enumerate(self.constraints):
                a[i] = con.coeffs
                ops[i] = CMP_CODES[con.cmp]
                rhs[i] = con.rhs
            self._matrix_cache = (a, ops, rhs)
        return self._matrix_cache

    def is_feasible(self) -> bool:
        a, ops, rhs = self.constraint_arrays()
        status, _, _ = kernels.bnb_solve(np.zeros(self.dimension), a, ops, rhs)
        return status == kernels.BNB_OPTIMAL

    def check(self, x, tol=EPS) -> bool:
        """Does the assignment satisfy every constraint?"""
        for con in self.constraints:
            lhs = float(con.coeffs @ x)
            if con.cmp == "<=" and lhs > con.rhs + tol:
                return False
            if con.cmp == ">=" and lhs < con.rhs - tol:
                return False
            if con.cmp == "==" and abs(lhs - con.rhs) > tol:
                return False
        return True


def solve(spec: ProblemSpec, c) -> np.ndarray:
    """Optimal binary assignment for the spec's sense, lexicographic ties."""
    c = as_cost_vector(c, spec.dimension)
    a, ops, rhs = spec.constraint_arrays()
    coeffs = c if spec.sense == MINIMIZE else -c
    status, x, _ = kernels.bnb_solve(coeffs, a, ops, rhs)
    if status != kernels.BNB_OPTIMAL:
        raise InfeasibleError(f"spec {spec.problem_id!r} is infeasible")
    return x


def solve_stats(spec: ProblemSpec, c):
    """Like solve() but also returns the number of search nodes visited."""
    c = as_cost_vector(c, spec.dimension)
    a, ops, rhs = spec.constraint_arrays()
    coeffs = c if spec.sense == MINIMIZE else -c
    status, x, nodes = kernels.bnb_solve(coeffs, a, ops, rhs)
    if status != kernels.BNB_OPTIMAL:
        raise InfeasibleError(f"spec {spec.problem_id!r} is infeasible")
    return x, nodes


def enumerate_feasible(spec: ProblemSpec, limit: int | None = None):
    """All feasible assignments in lexicographic order (x_0 most significant).

    Refused for dimension > ENUM_MAX_DIM unless a limit is given.  Used as
    the correctness reference for the search-based solvers.
    """
    k = spec.dimension
    if k > ENUM_MAX_DIM and limit is None:
        raise ValueError(
            f"enumeration over 2^{k} assignments refused; pass an explicit limit"
        )
    a, ops, rhs = spec.constraint_arrays()
    out = []
    total = 1 << k
    chunk = 1 << min(k, 16)
    shifts = np.arange(k - 1, -1, -1)
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        ints = np.arange(start, stop, dtype=np.int64)
        bits = ((ints[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        ok = np.ones(len(bits), dtype=bool)
        for i in range(len(rhs)):
            lhs = bits @ a[i]
            if ops[i] == -1:
                ok &= lhs <= rhs[i] + EPS
            elif ops[i] == 1:
                ok &= lhs >= rhs[i] - EPS
            else:
                ok &= np.abs(lhs - rhs[i]) <= EPS
        for row in bits[ok]:
            out.append(row)
            if limit is not None and len(out) >= limit:
                return out
    return out


# --- grid shortest path ----------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """n x n grid, monotone east/north paths from southwest to northeast.

    Edge k of node (i, j), nodes in row-major order from the southwest
    corner: east edge first, then north edge.
    """

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid side must be >= 2")

    @property
    def num_edges(self) -> int:
        return 2 * self.n * (self.n - 1)

    def edge_index(self):
        """Maps (i, j, move) -> edge id under the canonical numbering."""
        ids = {}
        k = 0
        for i in range(self.n):
            for j in range(self.n):
                if j + 1 < self.n:
                    ids[(i, j, "E")] = k
                    k += 1
                if i + 1 < self.n:
                    ids[(i, j, "N")] = k
                    k += 1
        return ids

    def to_problem_spec(self) -> ProblemSpec:
        """Flow-conservation formulation over the same edge numbering."""
        n = self.n
        ids = self.edge_index()
        k = self.num_edges
        rows = []
        for i in range(n):
            for j in range(n):
                coeffs = np.zeros(k)
                for (a, b, mv), e in ids.items():
                    if (a, b) == (i, j):
                        coeffs[e] += 1.0  # outgoing
                    ta, tb = (a, b + 1) if mv == "E" else (a + 1, b)
                    if (ta, tb) == (i, j):
                        coeffs[e] -= 1.0  # incoming
                b_val = 0.0
                if (i, j) == (0, 0):
                    b_val = 1.0
                elif (i, j) == (n - 1, n - 1):
                    b_val = -1.0
                rows.append(Constraint(coeffs, "==", b_val))
        return ProblemSpec(
            k,
            MINIMIZE,
            rows,
            problem_id=f"grid{n}x{n}",
            meta={"kind": "grid", "grid_n": n},
        )


def solve_grid_shortest_path(grid: GridSpec, c) -> np.ndarray:
    c = as_cost_vector(c, grid.num_edges)
    return kernels.grid_shortest_path(grid.n, c)


def enumerate_grid_paths(grid: GridSpec) -> np.ndarray:
    """All monotone paths as edge-incidence rows, for reference checks."""
    import itertools

    n = grid.n
    ids = grid.edge_index()
    steps = 2 * (n - 1)
    rows = []
    for epos in itertools.combinations(range(steps), n - 1):
        v = np.zeros(grid.num_edges)
        i = j = 0
        for s in range(steps):
            if s in epos:
                v[ids[(i, j, "E")]] = 1.0
                j += 1
            else:
                v[ids[(i, j, "N")]] = 1.0
                i += 1
        rows.append(v)
    return np.array(rows)


# --- diverse bipartite matching ---------------------------------------------


def build_matching_spec(n1: int, n2: int, m, p: float, q: float,
                        problem_id: str = "matching") -> ProblemSpec:
    """Maximum matching with similarity/diversity rate constraints.

    ``m`` is the n1 x n2 same-field indicator.  Variable (i, j) sits at index
    i * n2 + j.  The rate constraints are linearised as
    sum((m_ij - p) x_ij) >= 0 and sum((1 - m_ij - q) x_ij) >= 0.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("p and q must lie in [0, 1]")
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (n1, n2) or not np.all((m == 0) | (m == 1)):
        raise ValueError("m must be a 0/1 matrix of shape (n1, n2)")
    k = n1 * n2
    cons = []
    for i in range(n1):
        coeffs = np.zeros(k)
        coeffs[i * n2: (i + 1) * n2] = 1.0
        cons.append(Constraint(coeffs, "<=", 1.0))
    for j in range(n2):
        coeffs = np.zeros(k)
        coeffs[j::n2] = 1.0
        cons.append(Constraint(coeffs, "<=", 1.0))
    cons.append(Constraint((m - p).ravel(), ">=", 0.0))
    cons.append(Constraint((1.0 - m - q).ravel(), ">=", 0.0))
    return ProblemSpec(
        k,
        MAXIMIZE,
        cons,
        problem_id=problem_id,
        meta={"kind": "matching", "n1": n1, "n2": n2, "p": p, "q": q},
    )


# --- energy-cost-aware scheduling --------------------------------------------


def build_scheduling_spec(durations, windows, power, resource_usages, capacities,
                          machines: int, timeslots: int,
                          problem_id: str = "scheduling"):
    """Time-indexed scheduling ILP plus the price-to-coefficient transform.

    One binary per (task, machine, start); assignment equality per task,
    a single aggregate row forcing out-of-window starts to zero, and one
    capacity row per (machine, resource, timeslot).  Returns
    ``(ProblemSpec, transform)`` where ``transform`` is the (K x T) matrix
    with ``objective = (transform @ prices) @ x``; each coefficient is the
    task's power draw summed over its occupied slots, so the image
    ``transform.T @ x`` is a nonnegative per-slot occupancy weight vector.

    durations: d_j per task; windows: (e_j, l_j) with e_j + d_j <= l_j <= T;
    power: p_j per task; resource_usages: (tasks, resources); capacities:
    (machines, resources).
    """
    durations = [int(d) for d in durations]
    power = np.asarray(power, dtype=np.float64)
    usage = np.asarray(resource_usages, dtype=np.float64)
    caps = np.asarray(capacities, dtype=np.float64)
    tasks = len(durations)
    n_res = usage.shape[1] if usage.ndim == 2 else 0
    if caps.shape != (machines, n_res):
        raise ValueError("capacities must have shape (machines, resources)")
    t_count = int(timeslots)

    for j, (d, (e, l)) in enumerate(zip(durations, windows)):
        if d < 1 or e < 0 or l > t_count or e + d > l:
            raise InfeasibleError(f"task {j} has no feasible start in its window")

    def var(j, mach, t):
        return (j * machines + mach) * t_count + t

    k = tasks * machines * t_count
    transform = np.zeros((k, t_count))
    in_window = np.zeros(k, dtype=bool)
    for j in range(tasks):
        e, l = windows[j]
        for mach in range(machines):
            for t in range(t_count):
                idx = var(j, mach, t)
                if e <= t and t + durations[j] <= l:
                    in_window[idx] = True
                    transform[idx, t: t + durations[j]] = power[j]

    cons = []
    for j in range(tasks):
        coeffs = np.zeros(k)
        for mach in range(machines):
            for t in range(t_count):
                coeffs[var(j, mach, t)] = 1.0
        cons.append(Constraint(coeffs, "==", 1.0))
    if not in_window.all():
        cons.append(Constraint((~in_window).astype(np.float64), "==", 0.0))
    for mach in range(machines):
        for r in range(n_res):
            for t in range(t_count):
                coeffs = np.zeros(k)
                for j in range(tasks):
                    lo = max(0, t - durations[j] + 1)
                    for t0 in range(lo, t + 1):
                        coeffs[var(j, mach, t0)] += usage[j, r]
                if coeffs.any():
                    cons.append(Constraint(coeffs, "<=", caps[mach, r]))

    spec = ProblemSpec(
        k,
        MINIMIZE,
        cons,
        problem_id=problem_id,
        meta={
            "kind": "scheduling",
            "tasks": tasks,
            "machines": machines,
            "timeslots": t_count,
        },
    )
    return spec, transform


# --- problem bundle ----------------------------------------------------------


class Problem:
    """A spec plus the solve strategy and the prediction-space reduction.

    ``predict_dim`` is the length of the cost vectors the model predicts;
    ``item_of`` maps a binary assignment to the vector the losses rank with
    (the assignment itself, or its image under the scheduling transform).
    """

    def __init__(self, spec: ProblemSpec, grid: GridSpec | None = None,
                 transform: np.ndarray | None = None):
        self.spec = spec
        self.grid = grid
        self.transform = transform
        if transform is not None and transform.shape[0] != spec.dimension:
            raise DimensionError("transform rows must match spec dimension")

    @classmethod
    def from_spec(cls, spec: ProblemSpec) -> "Problem":
        return cls(spec)

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "Problem":
        return cls(grid.to_problem_spec(), grid=grid)

    @classmethod
    def for_scheduling(cls, spec: ProblemSpec, transform: np.ndarray) -> "Problem":
        return cls(spec, transform=transform)

    @property
    def sense(self) -> str:
        return self.spec.sense

    @property
    def predict_dim(self) -> int:
        if self.transform is not None:
            return self.transform.shape[1]
        return self.spec.dimension

    def solve(self, c_pred) -> np.ndarray:
        c_pred = as_cost_vector(c_pred, self.predict_dim)
        if self.grid is not None:
            return kernels.grid_shortest_path(self.grid.n, c_pred)
        if self.transform is not None:
            return solve(self.spec, self.transform @ c_pred)
        return solve(self.spec, c_pred)

    def item_of(self, x: np.ndarray) -> np.ndarray:
        if self.transform is not None:
            return self.transform.T @ x
        return x


# --- JSON serialization -------------------------------------------------------


def save_problem(problem: Problem, path) -> None:
    spec = problem.spec
    meta = dict(spec.meta)
    meta["problem_id"] = spec.problem_id
    if problem.transform is not None:
        meta["transform"] = problem.transform.tolist()
    doc = {
        "sense": spec.sense,
        "dimension": spec.dimension,
        "constraints": [
            {"coeffs": c.coeffs.tolist(), "cmp": c.cmp, "rhs": c.rhs}
            for c in spec.constraints
        ],
        "meta": meta,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_problem(path) -> Problem:
    with open(path) as fh:
        doc = json.load(fh)
    meta = dict(doc.get("meta", {}))
    problem_id = meta.pop("problem_id", "")
    transform = meta.pop("transform", None)
    spec = ProblemSpec(
        doc["dimension"],
        doc["sense"],
        [Constraint(np.asarray(c["coeffs"]), c["cmp"], c["rhs"])
         for c in doc["constraints"]],
        problem_id=problem_id,
        meta=meta,
        validate=False,
    )
    grid = GridSpec(meta["grid_n"]) if meta.get("kind") == "grid" else None
    tf = np.asarray(transform, dtype=np.float64) if transform is not None else None
    return Problem(spec, grid=grid, transform=tf)
