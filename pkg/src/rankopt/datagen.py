"""Synthetic dataset generators for the three problem families.

All generators are pure functions of their seed: identical seeds give
bitwise-identical datasets.  Splits are drawn from independent child
streams of the master seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .core import Dataset, DatasetBundle, Instance, load_dataset, save_dataset
from .oracles import (
    GridSpec,
    InfeasibleError,
    Problem,
    build_matching_spec,
    build_scheduling_spec,
    load_problem,
    save_problem,
)

FAMILIES = ("shortest_path", "matching", "scheduling")


@dataclass
class ShortestPathGenSpec:
    """Grid shortest-path data: polynomial latent model with multiplicative
    uniform noise.

    Edge cost j of instance i:  ((B x_i)_j / sqrt(P) + 3)^deg * eps_ij with
    x_i standard normal, eps uniform in [1 - noise_halfwidth,
    1 + noise_halfwidth] and B a fixed 0/1 latent matrix.  Instances whose
    polynomial base would be nonpositive are redrawn (counted in the bundle
    meta) so odd degrees never flip cost signs.
    """

    deg: int = 1
    n: int = 5
    feature_dim: int = 5
    noise_halfwidth: float = 0.5
    n_train: int = 1000
    n_val: int = 250
    n_test: int = 10000
    seed: int = 0
    b_matrix: list | None = None

    def __post_init__(self):
        if self.deg < 1 or int(self.deg) != self.deg:
            raise ValueError("deg must be a positive integer")
        if min(self.n_train, self.n_val, self.n_test) < 1:
            raise ValueError("split sizes must be positive")
        if not 0.0 <= self.noise_halfwidth < 1.0:
            raise ValueError("noise halfwidth must lie in [0, 1)")


def gen_shortest_path(genspec: ShortestPathGenSpec):
    """Returns (DatasetBundle, Problem) for the grid family."""
    grid = GridSpec(genspec.n)
    k = grid.num_edges
    p = genspec.feature_dim
    ss = np.random.SeedSequence(genspec.seed)
    b_ss, *split_ss = ss.spawn(4)
    if genspec.b_matrix is not None:
        b = np.asarray(genspec.b_matrix, dtype=np.float64)
        if b.shape != (k, p):
            raise ValueError(f"b_matrix must have shape ({k}, {p})")
    else:
        b = np.random.default_rng(b_ss).binomial(1, 0.5, size=(k, p)).astype(float)

    resampled = 0

    def draw_split(n, child, split):
        nonlocal resampled
        rng = np.random.default_rng(child)
        x = rng.standard_normal((n, p))
        base = x @ b.T / np.sqrt(p) + 3.0
        bad = np.flatnonzero((base <= 0.0).any(axis=1))
        while len(bad):
            resampled += len(bad)
            x[bad] = rng.standard_normal((len(bad), p))
            base[bad] = x[bad] @ b.T / np.sqrt(p) + 3.0
            bad = bad[(base[bad] <= 0.0).any(axis=1)]
        eps = rng.uniform(1.0 - genspec.noise_halfwidth,
                          1.0 + genspec.noise_halfwidth, size=(n, k))
        costs = base ** genspec.deg * eps
        return Dataset(
            [Instance(x[i], costs[i]) for i in range(n)],
            split=split,
            problem_id=f"shortest_path_deg{genspec.deg}",
        )

    bundle = DatasetBundle(
        train=draw_split(genspec.n_train, split_ss[0], "train"),
        validation=draw_split(genspec.n_val, split_ss[1], "validation"),
        test=draw_split(genspec.n_test, split_ss[2], "test"),
        meta={"genspec": asdict(genspec), "family": "shortest_path",
              "n_resampled": resampled},
    )
    return bundle, Problem.for_grid(grid)


def gen_matching(n1: int, n2: int, p: float, q: float, feature_dim: int = 4,
                 n_train: int = 100, n_val: int = 50, n_test: int = 200,
                 seed: int = 0, n_fields: int = 2):
    """Diverse bipartite matching with synthetic edge rewards.

    Per-edge features are iid Gaussian; the true reward of an edge is a
    fixed random linear map of its own features plus an offset and Gaussian
    noise.  The same-field indicator comes from a random assignment of the
    n1 + n2 nodes to ``n_fields`` fields.  Instance features are the
    concatenated per-edge features (K * feature_dim).
    """
    if max(n1, n2) > 8:
        raise ValueError("matching generator is desk-scale: n1, n2 <= 8")
    k = n1 * n2
    ss = np.random.SeedSequence(seed)
    setup_ss, *split_ss = ss.spawn(4)
    rng = np.random.default_rng(setup_ss)
    fields1 = rng.integers(0, n_fields, size=n1)
    fields2 = rng.integers(0, n_fields, size=n2)
    m = (fields1[:, None] == fields2[None, :]).astype(float)
    w = rng.standard_normal(feature_dim) / np.sqrt(feature_dim)
    spec = build_matching_spec(n1, n2, m, p, q,
                               problem_id=f"matching_p{p}_q{q}")

    def draw_split(n, child, split):
        r = np.random.default_rng(child)
        feats = r.standard_normal((n, k, feature_dim))
        rewards = feats @ w + 1.0 + 0.25 * r.standard_normal((n, k))
        return Dataset(
            [Instance(feats[i].ravel(), rewards[i]) for i in range(n)],
            split=split,
            problem_id=spec.problem_id,
        )

    bundle = DatasetBundle(
        train=draw_split(n_train, split_ss[0], "train"),
        validation=draw_split(n_val, split_ss[1], "validation"),
        test=draw_split(n_test, split_ss[2], "test"),
        meta={"family": "matching",
              "genspec": {"n1": n1, "n2": n2, "p": p, "q": q,
                          "feature_dim": feature_dim, "seed": seed,
                          "n_fields": n_fields, "n_train": n_train,
                          "n_val": n_val, "n_test": n_test}},
    )
    return bundle, Problem.from_spec(spec)


def gen_scheduling(tasks: int = 3, machines: int = 2, timeslots: int = 12,
                   feature_dim: int = 2, n_train: int = 150, n_val: int = 50,
                   n_test: int = 200, seed: int = 0, max_param_draws: int = 50):
    """Energy-cost-aware scheduling with synthetic per-slot prices.

    Machine and task parameters are drawn once per spec; draws that produce
    an infeasible program are rejected and resampled.  Each timeslot has its
    own Gaussian feature block; prices are a positive linear map of the
    slot's features plus noise, clipped from below at 0.01.  Instance
    features are the concatenated per-slot blocks (T * feature_dim).
    """
    if tasks > 3 or machines > 3 or timeslots > 24:
        raise ValueError("scheduling generator is desk-scale: "
                         "tasks <= 3, machines <= 3, timeslots <= 24")
    ss = np.random.SeedSequence(seed)
    setup_ss, *split_ss = ss.spawn(4)
    rng = np.random.default_rng(setup_ss)

    spec = transform = None
    for _ in range(max_param_draws):
        durations = rng.integers(1, min(4, timeslots) + 1, size=tasks).tolist()
        windows = []
        for d in durations:
            e = int(rng.integers(0, max(1, timeslots - d)))
            l = int(rng.integers(e + d, timeslots + 1))
            windows.append((e, l))
        power = rng.integers(1, 4, size=tasks).astype(float)
        usage = np.ones((tasks, 1))
        caps = np.ones((machines, 1))
        try:
            spec, transform = build_scheduling_spec(
                durations, windows, power, usage, caps, machines, timeslots,
                problem_id=f"scheduling_{tasks}x{machines}x{timeslots}")
            break
        except InfeasibleError:
            continue
    if spec is None:
        raise InfeasibleError("could not draw a feasible scheduling spec")

    w = rng.standard_normal(feature_dim) / np.sqrt(feature_dim)

    def draw_split(n, child, split):
        r = np.random.default_rng(child)
        feats = r.standard_normal((n, timeslots, feature_dim))
        prices = feats @ w + 5.0 + 0.5 * r.standard_normal((n, timeslots))
        prices = np.maximum(prices, 0.01)
        return Dataset(
            [Instance(feats[i].ravel(), prices[i]) for i in range(n)],
            split=split,
            problem_id=spec.problem_id,
        )

    bundle = DatasetBundle(
        train=draw_split(n_train, split_ss[0], "train"),
        validation=draw_split(n_val, split_ss[1], "validation"),
        test=draw_split(n_test, split_ss[2], "test"),
        meta={"family": "scheduling",
              "genspec": {"tasks": tasks, "machines": machines,
                          "timeslots": timeslots, "feature_dim": feature_dim,
                          "seed": seed, "n_train": n_train, "n_val": n_val,
                          "n_test": n_test}},
    )
    return bundle, Problem.for_scheduling(spec, transform)


def generate_family(family: str, params: dict):
    """Dispatch a generator by family name with keyword params."""
    if family == "shortest_path":
        return gen_shortest_path(ShortestPathGenSpec(**params))
    if family == "matching":
        return gen_matching(**params)
    if family == "scheduling":
        return gen_scheduling(**params)
    raise ValueError(f"unknown problem family {family!r}")


# --- on-disk layout: one directory per generated problem ---------------------
#   train.jsonl / validation.jsonl / test.jsonl / problem.json / genspec.json


def save_bundle(bundle: DatasetBundle, problem: Problem, outdir,
                force: bool = False) -> None:
    os.makedirs(outdir, exist_ok=True)
    paths = {s: os.path.join(outdir, f"{s}.jsonl")
             for s in ("train", "validation", "test")}
    existing = [p for p in paths.values() if os.path.exists(p)]
    if existing and not force:
        raise FileExistsError(
            f"refusing to overwrite {existing[0]}; pass force to allow")
    save_dataset(bundle.train, paths["train"])
    save_dataset(bundle.validation, paths["validation"])
    save_dataset(bundle.test, paths["test"])
    save_problem(problem, os.path.join(outdir, "problem.json"))
    with open(os.path.join(outdir, "genspec.json"), "w") as fh:
        json.dump(bundle.meta, fh, indent=2, sort_keys=True)


def load_bundle(path):
    """Returns (DatasetBundle, Problem) from a generated directory."""
    problem = load_problem(os.path.join(path, "problem.json"))
    meta = {}
    manifest = os.path.join(path, "genspec.json")
    if os.path.exists(manifest):
        with open(manifest) as fh:
            meta = json.load(fh)
    pid = problem.spec.problem_id
    bundle = DatasetBundle(
        train=load_dataset(os.path.join(path, "train.jsonl"), "train", pid),
        validation=load_dataset(os.path.join(path, "validation.jsonl"),
                                "validation", pid),
        test=load_dataset(os.path.join(path, "test.jsonl"), "test", pid),
        meta=meta,
    )
    return bundle, problem
