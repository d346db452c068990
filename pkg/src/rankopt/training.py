"""The training loop: pool-backed gradient descent with probabilistic pool
growth, per-epoch validation tracking and best-checkpoint selection.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, DatasetBundle, TIE_TOL, objective_value, sense_sign
from .losses import LossSpec, evaluate_loss
from .model import LinearModel, NumericalAbort
from .pool import SolutionPool, init_pool, maybe_grow

GRANULARITIES = ("per_instance", "per_epoch")

CSV_HEADER = "epoch,train_loss,val_pct_regret,val_mse,pool_size,oracle_calls,seconds"


@dataclass
class TrainConfig:
    loss: LossSpec = field(default_factory=LossSpec)
    lr: float = 0.1
    epochs: int = 50
    p_solve: float = 0.1
    seed: int = 0
    update_granularity: str = "per_instance"
    val_every: int = 1
    select_best: bool = True
    shuffle: bool = True
    bias: bool = True
    timing: bool = True
    stabilize_lr: bool = False
    max_lr_halvings: int = 4

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.p_solve <= 1.0:
            raise ValueError("p_solve must lie in [0, 1]")
        if self.update_granularity not in GRANULARITIES:
            raise ValueError(f"unknown update granularity {self.update_granularity!r}")
        if self.val_every < 1:
            raise ValueError("val_every must be >= 1")

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["loss"] = self.loss.to_dict()
        return d


@dataclass
class EpochRow:
    epoch: int
    train_loss: float
    val_pct_regret: float
    val_mse: float
    pool_size: int
    oracle_calls: int
    seconds: float


@dataclass
class RunRecord:
    rows: list[EpochRow] = field(default_factory=list)
    aborted: bool = False
    effective_lr: float = 0.0
    best_epoch: int | None = None
    final: dict = field(default_factory=dict)
    pool: SolutionPool | None = None

    def to_csv(self, path, provenance: dict | None = None) -> None:
        import json

        with open(path, "w") as fh:
            if provenance:
                for key in sorted(provenance):
                    fh.write(f"# {key}: {json.dumps(provenance[key], sort_keys=True)}\n")
            fh.write(CSV_HEADER + "\n")
            for r in self.rows:
                fh.write(
                    f"{r.epoch},{r.train_loss!r},{r.val_pct_regret!r},"
                    f"{r.val_mse!r},{r.pool_size},{r.oracle_calls},{r.seconds!r}\n"
                )


class _OptCache:
    """True-optimum objectives and solve results for a dataset split."""

    def __init__(self, dataset: Dataset, problem):
        self.opt_objs = np.empty(len(dataset))
        for i, ins in enumerate(dataset.instances):
            x = ins.optimal if ins.optimal is not None else problem.solve(ins.cost)
            self.opt_objs[i] = objective_value(problem.item_of(x), ins.cost)


def split_metrics(model: LinearModel, dataset: Dataset, problem,
                  opt_cache: _OptCache | None = None) -> dict:
    """Mean regret, mean percentage regret (zero-optimum instances excluded)
    and mean prediction MSE over a split, plus the pct-regret quartiles."""
    if opt_cache is None:
        opt_cache = _OptCache(dataset, problem)
    sigma = sense_sign(problem.sense)
    n = len(dataset)
    regrets = np.empty(n)
    pct = np.empty(n)
    mse_sum = 0.0
    for i, ins in enumerate(dataset.instances):
        c_hat = model.forward(ins.features)
        v_hat = problem.solve(c_hat)
        obj = objective_value(problem.item_of(v_hat), ins.cost)
        gap = sigma * (obj - opt_cache.opt_objs[i])
        regrets[i] = gap
        denom = abs(opt_cache.opt_objs[i])
        pct[i] = gap / denom if denom > TIE_TOL else np.nan
        err = ins.cost - c_hat
        mse_sum += float(err @ err)
    defined = pct[~np.isnan(pct)]
    q = (np.percentile(defined, [25, 50, 75]) if len(defined)
         else np.array([np.nan] * 3))
    return {
        "mean_regret": float(regrets.mean()),
        "mean_pct_regret": float(defined.mean()) if len(defined) else float("nan"),
        "pct_regret_q25": float(q[0]),
        "pct_regret_median": float(q[1]),
        "pct_regret_q75": float(q[2]),
        "mean_mse": mse_sum / n,
        "n": n,
        "n_undefined_pct": int(np.isnan(pct).sum()),
    }


def evaluate(model: LinearModel, dataset: Dataset, problem) -> dict:
    return split_metrics(model, dataset, problem)


def _epoch_pass(model, train_ds, pool, config, problem, order, psolve_rng,
                grow: bool):
    """One pass over the training split; returns (mean loss, growth calls)."""
    total = 0.0
    calls = 0
    per_instance = config.update_granularity == "per_instance"
    sense = problem.sense
    for i in order:
        ins = train_ds.instances[i]
        c_hat = model.forward(ins.features)
        if grow:
            if maybe_grow(pool, c_hat, config.p_solve, psolve_rng, problem):
                calls += 1
        res = evaluate_loss(config.loss, c_hat, ins.cost, pool, sense)
        total += res.value
        if per_instance:
            model.step(ins.features, res.gradient, config.lr)
        else:
            model.accumulate(ins.features, res.gradient)
    if not per_instance:
        model.step_accumulated(config.lr)
    return total / len(train_ds), calls


def _stabilized_lr(model, train_ds, pool, config, problem) -> float:
    """Halve the learning rate until one no-growth epoch decreases the mean
    training loss (deterministic, consumes no RNG).  Guards against
    configured rates that plain gradient descent cannot tolerate."""
    order = np.arange(len(train_ds))

    def mean_loss(m):
        return sum(
            evaluate_loss(config.loss, m.forward(ins.features), ins.cost, pool,
                          problem.sense).value
            for ins in train_ds.instances
        ) / len(train_ds)

    base = mean_loss(model)
    lr = config.lr
    for _ in range(config.max_lr_halvings + 1):
        probe = model.copy()
        cfg = TrainConfig(**{**config.__dict__, "lr": lr})
        try:
            _epoch_pass(probe, train_ds, pool, cfg, problem, order, None, False)
            if probe.is_finite() and mean_loss(probe) < base:
                return lr
        except NumericalAbort:
            pass
        lr /= 2.0
    return lr


def train(bundle: DatasetBundle, problem, config: TrainConfig,
          warm_pool: SolutionPool | None = None):
    """Pool-based decision-focused training over the bundle's train split.

    Returns ``(model, RunRecord)``.  With ``select_best`` the returned model
    is the epoch checkpoint with the lowest validation percentage regret.
    Aborts (restoring the last finite checkpoint) when a loss or gradient
    goes non-finite.  ``warm_pool`` items are merged in after pool
    initialization.
    """
    train_ds, val_ds = bundle.train, bundle.validation
    ss = np.random.SeedSequence(config.seed)
    init_ss, shuffle_ss, psolve_ss = ss.spawn(3)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    psolve_rng = np.random.default_rng(psolve_ss)

    model = LinearModel.init(train_ds.feature_dim, problem.predict_dim,
                             seed=init_ss, bias=config.bias)
    n_init_solves = sum(1 for ins in train_ds.instances if ins.optimal is None)
    pool = init_pool(train_ds, problem)
    if warm_pool is not None:
        for item in warm_pool.items():
            pool.add(item)
    oracle_calls = n_init_solves

    record = RunRecord(effective_lr=config.lr, pool=pool)
    if config.stabilize_lr:
        record.effective_lr = _stabilized_lr(model, train_ds, pool, config, problem)
        config = TrainConfig(**{**config.__dict__, "lr": record.effective_lr})

    val_cache = _OptCache(val_ds, problem)
    best = (np.inf, None)
    last_good = model.copy()

    for epoch in range(1, config.epochs + 1):
        order = (shuffle_rng.permutation(len(train_ds)) if config.shuffle
                 else np.arange(len(train_ds)))
        t0 = time.perf_counter()
        try:
            mean_loss, calls = _epoch_pass(
                model, train_ds, pool, config, problem, order, psolve_rng, True)
            if not (np.isfinite(mean_loss) and model.is_finite()):
                raise NumericalAbort("non-finite epoch loss or parameters")
        except NumericalAbort:
            record.aborted = True
            model = last_good
            break
        seconds = (time.perf_counter() - t0) if config.timing else 0.0
        oracle_calls += calls
        model.epoch = epoch

        val_reg = val_mse = float("nan")
        if epoch % config.val_every == 0 or epoch == config.epochs:
            m = split_metrics(model, val_ds, problem, val_cache)
            val_reg, val_mse = m["mean_pct_regret"], m["mean_mse"]
            if config.select_best and val_reg < best[0]:
                best = (val_reg, model.copy())
                record.best_epoch = epoch
        record.rows.append(EpochRow(epoch, mean_loss, val_reg, val_mse,
                                    len(pool), oracle_calls, seconds))
        last_good = model.copy()

    final_model = best[1] if (config.select_best and best[1] is not None) else model
    final_model.seed = config.seed
    return final_model, record
