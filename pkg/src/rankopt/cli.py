"""Command-line front end: generate data, train, evaluate, sweep, selftest.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import itertools
import json
import os
import subprocess
import sys

import click
import numpy as np
import yaml

from . import __version__, datagen, selftest as selftest_mod
from .backend import backend_name
from .losses import LossSpec
from .model import LinearModel
from .pool import load_pool, save_pool
from .training import TrainConfig, split_metrics, train

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

#: sweep keys that belong to the loss block rather than the train block
LOSS_KEYS = {"kind", "margin", "temperature", "mix_alpha", "pair_scheme",
             "pairdiff_norm"}
TRAIN_KEYS = {"lr", "epochs", "p_solve", "seed", "update_granularity",
              "val_every", "select_best", "shuffle", "bias", "timing",
              "stabilize_lr", "max_lr_halvings"}


def tool_version() -> str:
    ver = f"rankopt {__version__}"
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if desc.returncode == 0:
            ver += f" ({desc.stdout.strip()})"
    except (OSError, subprocess.SubprocessError):
        pass
    return ver


def provenance(cfg: dict) -> dict:
    return {"config": cfg, "version": tool_version(), "backend": backend_name()}


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise click.UsageError("config root must be a mapping")
    return cfg


def fail_config(errors: list[str]):
    for err in errors:
        click.echo(f"config error: {err}", err=True)
    sys.exit(EXIT_CONFIG)


def build_train_config(cfg: dict, errors: list[str]) -> TrainConfig | None:
    block = dict(cfg.get("train", {}))
    loss_block = dict(block.pop("loss", {}))
    model_block = cfg.get("model", {})
    if "bias" in model_block:
        block.setdefault("bias", model_block["bias"])
    unknown = set(block) - TRAIN_KEYS
    for key in sorted(unknown):
        errors.append(f"train: unknown key {key!r}")
    loss = None
    try:
        loss = LossSpec.from_dict(loss_block)
    except (TypeError, ValueError) as exc:
        errors.append(f"train.loss: {exc}")
    try:
        return TrainConfig(loss=loss or LossSpec(),
                           **{k: v for k, v in block.items() if k in TRAIN_KEYS})
    except (TypeError, ValueError) as exc:
        errors.append(f"train: {exc}")
        return None


def build_data(cfg: dict, errors: list[str]):
    """Resolve the problem block to (bundle, problem) or record errors."""
    block = dict(cfg.get("problem", {}))
    path = block.pop("dataset", None)
    family = block.pop("family", None)
    if path is not None:
        if not os.path.isdir(path):
            errors.append(f"problem.dataset: no such directory {path!r}")
            return None
        try:
            return datagen.load_bundle(path)
        except (OSError, ValueError, KeyError) as exc:
            errors.append(f"problem.dataset: {exc}")
            return None
    if family is None:
        errors.append("problem: either 'family' or 'dataset' is required")
        return None
    if family not in datagen.FAMILIES:
        errors.append(f"problem.family: unknown family {family!r}")
        return None
    try:
        return datagen.generate_family(family, block)
    except (TypeError, ValueError) as exc:
        errors.append(f"problem: {exc}")
        return None


def resolved_config(cfg: dict, tc: TrainConfig) -> dict:
    out = {k: v for k, v in cfg.items() if k != "train"}
    out["train"] = tc.to_dict()
    return out


@click.group()
def main():
    """Decision-focused learning with ranking losses over solution pools."""


@main.command()
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output", default=None,
              help="Output directory (defaults to the config's 'output').")
@click.option("--force", is_flag=True, help="Overwrite existing dataset files.")
def generate(config_path, output, force):
    """Generate a synthetic dataset directory from the problem block."""
    cfg = load_config(config_path)
    errors: list[str] = []
    block = dict(cfg.get("problem", {}))
    family = block.pop("family", None)
    block.pop("dataset", None)
    if family not in datagen.FAMILIES:
        errors.append(f"problem.family: unknown or missing family {family!r}")
    outdir = output or cfg.get("output")
    if not outdir:
        errors.append("output directory required (config 'output' or -o)")
    if errors:
        fail_config(errors)
    try:
        bundle, problem = datagen.generate_family(family, block)
    except (TypeError, ValueError) as exc:
        fail_config([f"problem: {exc}"])
    try:
        datagen.save_bundle(bundle, problem, outdir, force=force)
    except FileExistsError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)
    n = (len(bundle.train), len(bundle.validation), len(bundle.test))
    click.echo(f"wrote {outdir}: train/val/test = {n[0]}/{n[1]}/{n[2]}, "
               f"K={problem.spec.dimension}, predict_dim={problem.predict_dim}")


@main.command(name="train")
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output", default=None)
@click.option("--warm-pool", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Preload pool items from a JSONL dump.")
@click.option("--dump-pool", type=click.Path(dir_okay=False), default=None,
              help="Write the final pool to a JSONL dump.")
def train_cmd(config_path, output, warm_pool, dump_pool):
    """Train a model; writes checkpoint.json, run.csv and metrics.json."""
    cfg = load_config(config_path)
    errors: list[str] = []
    tc = build_train_config(cfg, errors)
    data = build_data(cfg, errors)
    outdir = output or cfg.get("output")
    if not outdir:
        errors.append("output directory required (config 'output' or -o)")
    if errors:
        fail_config(errors)
    bundle, problem = data
    os.makedirs(outdir, exist_ok=True)

    warm = None
    if warm_pool:
        warm = load_pool(warm_pool, problem.predict_dim)
    model, record = train(bundle, problem, tc, warm_pool=warm)

    prov = provenance(resolved_config(cfg, tc))
    record.to_csv(os.path.join(outdir, "run.csv"), prov)
    model.save(os.path.join(outdir, "checkpoint.json"))
    metrics = {
        "test": split_metrics(model, bundle.test, problem),
        "best_epoch": record.best_epoch,
        "effective_lr": record.effective_lr,
        "aborted": record.aborted,
        "_provenance": prov,
    }
    with open(os.path.join(outdir, "metrics.json"), "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
    if dump_pool and record.pool is not None:
        save_pool(record.pool, dump_pool)
    if record.aborted:
        click.echo("training aborted on non-finite loss; "
                   "last good checkpoint written", err=True)
        sys.exit(EXIT_NUMERICAL)
    click.echo(f"trained {tc.loss.kind}: test regret "
               f"{metrics['test']['mean_pct_regret']:.4%} "
               f"(best epoch {record.best_epoch})")


@main.command(name="evaluate")
@click.option("--checkpoint", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--split", default="test",
              type=click.Choice(["train", "validation", "test"]))
@click.option("-o", "--output", default=None, type=click.Path(dir_okay=False))
def evaluate_cmd(checkpoint, data_dir, split, output):
    """Deterministic metrics for a checkpoint on a named split."""
    bundle, problem = datagen.load_bundle(data_dir)
    model = LinearModel.load(checkpoint)
    dataset = getattr(bundle, split)
    if (model.feature_dim != dataset.feature_dim
            or model.out_dim != problem.predict_dim):
        fail_config([
            f"checkpoint shape ({model.feature_dim}, {model.out_dim}) does not "
            f"match dataset P={dataset.feature_dim}, K={problem.predict_dim}"])
    metrics = split_metrics(model, dataset, problem)
    doc = {"split": split, "metrics": metrics,
           "_provenance": provenance({"checkpoint": checkpoint,
                                      "data": data_dir})}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    click.echo(text)


@main.command()
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", default=None)
@click.option("--jobs", default=1, show_default=True,
              help="Worker processes; 1 keeps per-run timing faithful.")
def sweep(config_path, output, jobs):
    """Cross-product hyperparameter sweep; one CSV row per run."""
    cfg = load_config(config_path)
    errors: list[str] = []
    tc = build_train_config(cfg, errors)
    sweep_block = dict(cfg.get("sweep", {}))
    params = dict(sweep_block.get("params", {}))
    trials = int(sweep_block.get("trials", 1))
    max_runs = int(sweep_block.get("max_runs", 256))
    for key in params:
        if key not in LOSS_KEYS | TRAIN_KEYS:
            errors.append(f"sweep.params: unknown hyperparameter {key!r}")
    outdir = output or cfg.get("output")
    if not outdir:
        errors.append("output directory required (config 'output' or -o)")
    data = build_data(cfg, errors)
    if errors:
        fail_config(errors)

    keys = sorted(params)
    combos = list(itertools.product(*[params[k] for k in keys])) or [()]
    total = len(combos) * trials
    if total > max_runs:
        click.echo(f"sweep would launch {total} runs, cap is {max_runs}",
                   err=True)
        sys.exit(EXIT_CONFIG)

    bundle, problem = data
    os.makedirs(outdir, exist_ok=True)
    tasks = []
    for combo in combos:
        overrides = dict(zip(keys, combo))
        for trial in range(trials):
            tasks.append((overrides, trial))

    def run_one(overrides, trial):
        base = tc.to_dict()
        loss_d = base.pop("loss")
        for k, v in overrides.items():
            (loss_d if k in LOSS_KEYS else base)[k] = v
        base["seed"] = int(base["seed"]) + trial
        cfg_run = TrainConfig(loss=LossSpec.from_dict(loss_d), **base)
        model, record = train(bundle, problem, cfg_run)
        test = split_metrics(model, bundle.test, problem)
        secs = [r.seconds for r in record.rows]
        return {
            **overrides,
            "kind": cfg_run.loss.kind,
            "trial": trial,
            "seed": cfg_run.seed,
            "effective_lr": record.effective_lr,
            "aborted": int(record.aborted),
            "best_epoch": record.best_epoch,
            "test_pct_regret": test["mean_pct_regret"],
            "test_regret": test["mean_regret"],
            "test_mse": test["mean_mse"],
            "val_pct_regret": min((r.val_pct_regret for r in record.rows
                                   if not np.isnan(r.val_pct_regret)),
                                  default=float("nan")),
            "val_mse": next((r.val_mse for r in reversed(record.rows)
                             if not np.isnan(r.val_mse)), float("nan")),
            "mean_epoch_seconds": float(np.mean(secs)) if secs else 0.0,
            "oracle_calls": record.rows[-1].oracle_calls if record.rows else 0,
        }

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker,
                                 [(config_path, o, t) for o, t in tasks]))
    else:
        rows = [run_one(o, t) for o, t in tasks]

    out_csv = os.path.join(outdir, "sweep.csv")
    prov = provenance(resolved_config(cfg, tc))
    cols = list(rows[0].keys())
    with open(out_csv, "w") as fh:
        for key in sorted(prov):
            fh.write(f"# {key}: {json.dumps(prov[key], sort_keys=True)}\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in cols) + "\n")
    click.echo(f"wrote {out_csv} ({len(rows)} runs)")


def _sweep_worker(task):
    """Process-pool entry: re-resolve everything from the config path so the
    payload stays picklable and each run is independently reproducible."""
    config_path, overrides, trial = task
    cfg = load_config(config_path)
    errors: list[str] = []
    tc = build_train_config(cfg, errors)
    data = build_data(cfg, errors)
    if errors:
        raise RuntimeError("; ".join(errors))
    bundle, problem = data
    base = tc.to_dict()
    loss_d = base.pop("loss")
    for k, v in overrides.items():
        (loss_d if k in LOSS_KEYS else base)[k] = v
    base["seed"] = int(base["seed"]) + trial
    cfg_run = TrainConfig(loss=LossSpec.from_dict(loss_d), **base)
    model, record = train(bundle, problem, cfg_run)
    test = split_metrics(model, bundle.test, problem)
    secs = [r.seconds for r in record.rows]
    return {
        **overrides,
        "kind": cfg_run.loss.kind,
        "trial": trial,
        "seed": cfg_run.seed,
        "effective_lr": record.effective_lr,
        "aborted": int(record.aborted),
        "best_epoch": record.best_epoch,
        "test_pct_regret": test["mean_pct_regret"],
        "test_regret": test["mean_regret"],
        "test_mse": test["mean_mse"],
        "val_pct_regret": min((r.val_pct_regret for r in record.rows
                               if not np.isnan(r.val_pct_regret)),
                              default=float("nan")),
        "val_mse": next((r.val_mse for r in reversed(record.rows)
                         if not np.isnan(r.val_mse)), float("nan")),
        "mean_epoch_seconds": float(np.mean(secs)) if secs else 0.0,
        "oracle_calls": record.rows[-1].oracle_calls if record.rows else 0,
    }


@main.command()
def selftest():
    """Run the built-in worked-example and identity checks."""
    results = selftest_mod.run(verbose=True)
    bad = [name for name, ok, _ in results if not ok]
    click.echo(f"{len(results) - len(bad)}/{len(results)} checks passed "
               f"(backend: {backend_name()})")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
