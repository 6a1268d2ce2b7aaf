"""Command-line front end: train, sample, eval, roundtrip, steps-sweep.

Configuration comes from an optional TOML file plus flags; flags win. A run
writes its outputs atomically, records a manifest (resolved config, seeds,
sha256 of inputs), and train runs hold a lock on their output directory.
Exit codes: 0 success, 1 categorized run error, 2 usage error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .checkpoint import Checkpoint, file_sha256
from .codec import decode_table, encode_table
from .datasets import REGISTRY, get_preset
from .evaluation import EvalConfig, ml_efficiency, split_dataset, steps_sweep
from .sampling import SampleConfig, sample
from .schema import KIND_CONTINUOUS, TASK_CLASSIFICATION, infer_schema
from .tableio import load_csv, run_lock, write_csv_atomic, write_json_atomic, write_manifest
from .training import TrainConfig, fit

DATA_DIR_ENV = "BITDIFF_DATA_DIR"


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve(flag_value, *fallbacks):
    """First non-None among flag, config-file entries, and built-in default."""
    for value in (flag_value, *fallbacks):
        if value is not None:
            return value
    return None


def _parse_hints(hints: tuple[str, ...]) -> dict[str, str]:
    out = {}
    for item in hints:
        if "=" not in item:
            raise click.ClickException(f"config error: hint {item!r} must look like column=kind")
        name, kind = item.split("=", 1)
        out[name.strip()] = kind.strip()
    return out


def _resolve_data(data, dataset, section) -> tuple[Path, str | None]:
    dataset = _resolve(dataset, section.get("dataset"))
    data = _resolve(data, section.get("path"))
    if data is None and dataset is not None:
        preset = get_preset(dataset)
        base = os.environ.get(DATA_DIR_ENV)
        if not base:
            raise click.ClickException(
                f"config error: no --data given and {DATA_DIR_ENV} is not set for preset {dataset!r}"
            )
        data = Path(base) / preset.filename
    if data is None:
        raise click.ClickException("config error: provide --data or --dataset")
    return Path(data), dataset


def _check_preset_hash(path: Path, dataset: str | None) -> None:
    if dataset is None:
        return
    preset = get_preset(dataset)
    if preset.expected_sha256 and file_sha256(path) != preset.expected_sha256:
        raise click.ClickException(f"data error: {path} does not match the pinned sha256 for {dataset!r}")


def _target_task(target, task, dataset, section) -> tuple[str, str]:
    preset = get_preset(dataset) if dataset else None
    target = _resolve(target, section.get("target"), preset.target_column if preset else None)
    task = _resolve(task, section.get("task"), preset.task if preset else None, TASK_CLASSIFICATION)
    if target is None:
        raise click.ClickException("config error: provide --target or a dataset preset")
    return target, task


def _run(fn):
    try:
        fn()
    except click.ClickException:
        raise
    except (ValueError, FileNotFoundError, RuntimeError, KeyError) as exc:
        raise click.ClickException(f"run error: {exc}") from exc


@click.group()
@click.version_option(version=__version__)
def main():
    """Tabular data synthesis with binary diffusion."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="TOML config file; flags override it.")
@click.option("--data", type=click.Path(), help="Training CSV (RFC-4180 with header).")
@click.option("--dataset", type=click.Choice(sorted(REGISTRY)), help="Named benchmark preset.")
@click.option("--target", help="Target column name.")
@click.option("--task", type=click.Choice(["classification", "regression"]))
@click.option("--hint", "hints", multiple=True, help="Column type override, e.g. --hint Age=continuous.")
@click.option("--output-dir", type=click.Path(), default=None, help="Run directory (default: ./runs/<name>).")
@click.option("--train-steps", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--timesteps", type=int, default=None, help="Diffusion timesteps T.")
@click.option("--train-fraction", type=float, default=None, help="Train on this split of the data (default 0.8).")
@click.option("--split-seed", type=int, default=None, help="Seed for the train/test split (default 0).")
@click.option("--seed", type=int, default=None)
def train(config_path, data, dataset, target, task, hints, output_dir, train_steps, batch_size,
          learning_rate, timesteps, train_fraction, split_seed, seed):
    """Train a generator and write a checkpoint."""

    def go():
        doc = _load_config_file(config_path)
        data_sec, train_sec = doc.get("data", {}), doc.get("train", {})
        data_path, dataset_name = _resolve_data(data, dataset, data_sec)
        _check_preset_hash(data_path, dataset_name)
        target_name, task_name = _target_task(target, task, dataset_name, data_sec)
        preset_hints = get_preset(dataset_name).type_hints if dataset_name else None
        type_hints = _parse_hints(hints) or data_sec.get("hints") or preset_hints or None

        config = TrainConfig(
            learning_rate=_resolve(learning_rate, train_sec.get("learning_rate"), 1e-4),
            batch_size=_resolve(batch_size, train_sec.get("batch_size"), 256),
            train_steps=_resolve(train_steps, train_sec.get("train_steps"), 20_000),
            T=_resolve(timesteps, train_sec.get("timesteps"), 1000),
            seed=_resolve(seed, train_sec.get("seed"), 0),
        )
        fraction = _resolve(train_fraction, train_sec.get("train_fraction"), 0.8)
        split_seed_v = _resolve(split_seed, train_sec.get("split_seed"), 0)

        out_dir = Path(_resolve(output_dir, train_sec.get("output_dir"), "runs/train"))
        with run_lock(out_dir):
            frame = load_csv(data_path)
            if fraction < 1.0:
                stratify = target_name if task_name == TASK_CLASSIFICATION else None
                train_frame, _ = split_dataset(frame, fraction, split_seed_v, stratify_column=stratify)
            else:
                train_frame = frame
            schema = infer_schema(train_frame, target_name, task=task_name, type_hints=type_hints)
            click.echo(f"training on {len(train_frame)} rows, d={schema.total_bits} bits, "
                       f"{config.train_steps} steps")
            checkpoint = fit(train_frame, schema, config, log_path=out_dir / "training_log.csv")
            ckpt_path = checkpoint.save(out_dir / "checkpoint.bdck")
            write_json_atomic(schema.to_json_dict(), out_dir / "schema.json")
            write_manifest(
                out_dir,
                command="train",
                config={
                    "data": str(data_path), "dataset": dataset_name, "target": target_name,
                    "task": task_name, "train_fraction": fraction, "split_seed": split_seed_v,
                    "hints": type_hints, **checkpoint.train_config,
                },
                seeds={"train": config.seed, "split": split_seed_v},
                inputs={"data": data_path},
            )
            click.echo(f"wrote {ckpt_path}")

    _run(go)


@main.command("sample")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--n", "n_rows", type=int, default=None, help="Rows to generate (default 100).")
@click.option("--label", default=None, help="Condition label (class value, or target value for regression).")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Output CSV (default samples.csv).")
@click.option("--steps", type=int, default=None, help="Sampling steps (default 5).")
@click.option("--guidance", type=float, default=None, help="Guidance scale (default 5).")
@click.option("--threshold", type=float, default=None)
@click.option("--no-ema", is_flag=True, default=False, help="Sample with live weights instead of EMA.")
@click.option("--seed", type=int, default=None)
def sample_cmd(config_path, checkpoint_path, n_rows, label, out_path, steps, guidance, threshold, no_ema, seed):
    """Generate labeled synthetic rows from a checkpoint."""

    def go():
        doc = _load_config_file(config_path).get("sample", {})
        checkpoint = Checkpoint.load(checkpoint_path)
        target = checkpoint.schema.target
        n = _resolve(n_rows, doc.get("n"), 100)
        y = _resolve(label, doc.get("label"))
        if y is None:
            if target.task == TASK_CLASSIFICATION:
                raise click.ClickException(
                    f"config error: --label is required; classes: {list(target.classes)}"
                )
            raise click.ClickException("config error: --label is required (a target value)")
        config = SampleConfig(
            n_steps=_resolve(steps, doc.get("n_steps"), 5),
            guidance_scale=_resolve(guidance, doc.get("guidance_scale"), 5.0),
            threshold=_resolve(threshold, doc.get("threshold"), 0.5),
            use_ema=not no_ema,
            seed=_resolve(seed, doc.get("seed"), 0),
        )
        out = Path(_resolve(out_path, doc.get("out"), "samples.csv"))
        y_value = float(y) if target.task != TASK_CLASSIFICATION else y
        frame = sample(checkpoint, y_value, n, config=config)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_csv_atomic(frame, out)
        write_json_atomic(
            {
                "command": "sample",
                "checkpoint_sha256": file_sha256(checkpoint_path),
                "config": config.to_json_dict(),
                "label": y,
                "n_rows": n,
                "seeds": {"sample": config.seed},
            },
            out.with_name(out.name + ".meta.json"),
        )
        click.echo(f"wrote {n} rows to {out}")

    _run(go)


@main.command("eval")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(), help="Full real CSV; split 80/20 like training.")
@click.option("--dataset", type=click.Choice(sorted(REGISTRY)))
@click.option("--out", "out_path", type=click.Path(), default=None, help="Report JSON (default report.json).")
@click.option("--n-sets", type=int, default=None, help="Synthetic sets to average over (default 5).")
@click.option("--steps", type=int, default=None)
@click.option("--guidance", type=float, default=None)
@click.option("--train-fraction", type=float, default=None)
@click.option("--split-seed", type=int, default=None)
@click.option("--seed", type=int, default=None)
def eval_cmd(config_path, checkpoint_path, data, dataset, out_path, n_sets, steps, guidance,
             train_fraction, split_seed, seed):
    """Score synthetic data by training downstream models on it (ML efficiency)."""

    def go():
        doc = _load_config_file(config_path)
        eval_sec, data_sec = doc.get("eval", {}), doc.get("data", {})
        data_path, dataset_name = _resolve_data(data, dataset, data_sec)
        _check_preset_hash(data_path, dataset_name)
        checkpoint = Checkpoint.load(checkpoint_path)
        preset = get_preset(dataset_name) if dataset_name else None

        config = EvalConfig(
            train_fraction=_resolve(train_fraction, eval_sec.get("train_fraction"), 0.8),
            n_synthetic_sets=_resolve(n_sets, eval_sec.get("n_synthetic_sets"), 5),
            lr_max_iter=_resolve(eval_sec.get("lr_max_iter"), preset.lr_max_iter if preset else None, 100),
            dt_max_depth=_resolve(eval_sec.get("dt_max_depth"), preset.dt_max_depth if preset else None, 6),
            rf_max_depth=_resolve(eval_sec.get("rf_max_depth"), preset.rf_max_depth if preset else None, 12),
            rf_n_estimators=_resolve(
                eval_sec.get("rf_n_estimators"), preset.rf_n_estimators if preset else None, 75
            ),
            seed=_resolve(seed, eval_sec.get("seed"), 0),
            sample=SampleConfig(
                n_steps=_resolve(steps, eval_sec.get("n_steps"), 5),
                guidance_scale=_resolve(guidance, eval_sec.get("guidance_scale"), 5.0),
            ),
        )
        split_seed_v = _resolve(split_seed, eval_sec.get("split_seed"), 0)

        frame = load_csv(data_path)
        target = checkpoint.schema.target
        stratify = target.name if target.task == TASK_CLASSIFICATION else None
        real_train, real_test = split_dataset(frame, config.train_fraction, split_seed_v, stratify_column=stratify)
        report = ml_efficiency(
            checkpoint, real_train, real_test, config,
            dataset_name=dataset_name or data_path.stem,
            checkpoint_hash=file_sha256(checkpoint_path),
        )
        out = Path(_resolve(out_path, eval_sec.get("out"), "report.json"))
        out.parent.mkdir(parents=True, exist_ok=True)
        write_json_atomic(report.to_json_dict(), out)
        write_json_atomic(
            {
                "command": "eval",
                "config": report.to_json_dict()["config"],
                "seeds": {"eval": config.seed, "split": split_seed_v},
                "input_sha256": {"data": file_sha256(data_path), "checkpoint": report.checkpoint_hash},
            },
            out.with_name(out.name + ".meta.json"),
        )
        click.echo(report.to_text())
        click.echo(f"wrote {out}")

    _run(go)


@main.command()
@click.option("--data", type=click.Path(), required=True)
@click.option("--target", required=True)
@click.option("--task", type=click.Choice(["classification", "regression"]), default="classification")
@click.option("--hint", "hints", multiple=True)
def roundtrip(data, target, task, hints):
    """Encode then decode a dataset; report deviations (exit 1 on any categorical mismatch)."""

    def go():
        frame = load_csv(data)
        schema = infer_schema(frame, target, task=task, type_hints=_parse_hints(hints) or None)
        bits = encode_table(frame, schema)
        decoded = decode_table(bits, schema)
        mismatches = 0
        over_bound = 0
        click.echo(f"{'column':<28} {'kind':<12} {'max deviation / mismatches'}")
        for spec in schema.columns:
            if spec.kind == KIND_CONTINUOUS:
                original = frame[spec.name].astype(float).to_numpy()
                deviation = float(np.abs(decoded[spec.name].to_numpy() - original).max())
                bound = (spec.max - spec.min) * 2**-20
                over_bound += int(deviation > bound)
                click.echo(f"{spec.name:<28} {spec.kind:<12} {deviation:.3e} (bound {bound:.3e})")
            else:
                bad = int((decoded[spec.name].astype(str).to_numpy() != frame[spec.name].astype(str).to_numpy()).sum())
                mismatches += bad
                click.echo(f"{spec.name:<28} {spec.kind:<12} {bad} mismatches")
        click.echo(f"total categorical mismatches: {mismatches}")
        if mismatches or over_bound:
            raise click.ClickException(
                "run error: round-trip exceeded codec tolerances "
                f"({mismatches} categorical mismatches, {over_bound} columns over the float bound)"
            )

    _run(go)


@main.command("steps-sweep")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(), required=True)
@click.option("--steps", default="5,10,50,100", help="Comma-separated sampling step counts.")
@click.option("--out", "out_path", type=click.Path(), default="steps_sweep.csv")
@click.option("--n-sets", type=int, default=5)
@click.option("--guidance", type=float, default=5.0)
@click.option("--train-fraction", type=float, default=0.8)
@click.option("--split-seed", type=int, default=0)
@click.option("--seed", type=int, default=0)
@click.option("--dataset", type=click.Choice(sorted(REGISTRY)))
def steps_sweep_cmd(checkpoint_path, data, steps, out_path, n_sets, guidance, train_fraction,
                    split_seed, seed, dataset):
    """Run the evaluation at several sampling-step counts and write a plot-ready CSV."""

    def go():
        steps_list = [int(s) for s in steps.split(",") if s.strip()]
        checkpoint = Checkpoint.load(checkpoint_path)
        preset = get_preset(dataset) if dataset else None
        config = EvalConfig(
            train_fraction=train_fraction,
            n_synthetic_sets=n_sets,
            lr_max_iter=(preset.lr_max_iter if preset else None) or 100,
            dt_max_depth=preset.dt_max_depth if preset else 6,
            rf_max_depth=preset.rf_max_depth if preset else 12,
            rf_n_estimators=preset.rf_n_estimators if preset else 75,
            seed=seed,
            sample=SampleConfig(guidance_scale=guidance),
        )
        frame = load_csv(data)
        target = checkpoint.schema.target
        stratify = target.name if target.task == TASK_CLASSIFICATION else None
        real_train, real_test = split_dataset(frame, train_fraction, split_seed, stratify_column=stratify)
        table = steps_sweep(checkpoint, real_train, real_test, steps_list, config,
                            dataset_name=dataset or Path(data).stem)
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_csv_atomic(table, out)
        write_json_atomic(
            {
                "command": "steps-sweep",
                "steps": steps_list,
                "seeds": {"eval": seed, "split": split_seed},
                "input_sha256": {"data": file_sha256(data), "checkpoint": file_sha256(checkpoint_path)},
            },
            out.with_name(out.name + ".meta.json"),
        )
        click.echo(table.to_string(index=False))
        click.echo(f"wrote {out}")

    _run(go)


if __name__ == "__main__":
    main()
