"""Training loop: batch corruption, condition dropout, Adam updates, EMA shadow.

Each step draws one timestep per batch item (uniform on {1..T}), flips bits
with the schedule's probability, randomly nulls the condition for
classifier-free guidance, and takes one Adam step on the two-headed BCE loss.
An EMA copy of the parameters is refreshed every ``ema_update_every`` steps
and is the set used at sampling time.

All randomness flows through one explicitly seeded numpy generator, so runs
are bit-reproducible on a machine; torch is deterministic compute only.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import torch

from .checkpoint import Checkpoint
from .codec import encode_condition_column, encode_table, null_condition
from .denoiser import BLOCK_MULT, HIDDEN_DIM, N_BLOCKS, TIME_DIM, DenoiserNet, LossBreakdown, bce_loss
from .noise import NoiseSchedule, sample_mask_batch
from .schema import TableSchema

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 0.0
    batch_size: int = 256
    # Desk-scale default; 50_000 and 500_000 are the full-scale presets.
    train_steps: int = 20_000
    ema_decay: float = 0.995
    ema_update_every: int = 10
    cfg_drop_prob: float = 0.1
    T: int = 1000
    schedule_shape: str = "linear"
    seed: int = 0
    hidden_dim: int = HIDDEN_DIM
    time_dim: int = TIME_DIM
    n_blocks: int = N_BLOCKS
    block_mult: int = BLOCK_MULT
    log_every: int = 100

    def __post_init__(self) -> None:
        if not 0.0 < self.ema_decay < 1.0:
            raise ValueError("ema_decay must be in (0, 1)")
        if not 0.0 <= self.cfg_drop_prob <= 1.0:
            raise ValueError("cfg_drop_prob must be in [0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.train_steps < 1:
            raise ValueError("train_steps must be >= 1")
        if self.ema_update_every < 1:
            raise ValueError("ema_update_every must be >= 1")

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule(T=self.T, shape=self.schedule_shape)


@dataclass
class EmaState:
    """Shadow copy of the parameters, nudged toward the live ones geometrically."""

    shadow: dict[str, torch.Tensor]
    updates: int = 0

    @classmethod
    def from_model(cls, model: DenoiserNet) -> "EmaState":
        return cls(shadow={k: v.detach().clone() for k, v in model.state_dict().items()})


def ema_update(model: DenoiserNet, ema: EmaState, decay: float, step: int, every: int = 10) -> EmaState:
    """Blend the shadow toward the live parameters on steps divisible by ``every``."""
    if step % every != 0:
        return ema
    with torch.no_grad():
        for name, value in model.state_dict().items():
            if ema.shadow[name].shape != value.shape:
                raise ValueError(f"EMA shape mismatch for {name}")
            ema.shadow[name].mul_(decay).add_(value, alpha=1.0 - decay)
    ema.updates += 1
    return ema


def cfg_dropout(y_e: np.ndarray, target, p: float, rng: np.random.Generator) -> np.ndarray:
    """With probability p, replace the condition by the target's null token."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    return null_condition(target) if rng.random() < p else np.asarray(y_e).copy()


def train_step(
    model: DenoiserNet,
    x0_bits: np.ndarray,
    conditions: np.ndarray,
    null_token: np.ndarray,
    schedule: NoiseSchedule,
    optimizer: torch.optim.Optimizer,
    cfg_drop_prob: float,
    rng: np.random.Generator,
) -> LossBreakdown:
    """One optimizer step on one batch of clean bit rows and encoded labels."""
    n, d = x0_bits.shape
    if d != model.d:
        raise ValueError(f"batch width {d} does not match model d={model.d}")
    t = rng.integers(1, schedule.T + 1, size=n)
    z = sample_mask_batch((n, d), t, schedule, rng)
    x_t = x0_bits ^ z

    y_e = conditions.copy()
    dropped = rng.random(n) < cfg_drop_prob
    y_e[dropped] = null_token

    dtype = model.head.weight.dtype
    x_t_f = torch.as_tensor(x_t, dtype=dtype)
    x0_f = torch.as_tensor(x0_bits, dtype=dtype)
    z_f = torch.as_tensor(z, dtype=dtype)
    y_f = torch.as_tensor(y_e, dtype=dtype)

    x0_logits, z_logits = model(x_t_f, t, y_f)
    breakdown = bce_loss(x0_logits, z_logits, x0_f, z_f)
    optimizer.zero_grad(set_to_none=True)
    breakdown.total.backward()
    optimizer.step()
    return breakdown


def _minibatches(n: int, batch_size: int, steps: int, rng: np.random.Generator):
    """Yield ``steps`` index batches, reshuffling the full dataset each epoch."""
    emitted = 0
    while emitted < steps:
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield order[start : start + batch_size]
            emitted += 1
            if emitted >= steps:
                return


def fit(
    table: pd.DataFrame,
    schema: TableSchema,
    config: TrainConfig,
    log_path: str | Path | None = None,
) -> Checkpoint:
    """Train a denoiser on an encodable table and return the checkpoint.

    The table must contain every schema column plus the target column; the
    target is encoded as the condition only, never into the bit rows.
    """
    if schema.target.name not in table.columns:
        raise ValueError(f"table is missing target column {schema.target.name!r}")
    x0 = encode_table(table, schema)
    conditions = encode_condition_column(table[schema.target.name].tolist(), schema.target)
    null_token = null_condition(schema.target)
    n = x0.shape[0]

    rng = np.random.default_rng(config.seed)
    model = DenoiserNet(
        d=schema.total_bits,
        cond_dim=schema.target.condition_dim,
        hidden=config.hidden_dim,
        time_dim=config.time_dim,
        n_blocks=config.n_blocks,
        block_mult=config.block_mult,
    )
    model.init_parameters(rng)
    model.train()
    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=config.learning_rate,
        betas=ADAM_BETAS,
        eps=ADAM_EPS,
        weight_decay=config.weight_decay,
    )
    ema = EmaState.from_model(model)
    schedule = config.schedule()

    log_rows: list[tuple[int, float, float, float]] = []
    first_chunk: list[float] = []
    last_chunk: list[float] = []
    tail_start = config.train_steps - max(1, config.train_steps // 10)

    step = 0
    for idx in _minibatches(n, config.batch_size, config.train_steps, rng):
        step += 1
        breakdown = train_step(
            model, x0[idx], conditions[idx], null_token, schedule, optimizer,
            config.cfg_drop_prob, rng,
        )
        ema_update(model, ema, config.ema_decay, step, every=config.ema_update_every)
        lx, lz, total = breakdown.detach_floats()
        if step <= max(1, config.train_steps // 10):
            first_chunk.append(total)
        if step > tail_start:
            last_chunk.append(total)
        if step % config.log_every == 0 or step == 1 or step == config.train_steps:
            log_rows.append((step, lx, lz, total))

    if log_path is not None:
        log_path = Path(log_path)
        tmp = log_path.with_name(log_path.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "loss_x", "loss_z", "total"])
            writer.writerows(log_rows)
        tmp.replace(log_path)

    params = {k: v.detach().numpy().astype(np.float32) for k, v in model.state_dict().items()}
    ema_params = {k: v.numpy().astype(np.float32) for k, v in ema.shadow.items()}
    meta = {
        "steps": config.train_steps,
        "rows": int(n),
        "mean_loss_first_tenth": float(np.mean(first_chunk)),
        "mean_loss_last_tenth": float(np.mean(last_chunk)),
        "ema_updates": ema.updates,
    }
    return Checkpoint(
        schema=schema,
        schedule=schedule,
        train_config=asdict(config),
        model_config=model.model_config,
        params=params,
        ema_params=ema_params,
        meta=meta,
    )
