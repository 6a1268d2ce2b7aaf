"""bitdiff: tabular data synthesis with binary diffusion.

Mixed-type tables are losslessly encoded into fixed-width bit rows (32-bit
float patterns for min-max-normalized continuous columns, binary codes for
categoricals), a small two-headed MLP learns to undo XOR bit-flip noise under
a BCE loss with classifier-free guidance, and a few-step denoise/re-noise loop
generates labeled synthetic rows. An evaluation harness measures ML efficiency
(train on synthetic, test on real) with standard downstream models.
"""

from .checkpoint import Checkpoint, file_sha256
from .codec import (
    BinaryTableCodec,
    decode_categorical,
    decode_continuous,
    decode_row,
    decode_table,
    encode_categorical,
    encode_condition,
    encode_continuous,
    encode_row,
    encode_table,
    null_condition,
)
from .denoiser import DenoiserNet, LossBreakdown, bce_loss, sinusoidal_embed
from .evaluation import EvalConfig, EvalReport, ml_efficiency, split_dataset, steps_sweep
from .noise import NoiseSchedule, apply_noise, flip_probability, sample_mask
from .sampling import SampleConfig, guided_logits, sample, select_timesteps
from .schema import ColumnSpec, TableSchema, TargetSpec, infer_schema
from .synthesizer import BinaryDiffusionSynthesizer
from .training import EmaState, TrainConfig, cfg_dropout, ema_update, fit, train_step

__version__ = "0.1.0"

__all__ = [
    "BinaryDiffusionSynthesizer",
    "BinaryTableCodec",
    "Checkpoint",
    "ColumnSpec",
    "DenoiserNet",
    "EmaState",
    "EvalConfig",
    "EvalReport",
    "LossBreakdown",
    "NoiseSchedule",
    "SampleConfig",
    "TableSchema",
    "TargetSpec",
    "TrainConfig",
    "apply_noise",
    "bce_loss",
    "cfg_dropout",
    "decode_categorical",
    "decode_continuous",
    "decode_row",
    "decode_table",
    "ema_update",
    "encode_categorical",
    "encode_condition",
    "encode_continuous",
    "encode_row",
    "encode_table",
    "file_sha256",
    "fit",
    "flip_probability",
    "guided_logits",
    "infer_schema",
    "ml_efficiency",
    "null_condition",
    "sample",
    "sample_mask",
    "select_timesteps",
    "sinusoidal_embed",
    "split_dataset",
    "steps_sweep",
    "train_step",
]
