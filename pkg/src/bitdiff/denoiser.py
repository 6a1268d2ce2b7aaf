"""Two-headed denoising network and its training loss.

The network reads a (possibly corrupted) bit row as floats, a timestep, and an
encoded condition, and emits two logit vectors of width d: one for the clean
row, one for the applied flip mask. Trunk: input projection to the hidden
width, a sinusoidal timestep embedding refined by a two-layer GELU MLP, a
linear condition projector (summed with the timestep embedding), three
residual blocks that each consume the combined embedding, and a single linear
head of width 2d split into the two predictions.

The loss is logit-space binary cross-entropy, summed over the d dimensions of
each head and averaged over the batch, with the two head losses added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

HIDDEN_DIM = 256
TIME_DIM = 256
N_BLOCKS = 3
BLOCK_MULT = 2  # inner width of each residual block, as a multiple of hidden


def sinusoidal_embed(t, dim: int) -> torch.Tensor:
    """Transformer-style timestep embedding: pair k is (sin(t*w_k), cos(t*w_k)).

    Frequencies w_k = 10000^(-2k/dim) for k = 0..dim/2-1. Accepts a scalar or a
    1-d batch of timesteps; pairs are laid out as [sins..., coss...], so pair k
    lives at indices (k, dim/2 + k).
    """
    if dim % 2 != 0:
        raise ValueError("embedding dim must be even")
    t_tensor = torch.as_tensor(t, dtype=torch.float64)
    squeeze = t_tensor.ndim == 0
    t_tensor = t_tensor.reshape(-1, 1)
    k = torch.arange(dim // 2, dtype=torch.float64)
    freqs = torch.pow(10000.0, -2.0 * k / dim)
    angles = t_tensor * freqs
    emb = torch.cat([torch.sin(angles), torch.cos(angles)], dim=1)
    return emb[0] if squeeze else emb


class ResidualBlock(nn.Module):
    """Identity-skip block; the combined embedding enters through an affine adapter."""

    def __init__(self, hidden: int, mult: int = BLOCK_MULT):
        super().__init__()
        self.adapter = nn.Linear(hidden, hidden)
        self.fc1 = nn.Linear(hidden, mult * hidden)
        self.fc2 = nn.Linear(mult * hidden, hidden)

    def forward(self, h: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        u = h + self.adapter(emb)
        return h + self.fc2(F.gelu(self.fc1(u)))


class DenoiserNet(nn.Module):
    """q(clean bits, flip mask | noisy bits, timestep, condition) as two logit heads."""

    def __init__(
        self,
        d: int,
        cond_dim: int,
        hidden: int = HIDDEN_DIM,
        time_dim: int = TIME_DIM,
        n_blocks: int = N_BLOCKS,
        block_mult: int = BLOCK_MULT,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        if d < 1 or cond_dim < 1:
            raise ValueError("d and cond_dim must be positive")
        self.d = d
        self.cond_dim = cond_dim
        self.time_dim = time_dim
        self.input_proj = nn.Linear(d, hidden)
        self.time_fc1 = nn.Linear(time_dim, hidden)
        self.time_fc2 = nn.Linear(hidden, hidden)
        self.cond_proj = nn.Linear(cond_dim, hidden)
        self.blocks = nn.ModuleList(ResidualBlock(hidden, block_mult) for _ in range(n_blocks))
        self.head = nn.Linear(hidden, 2 * d)
        self.to(dtype)

    @property
    def model_config(self) -> dict:
        return {
            "d": self.d,
            "cond_dim": self.cond_dim,
            "hidden": self.input_proj.out_features,
            "time_dim": self.time_dim,
            "n_blocks": len(self.blocks),
            "block_mult": self.blocks[0].fc1.out_features // self.input_proj.out_features,
        }

    def init_parameters(self, rng: np.random.Generator) -> None:
        """Seeded init: weights uniform in +/- 1/sqrt(fan_in), biases zero."""
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    bound = 1.0 / math.sqrt(module.in_features)
                    w = rng.uniform(-bound, bound, size=tuple(module.weight.shape))
                    module.weight.copy_(torch.as_tensor(w, dtype=module.weight.dtype))
                    module.bias.zero_()

    def forward(self, x_t: torch.Tensor, t, y_e: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Return (clean-row logits, flip-mask logits), each (batch, d)."""
        if x_t.ndim != 2 or x_t.shape[1] != self.d:
            raise ValueError(f"expected x_t of shape (batch, {self.d}), got {tuple(x_t.shape)}")
        if y_e.ndim != 2 or y_e.shape[1] != self.cond_dim:
            raise ValueError(f"expected condition of shape (batch, {self.cond_dim}), got {tuple(y_e.shape)}")
        dtype = self.head.weight.dtype
        t_tensor = torch.as_tensor(t, dtype=torch.float64)
        if t_tensor.ndim == 0:
            t_tensor = t_tensor.expand(x_t.shape[0])
        temb = sinusoidal_embed(t_tensor, self.time_dim).to(dtype)
        emb = self.time_fc2(F.gelu(self.time_fc1(temb))) + self.cond_proj(y_e)
        h = self.input_proj(x_t)
        for block in self.blocks:
            h = block(h, emb)
        out = self.head(h)
        return out[:, : self.d], out[:, self.d :]

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


@dataclass(frozen=True)
class LossBreakdown:
    """Per-head losses; ``total`` is defined as their sum and drives backward()."""

    loss_x: torch.Tensor
    loss_z: torch.Tensor

    @property
    def total(self) -> torch.Tensor:
        return self.loss_x + self.loss_z

    def detach_floats(self) -> tuple[float, float, float]:
        lx, lz = float(self.loss_x.detach()), float(self.loss_z.detach())
        return lx, lz, lx + lz


def bce_loss(
    x0_logits: torch.Tensor,
    z_logits: torch.Tensor,
    x0_true: torch.Tensor,
    z_true: torch.Tensor,
) -> LossBreakdown:
    """Stable logit-space BCE, summed over dimensions, averaged over the batch."""
    if x0_logits.shape != x0_true.shape or z_logits.shape != z_true.shape:
        raise ValueError("logits/targets shape mismatch")
    loss_x = F.binary_cross_entropy_with_logits(x0_logits, x0_true, reduction="none").sum(dim=-1).mean()
    loss_z = F.binary_cross_entropy_with_logits(z_logits, z_true, reduction="none").sum(dim=-1).mean()
    return LossBreakdown(loss_x=loss_x, loss_z=loss_z)
