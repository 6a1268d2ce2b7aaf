"""The forward corruption process: timestep-to-flip-probability mapping and XOR noise.

Corruption is bit flipping: a random binary mask, each bit set with the
schedule's flip probability p(t), XORed onto the clean row. p runs from 0 at
t=0 to 0.5 at t=T, so t=T is maximal corruption (a uniformly random row) and
the t=0 step of the sampler is a no-op XOR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEDULE_SHAPES = ("linear", "cosine")


@dataclass(frozen=True)
class NoiseSchedule:
    """Maps timestep t in [0, T] to a per-bit flip probability in [0, 0.5]."""

    T: int = 1000
    shape: str = "linear"

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.shape not in SCHEDULE_SHAPES:
            raise ValueError(f"unknown schedule shape {self.shape!r}; choose from {SCHEDULE_SHAPES}")

    def flip_probability(self, t):
        """p(t) for a scalar or array timestep; monotone with p(0)=0 and p(T)=0.5."""
        t_arr = np.asarray(t, dtype=np.float64)
        if np.any(t_arr < 0) or np.any(t_arr > self.T):
            raise ValueError(f"timestep out of range [0, {self.T}]")
        if self.shape == "linear":
            p = 0.5 * t_arr / self.T
        else:  # cosine
            p = 0.25 * (1.0 - np.cos(np.pi * t_arr / self.T))
        return float(p) if np.isscalar(t) or t_arr.ndim == 0 else p

    def to_json_dict(self) -> dict:
        return {"T": self.T, "shape": self.shape}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NoiseSchedule":
        return cls(T=int(doc["T"]), shape=doc.get("shape", "linear"))


def flip_probability(t: int, schedule: NoiseSchedule) -> float:
    return schedule.flip_probability(t)


def sample_mask(d: int, t: int, schedule: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """Draw a length-d mask with bits independently 1 at probability p(t)."""
    if d <= 0:
        raise ValueError("d must be positive")
    p = schedule.flip_probability(t)
    return (rng.random(d) < p).astype(np.uint8)


def sample_mask_batch(
    shape: tuple[int, int], t: np.ndarray, schedule: NoiseSchedule, rng: np.random.Generator
) -> np.ndarray:
    """Draw an (n, d) mask with per-row timesteps; one rng draw per bit, row-major."""
    n, d = shape
    p = schedule.flip_probability(np.asarray(t))
    return (rng.random((n, d)) < np.asarray(p).reshape(n, 1)).astype(np.uint8)


def apply_noise(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Elementwise XOR; its own inverse, so the same call denoises."""
    x = np.asarray(x, dtype=np.uint8)
    z = np.asarray(z, dtype=np.uint8)
    if x.shape != z.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {z.shape}")
    return x ^ z
