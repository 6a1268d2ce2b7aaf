"""Single-file checkpoint container.

Layout: 8-byte magic, little-endian uint64 header length, a JSON header
(schema, noise schedule, training config, model config, tensor manifest), then
the concatenated raw little-endian float32 tensor blobs. Live parameters are
stored under ``model.<name>``, the EMA shadow under ``ema.<name>``. Writes are
atomic (temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .denoiser import DenoiserNet
from .noise import NoiseSchedule
from .schema import TableSchema

MAGIC = b"BDCKPT01"
CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Everything needed to resume or sample: schema, schedule, config, weights."""

    schema: TableSchema
    schedule: NoiseSchedule
    train_config: dict
    model_config: dict
    params: dict[str, np.ndarray]
    ema_params: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def build_model(self, use_ema: bool = True, dtype: torch.dtype = torch.float32) -> DenoiserNet:
        model = DenoiserNet(dtype=dtype, **self.model_config)
        source = self.ema_params if use_ema else self.params
        state = {name: torch.as_tensor(arr, dtype=dtype) for name, arr in source.items()}
        model.load_state_dict(state)
        model.eval()
        return model

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        names = [("model." + k, v) for k, v in self.params.items()]
        names += [("ema." + k, v) for k, v in self.ema_params.items()]
        manifest = []
        offset = 0
        blobs = []
        for name, arr in names:
            blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            manifest.append(
                {"name": name, "shape": list(arr.shape), "dtype": "float32", "offset": offset, "nbytes": len(blob)}
            )
            blobs.append(blob)
            offset += len(blob)
        header = {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "schema": self.schema.to_json_dict(),
            "schedule": self.schedule.to_json_dict(),
            "train_config": self.train_config,
            "model_config": self.model_config,
            "meta": self.meta,
            "tensors": manifest,
        }
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", len(header_bytes)))
            fh.write(header_bytes)
            for blob in blobs:
                fh.write(blob)
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        path = Path(path)
        with open(path, "rb") as fh:
            magic = fh.read(len(MAGIC))
            if magic != MAGIC:
                raise ValueError(f"{path}: not a checkpoint file (bad magic)")
            (header_len,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(header_len).decode("utf-8"))
            blob = fh.read()
        if header["format_version"] != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint format {header['format_version']}")
        params: dict[str, np.ndarray] = {}
        ema_params: dict[str, np.ndarray] = {}
        for entry in header["tensors"]:
            start, nbytes = entry["offset"], entry["nbytes"]
            arr = np.frombuffer(blob[start : start + nbytes], dtype="<f4").reshape(entry["shape"]).copy()
            name = entry["name"]
            if name.startswith("model."):
                params[name[len("model.") :]] = arr
            elif name.startswith("ema."):
                ema_params[name[len("ema.") :]] = arr
            else:
                raise ValueError(f"{path}: unknown tensor namespace in {name!r}")
        return cls(
            schema=TableSchema.from_json_dict(header["schema"]),
            schedule=NoiseSchedule.from_json_dict(header["schedule"]),
            train_config=header["train_config"],
            model_config=header["model_config"],
            params=params,
            ema_params=ema_params,
            meta=header.get("meta", {}),
        )


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
