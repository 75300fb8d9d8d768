"""Learnable parameter container: init, shape table, flat-binary serде.

Initialization follows a residual-safe scheme: the modulation heads, gate
head, the second compressor layer, and the second time-MLP layer start at
zero so the stack initially passes the reference content stream and the
raw time embedding through unchanged (the gate itself sits at 0.5, the
sigmoid of a zero logit).  ``safe_start=False`` gives every tensor small
seeded uniform values instead; used where information must flow from the
first step, e.g. the linear probe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from .config import CondConfig

_MAGIC = b"CFW1"
_UNIFORM_SCALE = 0.1


def shape_table(config: CondConfig) -> dict[str, tuple[int, ...]]:
    c1, c2, c3, c4 = config.conv_channels
    d = config.d_model
    return {
        "conv1_w": (c1, 3, 3, 3),
        "conv1_b": (c1,),
        "conv2_w": (c2, c1, 3, 3),
        "conv2_b": (c2,),
        "conv3_w": (c3, c2, 3, 3),
        "conv3_b": (c3,),
        "conv4_w": (c4, c3, 3, 3),
        "conv4_b": (c4,),
        "enc_mlp_w": (config.d_z, c4),
        "enc_mlp_b": (config.d_z,),
        "adapter_con_w": (d, config.d_enc_content),
        "adapter_con_b": (d,),
        "adapter_con_ln_g": (d,),
        "adapter_con_ln_b": (d,),
        "adapter_dir_w": (d, config.d_enc_directive),
        "adapter_dir_b": (d,),
        "adapter_dir_ln_g": (d,),
        "adapter_dir_ln_b": (d,),
        "film_q_w": (2 * d, config.d_z),
        "film_q_b": (2 * d,),
        "film_kv_w": (2 * d, config.d_z),
        "film_kv_b": (2 * d,),
        "gate_w": (1, config.d_enc_directive),
        "gate_b": (1,),
        "comp_w1": (d, d),
        "comp_b1": (d,),
        "comp_w2": (d, d),
        "comp_b2": (d,),
        "comp_pool": (config.len_directive_ctx, config.len_directive),
        "psi_w1": (config.psi_hidden, config.d_z),
        "psi_b1": (config.psi_hidden,),
        "psi_w2": (config.d_time, config.psi_hidden),
        "psi_b2": (config.d_time,),
    }


# tensors zeroed by the residual-safe initialization
SAFE_START_ZEROED = (
    "film_q_w",
    "film_q_b",
    "film_kv_w",
    "film_kv_b",
    "gate_w",
    "gate_b",
    "comp_w2",
    "comp_b2",
    "psi_w2",
    "psi_b2",
)


@dataclass
class CondParams:
    config: CondConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        table = shape_table(self.config)
        if set(self.tensors) != set(table):
            missing = set(table) - set(self.tensors)
            extra = set(self.tensors) - set(table)
            raise ShapeError(f"tensor set mismatch: missing={missing} extra={extra}")
        for name, shape in table.items():
            if self.tensors[name].shape != shape:
                raise ShapeError(
                    f"{name}: expected {shape}, got {self.tensors[name].shape}"
                )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def copy(self) -> "CondParams":
        return CondParams(
            config=self.config,
            tensors={k: v.copy() for k, v in self.tensors.items()},
        )


def init_cond_params(
    config: CondConfig | None = None, seed: int = 0, safe_start: bool = True
) -> CondParams:
    config = config or CondConfig()
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in shape_table(config).items():
        if name.endswith("_ln_g"):
            tensors[name] = np.ones(shape)
        elif name == "comp_pool":
            # starts as a mean pool over directive tokens
            tensors[name] = np.full(shape, 1.0 / config.len_directive)
        elif name.endswith("_b") and (safe_start or name not in SAFE_START_ZEROED):
            tensors[name] = np.zeros(shape)
        elif safe_start and name in SAFE_START_ZEROED:
            tensors[name] = np.zeros(shape)
        else:
            tensors[name] = rng.uniform(-_UNIFORM_SCALE, _UNIFORM_SCALE, shape)
    return CondParams(config=config, tensors=tensors)


def save_params(params: CondParams, path) -> None:
    """Versioned flat binary: magic, JSON shape-table header, raw float64."""
    names = sorted(params.tensors)
    header = {
        "version": 1,
        "config": params.config.__dict__ | {
            "conv_channels": list(params.config.conv_channels)
        },
        "tensors": [{"name": n, "shape": list(params.tensors[n].shape)} for n in names],
        "dtype": "float64",
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(header_bytes).to_bytes(8, "big"))
        fh.write(header_bytes)
        for name in names:
            fh.write(np.ascontiguousarray(params.tensors[name]).tobytes())


def load_params(path) -> CondParams:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ShapeError(f"bad weights file magic {magic!r}")
        header_len = int.from_bytes(fh.read(8), "big")
        header = json.loads(fh.read(header_len))
        if header.get("version") != 1:
            raise ShapeError(f"unsupported weights version {header.get('version')}")
        cfg_obj = dict(header["config"])
        cfg_obj["conv_channels"] = tuple(cfg_obj["conv_channels"])
        config = CondConfig(**cfg_obj)
        tensors = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype=np.float64).reshape(shape)
            tensors[entry["name"]] = data.copy()
    return CondParams(config=config, tensors=tensors)
