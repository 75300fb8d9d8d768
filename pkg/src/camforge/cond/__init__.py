"""Desk-scale conditioning stack with analytic, finite-difference-verified
gradients: parameter embedding, feature-wise modulation, semantic fusion,
gated injection, and time-embedding modulation."""

from .config import CondConfig, PLANE_PROJECTION_16_TO_3
from .embed import embed_batch, toy_embed
from .params import CondParams, init_cond_params, load_params, save_params
from .stack import (
    CondContext,
    adapt,
    backward,
    build_context,
    encode_params,
    film_modulate,
    forward,
    forward_from_embeddings,
    fuse,
    gate_residual,
    modulate_time,
    predict_gate,
)

__all__ = [
    "CondConfig",
    "CondContext",
    "CondParams",
    "PLANE_PROJECTION_16_TO_3",
    "adapt",
    "backward",
    "build_context",
    "embed_batch",
    "encode_params",
    "film_modulate",
    "forward",
    "forward_from_embeddings",
    "fuse",
    "gate_residual",
    "init_cond_params",
    "load_params",
    "modulate_time",
    "predict_gate",
    "save_params",
    "toy_embed",
]
