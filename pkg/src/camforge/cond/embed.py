"""Deterministic toy text embedder.

Stands in for the pretrained encoders that are out of scope here: each
whitespace token maps to a hash-seeded vector, sequences are padded or
truncated to the configured length.  Same text, same tensor, always.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .config import CondConfig

KINDS = ("content", "directive")


def _token_vector(kind: str, token: str, width: int) -> np.ndarray:
    digest = hashlib.sha256(f"camforge-embed|{kind}|{token}".encode()).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))
    return rng.uniform(-1.0, 1.0, width)


def toy_embed(text: str, kind: str, config: CondConfig) -> np.ndarray:
    """Embed one text to a fixed (length, width) float64 array."""
    if kind == "content":
        length, width = config.len_content, config.d_enc_content
    elif kind == "directive":
        length, width = config.len_directive, config.d_enc_directive
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    out = np.zeros((length, width))
    for i, token in enumerate(text.split()[:length]):
        out[i] = _token_vector(kind, token, width)
    return out


def embed_batch(texts: list[str], kind: str, config: CondConfig) -> np.ndarray:
    return np.stack([toy_embed(t, kind, config) for t in texts])
