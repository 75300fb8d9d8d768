"""Shapes and fixed maps for the conditioning stack.

Default dimensions are toy-sized on purpose: small enough that every
parameter tensor can be finite-difference checked exhaustively, while
keeping every mechanism (conv encoder, modulation, cross-attention,
gating, time modulation) structurally faithful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CondConfig:
    d_enc_content: int = 48
    d_enc_directive: int = 48
    d_model: int = 32
    d_z: int = 64
    d_time: int = 64
    len_content: int = 8  # content tokens
    len_directive: int = 4  # directive tokens
    len_directive_ctx: int = 2  # compressed directive tokens
    plane_hw: int = 16  # camera tensor H = W
    conv_channels: tuple[int, int, int, int] = (6, 6, 12, 12)
    psi_hidden: int = 32

    @property
    def context_len(self) -> int:
        return self.len_content + self.len_directive_ctx


def _build_plane_projection() -> np.ndarray:
    """Fixed 16 -> 3 linear map from the flat camera vector to the three
    broadcast plane channels.

    Flat vector layout: [exposure, cct, contrast, saturation, zoom, bokeh,
    style one-hot x 10].  Channel 0 carries tone (exposure with weaker
    contrast/saturation terms), channel 1 carries color (cct plus a
    distinct weight per style slot), channel 2 carries optics (zoom with a
    weaker bokeh term).
    """
    proj = np.zeros((3, 16))
    proj[0, 0] = 1.0  # exposure
    proj[0, 2] = 0.5  # contrast
    proj[0, 3] = 0.25  # saturation
    proj[1, 1] = 1.0  # cct
    proj[1, 6:16] = 0.05 * np.arange(1, 11)  # style slots, distinguishable
    proj[2, 4] = 1.0  # zoom
    proj[2, 5] = 0.5  # bokeh
    return proj


PLANE_PROJECTION_16_TO_3 = _build_plane_projection()
PLANE_PROJECTION_16_TO_3.setflags(write=False)
