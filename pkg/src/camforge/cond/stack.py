"""Forward and analytic backward passes of the conditioning stack.

Data flow (batch B throughout, float64):

    s (B,16) --fixed proj--> plane (B,3,H,W) --conv x4 + pool + linear--> z
    D_raw --mean pool + linear + sigmoid--> gate g in (0,1)
    C_raw --linear--> C_lin (residual reference) --softmax+LN--> C
    D_raw --linear+softmax+LN--> D
    z --modulation heads--> (gamma_q, beta_q), (gamma_kv, beta_kv)
    Q = (1+gamma_q) C + beta_q;  K = V = (1+gamma_kv) D + beta_kv
    C_fuse = softmax(Q K^T / sqrt(d_K)) V
    C_ctx = C_lin + g * C_fuse
    D_dir = pool(two-layer compressor(D));  F_ctx = [C_ctx ; g * D_dir]
    t_ctx = t + g * psi(z)

``backward`` consumes the tape recorded by ``forward`` and returns exact
gradients for every parameter tensor and for the inputs (C_raw, D_raw, s,
t); correctness is enforced by central finite differences in the test
suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..calibration import CameraVector
from ..errors import ShapeError, StateError
from .config import CondConfig, PLANE_PROJECTION_16_TO_3
from .embed import embed_batch
from .params import CondParams

_LN_EPS = 1e-12


# ---------------------------------------------------------------------------
# primitive helpers


def _softmax_lastaxis(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax_backward(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    # y = softmax(x) along the last axis
    return y * (dy - np.sum(dy * y, axis=-1, keepdims=True))


def _conv3x3_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Stride-1, pad-1 3x3 convolution via patch matrices. Returns output
    and the patch matrix needed for backward."""
    bsz, cin, h, wid = x.shape
    cout = w.shape[0]
    xp = np.zeros((bsz, cin, h + 2, wid + 2))
    xp[:, :, 1:-1, 1:-1] = x
    flat = xp.reshape(bsz, cin, -1)
    s0, s1, s2 = flat.strides
    row = (wid + 2) * s2
    # (B, Cin, 3, 3, H, W) window view; reshape materializes it once
    windows = np.lib.stride_tricks.as_strided(
        flat, shape=(bsz, cin, 3, 3, h, wid), strides=(s0, s1, row, s2, row, s2)
    )
    cols = windows.reshape(bsz, cin * 9, h * wid)
    out = np.matmul(w.reshape(cout, cin * 9), cols)  # (B, Cout, H*W)
    out = out.reshape(bsz, cout, h, wid) + b[None, :, None, None]
    return out, cols


def _conv3x3_backward(dout: np.ndarray, cols: np.ndarray, w: np.ndarray, x_shape):
    bsz, cin, h, wid = x_shape
    cout = w.shape[0]
    dflat = dout.reshape(bsz, cout, h * wid)
    dw = np.einsum("bon,bkn->ok", dflat, cols).reshape(w.shape)
    db = dout.sum(axis=(0, 2, 3))
    dcols = np.matmul(w.reshape(cout, cin * 9).T, dflat)  # (B, Cin*9, H*W)
    dpatches = dcols.reshape(bsz, cin, 3, 3, h, wid)
    dxp = np.zeros((bsz, cin, h + 2, wid + 2))
    for ki in range(3):
        for kj in range(3):
            dxp[:, :, ki : ki + h, kj : kj + wid] += dpatches[:, :, ki, kj]
    return dxp[:, :, 1:-1, 1:-1], dw, db


def _layernorm_forward(x: np.ndarray, gain: np.ndarray, bias: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    sigma = np.sqrt(var + _LN_EPS)
    xhat = (x - mu) / sigma
    return gain * xhat + bias, xhat, sigma


def _layernorm_backward(dy, xhat, sigma, gain):
    dgain = np.sum(dy * xhat, axis=tuple(range(dy.ndim - 1)))
    dbias = np.sum(dy, axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * gain
    dx = (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
    ) / sigma
    return dx, dgain, dbias


# ---------------------------------------------------------------------------
# tape


@dataclass
class CondContext:
    """Everything the forward pass produced, including test-visible
    intermediates and the tape needed for the backward pass."""

    config: CondConfig
    F_ctx: np.ndarray  # (B, L_c + L_dir', d_model)
    ID_ctx: np.ndarray  # (L_c + L_dir',) int
    t_ctx: np.ndarray  # (B, d_time)
    g_cam: np.ndarray  # (B, 1), strictly inside (0, 1) unless overridden
    z_cam: np.ndarray  # (B, d_z)
    ID_content: np.ndarray
    ID_dir: np.ndarray
    gate_override: float | None = None
    tape: dict = field(default_factory=dict)

    @property
    def attention(self) -> np.ndarray:
        return self.tape["attn"]

    def __getattr__(self, name):
        tape = object.__getattribute__(self, "tape")
        if name in tape:
            return tape[name]
        raise AttributeError(name)


# ---------------------------------------------------------------------------
# forward pieces (shared by the public per-op functions and full forward)


def _as_vector_batch(vectors) -> np.ndarray:
    if isinstance(vectors, CameraVector):
        return vectors.as_array()[None, :]
    if isinstance(vectors, (list, tuple)):
        return np.stack([v.as_array() for v in vectors])
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 16:
        raise ShapeError(f"camera vectors must be (B, 16), got {arr.shape}")
    return arr


def _encode_params_tape(s: np.ndarray, params: CondParams) -> dict:
    cfg = params.config
    hw = cfg.plane_hw
    u = s @ PLANE_PROJECTION_16_TO_3.T  # (B, 3)
    plane = np.broadcast_to(u[:, :, None, None], (s.shape[0], 3, hw, hw)).copy()
    tape = {"s": s, "u": u, "plane": plane}
    x = plane
    for i in (1, 2, 3, 4):
        pre, cols = _conv3x3_forward(x, params[f"conv{i}_w"], params[f"conv{i}_b"])
        h = np.tanh(pre)
        tape[f"conv{i}_cols"] = cols
        tape[f"conv{i}_in_shape"] = x.shape
        tape[f"conv{i}_h"] = h
        x = h
    pooled = x.mean(axis=(2, 3))  # adaptive average pool to 1x1
    z = pooled @ params["enc_mlp_w"].T + params["enc_mlp_b"]
    tape["pooled"] = pooled
    tape["z_cam"] = z
    return tape


def encode_params(vectors, params: CondParams) -> np.ndarray:
    """Camera vector(s) -> compact embedding z of width d_z."""
    return _encode_params_tape(_as_vector_batch(vectors), params)["z_cam"]


def _predict_gate_tape(d_raw: np.ndarray, params: CondParams) -> dict:
    dbar = d_raw.mean(axis=1)  # (B, d_enc_d)
    logit = dbar @ params["gate_w"].T + params["gate_b"]  # (B, 1)
    g = 1.0 / (1.0 + np.exp(-logit))
    return {"dbar": dbar, "gate_logit": logit, "g_cam": g}


def predict_gate(d_raw: np.ndarray, params: CondParams) -> np.ndarray:
    """Directive embedding -> scalar gate per batch item, strictly in (0,1)."""
    if d_raw.ndim == 2:
        d_raw = d_raw[None]
    return _predict_gate_tape(d_raw, params)["g_cam"]


def _adapt_tape(x: np.ndarray, params: CondParams, kind: str) -> dict:
    w = params[f"adapter_{kind}_w"]
    b = params[f"adapter_{kind}_b"]
    lin = x @ w.T + b
    sm = _softmax_lastaxis(lin)
    out, xhat, sigma = _layernorm_forward(
        sm, params[f"adapter_{kind}_ln_g"], params[f"adapter_{kind}_ln_b"]
    )
    return {"lin": lin, "softmax": sm, "xhat": xhat, "sigma": sigma, "out": out}


def adapt(encoded: np.ndarray, params: CondParams, kind: str) -> np.ndarray:
    """Linear -> softmax (feature axis) -> LayerNorm, to width d_model."""
    if kind not in ("con", "dir"):
        raise ValueError("kind must be 'con' or 'dir'")
    expected = (
        params.config.d_enc_content if kind == "con" else params.config.d_enc_directive
    )
    if encoded.shape[-1] != expected:
        raise ShapeError(
            f"adapter '{kind}' expects width {expected}, got {encoded.shape[-1]}"
        )
    return _adapt_tape(encoded, params, kind)["out"]


def _film_split(z: np.ndarray, params: CondParams, head: str):
    d = params.config.d_model
    out = z @ params[f"film_{head}_w"].T + params[f"film_{head}_b"]
    return out[:, :d], out[:, d:]


def film_modulate(c: np.ndarray, d: np.ndarray, z: np.ndarray, params: CondParams):
    """Affine feature-wise modulation of both token streams from z.

    Returns (Q, K, V); K and V are the same tensor by construction.
    """
    gamma_q, beta_q = _film_split(z, params, "q")
    gamma_kv, beta_kv = _film_split(z, params, "kv")
    q = (1.0 + gamma_q)[:, None, :] * c + beta_q[:, None, :]
    kv = (1.0 + gamma_kv)[:, None, :] * d + beta_kv[:, None, :]
    return q, kv, kv


def fuse(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Scaled dot-product cross-attention: content queries over directive
    keys/values."""
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"query width {q.shape[-1]} != key width {k.shape[-1]}")
    scores = q @ k.transpose(0, 2, 1) / np.sqrt(k.shape[-1])
    attn = _softmax_lastaxis(scores)
    return attn @ v


def gate_residual(c_ref: np.ndarray, c_fuse: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Gated residual: reference stream plus g times the fused stream."""
    if c_ref.shape != c_fuse.shape:
        raise ShapeError(f"residual shapes differ: {c_ref.shape} vs {c_fuse.shape}")
    return c_ref + g[:, :, None] * c_fuse


def _compress_tape(d: np.ndarray, params: CondParams) -> dict:
    hidden = np.tanh(d @ params["comp_w1"].T + params["comp_b1"])
    compressed = hidden @ params["comp_w2"].T + params["comp_b2"]
    pooled = np.einsum("pl,bld->bpd", params["comp_pool"], compressed)
    return {"comp_hidden": hidden, "comp_out": compressed, "D_dir": pooled}


def build_context(c_ctx: np.ndarray, d: np.ndarray, g: np.ndarray, params: CondParams):
    """Concatenate the fused context with the gated compressed directive and
    assign contiguous positional ids (directive block follows content)."""
    d_dir = _compress_tape(d, params)["D_dir"]
    f_ctx = np.concatenate([c_ctx, g[:, :, None] * d_dir], axis=1)
    l_c = c_ctx.shape[1]
    id_content = np.arange(l_c)
    id_dir = np.arange(l_c, l_c + d_dir.shape[1])
    return f_ctx, np.concatenate([id_content, id_dir])


def _psi_tape(z: np.ndarray, params: CondParams) -> dict:
    hidden = np.tanh(z @ params["psi_w1"].T + params["psi_b1"])
    out = hidden @ params["psi_w2"].T + params["psi_b2"]
    return {"psi_hidden": hidden, "psi_out": out}


def modulate_time(t: np.ndarray, z: np.ndarray, g: np.ndarray, params: CondParams):
    """t_ctx = t + g * psi(z) with the two-layer time MLP."""
    if t.shape[-1] != params.config.d_time:
        raise ShapeError(f"time width {t.shape[-1]} != d_time {params.config.d_time}")
    return t + g * _psi_tape(z, params)["psi_out"]


# ---------------------------------------------------------------------------
# full forward / backward


def forward_from_embeddings(
    c_raw: np.ndarray,
    d_raw: np.ndarray,
    s: np.ndarray,
    t: np.ndarray,
    params: CondParams,
    gate_override: float | None = None,
    retain_tape: bool = True,
) -> CondContext:
    """Forward pass from precomputed text embeddings (the hot path for
    finite-difference checks, which hold embeddings fixed)."""
    cfg = params.config
    if c_raw.shape[1:] != (cfg.len_content, cfg.d_enc_content):
        raise ShapeError(f"content embedding shape {c_raw.shape} inconsistent")
    if d_raw.shape[1:] != (cfg.len_directive, cfg.d_enc_directive):
        raise ShapeError(f"directive embedding shape {d_raw.shape} inconsistent")
    if t.shape != (c_raw.shape[0], cfg.d_time):
        raise ShapeError(f"time embedding shape {t.shape} inconsistent")

    tape: dict = {"C_raw": c_raw, "D_raw": d_raw, "t": t}

    tape.update(_encode_params_tape(s, params))
    z = tape["z_cam"]

    gate_tape = _predict_gate_tape(d_raw, params)
    tape.update(gate_tape)
    if gate_override is not None:
        g = np.full_like(gate_tape["g_cam"], float(gate_override))
        tape["g_cam"] = g
    else:
        g = gate_tape["g_cam"]

    con = _adapt_tape(c_raw, params, "con")
    tape.update({f"con_{k}": v for k, v in con.items()})
    dir_ = _adapt_tape(d_raw, params, "dir")
    tape.update({f"dir_{k}": v for k, v in dir_.items()})
    c_adapted, d_adapted = con["out"], dir_["out"]
    c_ref = con["lin"]  # residual reference: content projected to d_model
    tape["C"] = c_adapted
    tape["D"] = d_adapted
    tape["C_ref"] = c_ref

    gamma_q, beta_q = _film_split(z, params, "q")
    gamma_kv, beta_kv = _film_split(z, params, "kv")
    q = (1.0 + gamma_q)[:, None, :] * c_adapted + beta_q[:, None, :]
    kv = (1.0 + gamma_kv)[:, None, :] * d_adapted + beta_kv[:, None, :]
    tape.update(
        {
            "gamma_q": gamma_q,
            "beta_q": beta_q,
            "gamma_kv": gamma_kv,
            "beta_kv": beta_kv,
            "Q": q,
            "K": kv,
            "V": kv,
        }
    )

    scores = q @ kv.transpose(0, 2, 1) / np.sqrt(cfg.d_model)
    attn = _softmax_lastaxis(scores)
    c_fuse = attn @ kv
    tape["attn"] = attn
    tape["C_fuse"] = c_fuse

    c_ctx = c_ref + g[:, :, None] * c_fuse
    tape["C_ctx"] = c_ctx

    comp = _compress_tape(d_adapted, params)
    tape.update(comp)
    f_ctx = np.concatenate([c_ctx, g[:, :, None] * comp["D_dir"]], axis=1)

    psi = _psi_tape(z, params)
    tape.update(psi)
    t_ctx = t + g * psi["psi_out"]
    tape["t_ctx"] = t_ctx

    id_content = np.arange(cfg.len_content)
    id_dir = np.arange(cfg.len_content, cfg.context_len)

    return CondContext(
        config=cfg,
        F_ctx=f_ctx,
        ID_ctx=np.concatenate([id_content, id_dir]),
        t_ctx=t_ctx,
        g_cam=tape["g_cam"],
        z_cam=z,
        ID_content=id_content,
        ID_dir=id_dir,
        gate_override=gate_override,
        tape=tape if retain_tape else {},
    )


def forward(
    vectors,
    directive_texts,
    content_texts,
    t: np.ndarray,
    params: CondParams,
    gate_override: float | None = None,
    retain_tape: bool = True,
) -> CondContext:
    """Full forward pass from camera vectors and raw texts."""
    cfg = params.config
    if isinstance(directive_texts, str):
        directive_texts = [directive_texts]
    if isinstance(content_texts, str):
        content_texts = [content_texts]
    s = _as_vector_batch(vectors)
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 1:
        t = np.broadcast_to(t, (s.shape[0], t.shape[0])).copy()
    c_raw = embed_batch(content_texts, "content", cfg)
    d_raw = embed_batch(directive_texts, "directive", cfg)
    if c_raw.shape[0] != s.shape[0] or d_raw.shape[0] != s.shape[0]:
        raise ShapeError("batch sizes of vectors and texts differ")
    return forward_from_embeddings(
        c_raw, d_raw, s, t, params, gate_override=gate_override, retain_tape=retain_tape
    )


def backward(
    ctx: CondContext, upstream: dict[str, np.ndarray], params: CondParams
) -> dict:
    """Exact gradients of sum(upstream . outputs) for every parameter and
    input.  ``upstream`` holds cotangents for ``F_ctx`` and/or ``t_ctx``.

    When the forward ran with a gate override the gate is a constant, so
    no gradient flows into (or through) the gate head.
    """
    if not ctx.tape:
        raise StateError("backward needs a forward tape (retain_tape=True)")
    cfg = ctx.config
    tape = ctx.tape
    bsz = ctx.t_ctx.shape[0]
    l_c = cfg.len_content

    d_f = np.asarray(
        upstream.get("F_ctx", np.zeros_like(ctx.F_ctx)), dtype=np.float64
    )
    d_t_ctx = np.asarray(
        upstream.get("t_ctx", np.zeros_like(ctx.t_ctx)), dtype=np.float64
    )
    if d_f.shape != ctx.F_ctx.shape or d_t_ctx.shape != ctx.t_ctx.shape:
        raise ShapeError("upstream gradient shapes do not match outputs")

    grads = {name: np.zeros_like(params[name]) for name in params.tensors}
    g = tape["g_cam"]
    z = tape["z_cam"]
    dz = np.zeros_like(z)
    dg = np.zeros((bsz, 1))

    # t_ctx = t + g * psi
    dt_in = d_t_ctx.copy()
    dpsi = g * d_t_ctx
    dg += np.sum(d_t_ctx * tape["psi_out"], axis=1, keepdims=True)

    grads["psi_w2"] += dpsi.T @ tape["psi_hidden"]
    grads["psi_b2"] += dpsi.sum(axis=0)
    dpsi_hidden = dpsi @ params["psi_w2"]
    dpsi_pre = dpsi_hidden * (1.0 - tape["psi_hidden"] ** 2)
    grads["psi_w1"] += dpsi_pre.T @ z
    grads["psi_b1"] += dpsi_pre.sum(axis=0)
    dz += dpsi_pre @ params["psi_w1"]

    # F_ctx = [C_ctx ; g * D_dir]
    d_c_ctx = d_f[:, :l_c]
    d_dir_scaled = d_f[:, l_c:]
    d_d_dir = g[:, :, None] * d_dir_scaled
    dg += np.sum(d_dir_scaled * tape["D_dir"], axis=(1, 2))[:, None]

    # D_dir = pool @ comp_out;  comp_out = comp_w2 tanh(comp_w1 D + b1) + b2
    grads["comp_pool"] += np.einsum("bpd,bld->pl", d_d_dir, tape["comp_out"])
    d_comp_out = np.einsum("pl,bpd->bld", params["comp_pool"], d_d_dir)
    grads["comp_w2"] += np.einsum("bld,blh->dh", d_comp_out, tape["comp_hidden"])
    grads["comp_b2"] += d_comp_out.sum(axis=(0, 1))
    d_comp_hidden = d_comp_out @ params["comp_w2"]
    d_comp_pre = d_comp_hidden * (1.0 - tape["comp_hidden"] ** 2)
    grads["comp_w1"] += np.einsum("bld,blh->dh", d_comp_pre, tape["D"])
    grads["comp_b1"] += d_comp_pre.sum(axis=(0, 1))
    d_d_adapted = d_comp_pre @ params["comp_w1"]

    # C_ctx = C_ref + g * C_fuse
    d_c_ref = d_c_ctx.copy()
    d_c_fuse = g[:, :, None] * d_c_ctx
    dg += np.sum(d_c_ctx * tape["C_fuse"], axis=(1, 2))[:, None]

    # attention: C_fuse = attn @ V, attn = softmax(Q K^T / sqrt(d))
    attn = tape["attn"]
    d_attn = d_c_fuse @ tape["V"].transpose(0, 2, 1)
    d_v = attn.transpose(0, 2, 1) @ d_c_fuse
    d_scores = _softmax_backward(attn, d_attn)
    scale = 1.0 / np.sqrt(cfg.d_model)
    d_q = d_scores @ tape["K"] * scale
    d_k = d_scores.transpose(0, 2, 1) @ tape["Q"] * scale
    d_kv = d_k + d_v

    # FiLM: Q = (1+gamma_q) C + beta_q ; K = V = (1+gamma_kv) D + beta_kv
    d_c_adapted = d_q * (1.0 + tape["gamma_q"])[:, None, :]
    d_gamma_q = np.sum(d_q * tape["C"], axis=1)
    d_beta_q = d_q.sum(axis=1)
    d_film_q = np.concatenate([d_gamma_q, d_beta_q], axis=1)
    grads["film_q_w"] += d_film_q.T @ z
    grads["film_q_b"] += d_film_q.sum(axis=0)
    dz += d_film_q @ params["film_q_w"]

    d_d_adapted += d_kv * (1.0 + tape["gamma_kv"])[:, None, :]
    d_gamma_kv = np.sum(d_kv * tape["D"], axis=1)
    d_beta_kv = d_kv.sum(axis=1)
    d_film_kv = np.concatenate([d_gamma_kv, d_beta_kv], axis=1)
    grads["film_kv_w"] += d_film_kv.T @ z
    grads["film_kv_b"] += d_film_kv.sum(axis=0)
    dz += d_film_kv @ params["film_kv_w"]

    # content adapter: out = LN(softmax(lin)); residual reference taps lin
    d_con_out, d_con_ln_g, d_con_ln_b = _layernorm_backward(
        d_c_adapted, tape["con_xhat"], tape["con_sigma"], params["adapter_con_ln_g"]
    )
    grads["adapter_con_ln_g"] += d_con_ln_g
    grads["adapter_con_ln_b"] += d_con_ln_b
    d_con_lin = _softmax_backward(tape["con_softmax"], d_con_out) + d_c_ref
    grads["adapter_con_w"] += np.einsum("bld,ble->de", d_con_lin, tape["C_raw"])
    grads["adapter_con_b"] += d_con_lin.sum(axis=(0, 1))
    d_c_raw = d_con_lin @ params["adapter_con_w"]

    # directive adapter
    d_dir_out, d_dir_ln_g, d_dir_ln_b = _layernorm_backward(
        d_d_adapted, tape["dir_xhat"], tape["dir_sigma"], params["adapter_dir_ln_g"]
    )
    grads["adapter_dir_ln_g"] += d_dir_ln_g
    grads["adapter_dir_ln_b"] += d_dir_ln_b
    d_dir_lin = _softmax_backward(tape["dir_softmax"], d_dir_out)
    grads["adapter_dir_w"] += np.einsum("bld,ble->de", d_dir_lin, tape["D_raw"])
    grads["adapter_dir_b"] += d_dir_lin.sum(axis=(0, 1))
    d_d_raw = d_dir_lin @ params["adapter_dir_w"]

    # gate: g = sigmoid(gate_w . meanpool(D_raw) + gate_b)
    if ctx.gate_override is None:
        d_logit = dg * g * (1.0 - g)
        grads["gate_w"] += d_logit.T @ tape["dbar"]
        grads["gate_b"] += d_logit.sum(axis=0)
        d_dbar = d_logit @ params["gate_w"]
        d_d_raw = d_d_raw + d_dbar[:, None, :] / cfg.len_directive

    # conv encoder from accumulated dz
    grads["enc_mlp_w"] += dz.T @ tape["pooled"]
    grads["enc_mlp_b"] += dz.sum(axis=0)
    d_pooled = dz @ params["enc_mlp_w"]
    hw = cfg.plane_hw
    d_x = np.broadcast_to(
        d_pooled[:, :, None, None] / (hw * hw),
        (bsz, cfg.conv_channels[3], hw, hw),
    ).copy()
    for i in (4, 3, 2, 1):
        d_pre = d_x * (1.0 - tape[f"conv{i}_h"] ** 2)
        d_x, dw, db = _conv3x3_backward(
            d_pre, tape[f"conv{i}_cols"], params[f"conv{i}_w"], tape[f"conv{i}_in_shape"]
        )
        grads[f"conv{i}_w"] += dw
        grads[f"conv{i}_b"] += db
    d_plane = d_x  # (B, 3, H, W)
    du = d_plane.sum(axis=(2, 3))
    d_s = du @ PLANE_PROJECTION_16_TO_3

    return {
        "params": grads,
        "inputs": {"C_raw": d_c_raw, "D_raw": d_d_raw, "s": d_s, "t": dt_in},
    }
