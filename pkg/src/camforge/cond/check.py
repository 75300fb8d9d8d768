"""Finite-difference gradient verification and the condcheck suite.

The gradient check compares analytic gradients against central finite
differences of a scalar projection L = sum(u_F . F_ctx) + sum(u_t . t_ctx)
with fixed random cotangents, at a fully randomized (non-safe-start)
parameter point.  Relative error uses the torch-style floor:
|a - fd| / max(1, |a|, |fd|).
"""

from __future__ import annotations

import numpy as np

from .config import CondConfig
from .embed import embed_batch
from .params import CondParams, init_cond_params
from .stack import backward, forward_from_embeddings

GRADCHECK_EPS = 1e-3
GRADCHECK_TOLERANCE = 1e-4


def _gradcheck_inputs(config: CondConfig, batch: int, seed: int):
    rng = np.random.default_rng(seed)
    words = [f"tok{i}" for i in range(64)]
    content_texts = [
        " ".join(rng.choice(words, config.len_content)) for _ in range(batch)
    ]
    directive_texts = [
        " ".join(rng.choice(words, config.len_directive)) for _ in range(batch)
    ]
    c_raw = embed_batch(content_texts, "content", config)
    d_raw = embed_batch(directive_texts, "directive", config)
    s = np.zeros((batch, 16))
    s[:, 0] = rng.uniform(-1, 1, batch)  # exposure
    s[:, 1] = rng.uniform(0, 1, batch)  # cct
    s[:, 2] = rng.uniform(-1, 1, batch)  # contrast
    s[:, 3] = rng.uniform(-1, 1, batch)  # saturation
    s[:, 4] = rng.uniform(0, 1, batch)  # zoom
    s[:, 5] = rng.uniform(-1, 1, batch)  # bokeh
    for b in range(batch):
        s[b, 6 + rng.integers(0, 10)] = 1.0
    t = rng.standard_normal((batch, config.d_time))
    return c_raw, d_raw, s, t


def gradcheck(
    config: CondConfig | None = None,
    batch: int = 2,
    seed: int = 0,
    eps: float = GRADCHECK_EPS,
    tolerance: float = GRADCHECK_TOLERANCE,
    check_inputs: bool = True,
) -> dict:
    """Check every parameter tensor (and optionally the inputs) against
    central finite differences.  Returns a per-tensor error report."""
    config = config or CondConfig()
    params = init_cond_params(config, seed=seed + 1, safe_start=False)
    c_raw, d_raw, s, t = _gradcheck_inputs(config, batch, seed)

    rng = np.random.default_rng(seed + 2)
    ctx0 = forward_from_embeddings(c_raw, d_raw, s, t, params)
    u_f = rng.standard_normal(ctx0.F_ctx.shape)
    u_t = rng.standard_normal(ctx0.t_ctx.shape)

    def loss(c=None, d=None, sv=None, tv=None) -> float:
        ctx = forward_from_embeddings(
            c_raw if c is None else c,
            d_raw if d is None else d,
            s if sv is None else sv,
            t if tv is None else tv,
            params,
            retain_tape=False,
        )
        return float(np.sum(u_f * ctx.F_ctx) + np.sum(u_t * ctx.t_ctx))

    analytic = backward(ctx0, {"F_ctx": u_f, "t_ctx": u_t}, params)

    def rel_err(a: float, fd: float) -> float:
        return abs(a - fd) / max(1.0, abs(a), abs(fd))

    report: dict[str, float] = {}

    for name, tensor in params.tensors.items():
        grad = analytic["params"][name]
        worst = 0.0
        flat = tensor.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            plus = loss()
            flat[i] = orig - eps
            minus = loss()
            flat[i] = orig
            fd = (plus - minus) / (2.0 * eps)
            worst = max(worst, rel_err(grad.reshape(-1)[i], fd))
        report[name] = worst

    if check_inputs:
        for label, array, kw in (
            ("input:C_raw", c_raw, "c"),
            ("input:D_raw", d_raw, "d"),
            ("input:s", s, "sv"),
            ("input:t", t, "tv"),
        ):
            grad = analytic["inputs"][label.split(":")[1]]
            worst = 0.0
            flat = array.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                plus = loss(**{kw: array})
                flat[i] = orig - eps
                minus = loss(**{kw: array})
                flat[i] = orig
                fd = (plus - minus) / (2.0 * eps)
                worst = max(worst, rel_err(grad.reshape(-1)[i], fd))
            report[label] = worst

    max_err = max(report.values())
    return {
        "per_tensor": report,
        "max_relative_error": max_err,
        "eps": eps,
        "tolerance": tolerance,
        "ok": max_err < tolerance,
    }


def condcheck_report(
    seed: int = 0,
    include_gradcheck: bool = True,
    include_probe: bool = True,
) -> dict:
    """Run the conditioning-stack invariant suite; returns a JSON-friendly
    report with one entry per check."""
    from .probe import make_probe_dataset, probe_train
    from .stack import backward, forward, predict_gate

    config = CondConfig()
    rng = np.random.default_rng(seed)
    checks: list[dict] = []

    def add(name: str, ok: bool, detail: str = "") -> None:
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    params = init_cond_params(config, seed=seed, safe_start=False)

    # gate strictly inside (0, 1) on 1000 random directive embeddings
    d_random = rng.standard_normal((1000, config.len_directive, config.d_enc_directive))
    gates = predict_gate(d_random, params)
    add(
        "gate_open_interval",
        bool(np.all(gates > 0.0) and np.all(gates < 1.0)),
        f"min={gates.min():.3e} max={1 - gates.max():.3e} from 1",
    )

    # zero gate head -> exactly 0.5
    zero_head = init_cond_params(config, seed=seed, safe_start=True)
    g_half = predict_gate(d_random[:4], zero_head)
    add("gate_zero_head_is_half", bool(np.all(g_half == 0.5)))

    # forced g = 0: exact identities
    from ..calibration import CameraVector

    vec = CameraVector()
    t = rng.standard_normal((1, config.d_time))
    ctx0 = forward(
        vec, "[CONTROL: exposure=+1EV]", "a photo", t, params, gate_override=0.0
    )
    add(
        "zero_gate_identity",
        bool(
            np.array_equal(ctx0.tape["C_ctx"], ctx0.tape["C_ref"])
            and np.array_equal(ctx0.t_ctx, t)
            and np.all(ctx0.F_ctx[:, config.len_content :] == 0.0)
        ),
    )

    # attention stochasticity + positional ids on a generic forward
    ctx = forward(vec, "[CONTROL: cct=3200K]", "a harbor at dusk", t, params)
    rows = ctx.attention.sum(axis=-1)
    add(
        "attention_rows_stochastic",
        bool(np.all(np.abs(rows - 1.0) <= 1e-6) and np.all(ctx.attention >= 0.0)),
        f"max |sum-1| = {np.max(np.abs(rows - 1.0)):.2e}",
    )
    add(
        "positional_ids_contiguous",
        bool(np.array_equal(ctx.ID_ctx, np.arange(config.context_len))),
    )
    add("k_is_v", ctx.tape["K"] is ctx.tape["V"])

    # determinism: bit-identical forward and backward
    ctx_a = forward(vec, "[CONTROL: zoom=2x]", "a bridge", t, params)
    ctx_b = forward(vec, "[CONTROL: zoom=2x]", "a bridge", t, params)
    upstream = {
        "F_ctx": rng.standard_normal(ctx_a.F_ctx.shape),
        "t_ctx": rng.standard_normal(ctx_a.t_ctx.shape),
    }
    grads_a = backward(ctx_a, upstream, params)
    grads_b = backward(ctx_b, upstream, params)
    same = np.array_equal(ctx_a.F_ctx, ctx_b.F_ctx) and np.array_equal(
        ctx_a.t_ctx, ctx_b.t_ctx
    )
    for name in grads_a["params"]:
        same = same and np.array_equal(grads_a["params"][name], grads_b["params"][name])
    add("bit_reproducible", bool(same))

    report: dict = {"seed": seed, "checks": checks}
    if include_gradcheck:
        gc = gradcheck(config, batch=2, seed=seed)
        add(
            "gradcheck",
            gc["ok"],
            f"max relative error {gc['max_relative_error']:.3e} (tol {gc['tolerance']})",
        )
        report["gradcheck"] = {
            "max_relative_error": gc["max_relative_error"],
            "tolerance": gc["tolerance"],
        }
    if include_probe:
        samples = make_probe_dataset(seed=seed)
        res = probe_train(samples, params, seed=seed)
        ctl = probe_train(samples, params, seed=seed, shuffle_labels=True)
        ok = res.final_mse < 0.01 and ctl.final_mse > max(0.05, 5 * res.final_mse)
        add(
            "probe_information_flow",
            ok,
            f"final={res.final_mse:.5f} shuffled={ctl.final_mse:.5f} "
            f"oracle={res.oracle_mse:.6f}",
        )
        report["probe"] = {
            "final_mse": res.final_mse,
            "shuffled_mse": ctl.final_mse,
            "oracle_mse": res.oracle_mse,
        }
    report["ok"] = all(c["ok"] for c in checks)
    return report
