"""Acceptance suite: one test per release criterion, each at its stated
tolerance and runtime budget, printing one PASS line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import http.client
import io
import sys
import threading
import time
from contextlib import contextmanager, redirect_stdout
from urllib.parse import quote

import numpy as np
import pytest

from camforge.calibration import (
    CameraVector,
    calibrate_cct,
    calibrate_exposure,
    calibrate_ordinal,
)
from camforge.cli import main as cli_main
from camforge.cond import CondConfig, forward, init_cond_params, predict_gate
from camforge.cond.check import gradcheck
from camforge.cond.probe import make_probe_dataset, probe_train
from camforge.dataset import plan_build, render_pairs, verify_manifest
from camforge.image import (
    SRGB,
    ImageBuffer,
    encode_png,
    srgb_decode,
    srgb_encode,
)
from camforge.lut import apply_lut, identity_lut
from camforge.metrics import delta_e, psnr, ssim
from camforge.service import make_server
from camforge.transforms import (
    BokehPair,
    apply_bokeh,
    apply_cct,
    apply_chain,
    apply_exposure,
    apply_zoom,
)
from conftest import make_gradient, make_noise, make_photo
from test_dataset import mini_config


@contextmanager
def criterion(name: str, budget_s: float):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL {name}", file=sys.stderr)
        raise
    elapsed = time.perf_counter() - started
    assert elapsed < budget_s, f"{name}: {elapsed:.2f}s exceeds {budget_s}s budget"
    print(f"ACCEPTANCE PASS {name} ({elapsed:.2f}s < {budget_s:.0f}s)")


def test_calibration_endpoints_and_strides():
    with criterion("calibration-endpoints-and-strides", 1.0):
        grid = [-3.0 + 0.5 * i for i in range(13)]
        s = [calibrate_exposure(ev) for ev in grid]
        deltas = [b - a for a, b in zip(s, s[1:])]
        assert all(d > 0 for d in deltas)
        assert max(deltas) - min(deltas) < 1e-12

        assert calibrate_cct(2000.0) == 0.0
        assert calibrate_cct(10000.0) == 1.0
        assert abs(calibrate_cct(6500.0) - 0.7324) < 1e-4

        expected = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0]
        for n, want in zip((1, 2, 3, 4), expected):
            assert abs(calibrate_ordinal(n, 4) - want) < 1e-12


def test_transform_identities_bit_exact():
    with criterion("transform-identities-bit-exact", 5.0):
        images = [make_gradient(48), make_photo(48), make_noise(48)]
        for img in images:
            reference = encode_png(img)

            ev0 = srgb_encode(apply_exposure(srgb_decode(img), 0.0))
            assert encode_png(ev0) == reference

            k6500 = srgb_encode(apply_cct(srgb_decode(img), 6500.0))
            assert encode_png(k6500) == reference

            assert encode_png(apply_zoom(img, 1.0)) == reference

            mask = np.zeros((img.height, img.width))
            assert encode_png(apply_bokeh(BokehPair(img, mask), 0)) == reference

            assert encode_png(apply_lut(img, identity_lut())) == reference

            assert encode_png(apply_chain(img, CameraVector())) == reference


def test_physical_monotonicity():
    with criterion("physical-monotonicity", 10.0):
        # headroom: bright pixel 0.35 encoded -> ~0.1 linear; +2 EV stays < 1
        photo = make_photo(48)
        photo.data *= 0.5
        lin = srgb_decode(photo)
        means = [apply_exposure(lin, ev).data.mean() for ev in (-2, -1, 0, 1, 2)]
        assert all(a < b for a, b in zip(means, means[1:]))

        gray = ImageBuffer(np.full((32, 32, 3), 0.5), SRGB)
        lin_gray = srgb_decode(gray)
        ratios = []
        for kelvin in (2500, 4000, 6500, 8500, 10000):
            out = apply_cct(lin_gray, kelvin)
            ratios.append(out.data[..., 2].mean() / out.data[..., 0].mean())
        assert all(a < b for a, b in zip(ratios, ratios[1:]))


def test_metric_oracles():
    with criterion("metric-oracles", 10.0):
        def uniform(v):
            return ImageBuffer(np.full((32, 32, 3), v), SRGB)

        assert abs(psnr(uniform(0.0), uniform(16.0 / 255.0)) - 24.05) < 0.01

        photo = make_photo(48)
        assert ssim(photo, photo) == 1.0

        assert abs(delta_e(uniform(1.0), uniform(0.0)) - 100.0) < 0.1

        for seed in range(5):
            rng = np.random.default_rng(seed)
            noise = rng.standard_normal(photo.data.shape)
            psnrs, ssims = [], []
            for amp in (0.0, 0.03, 0.08, 0.15, 0.3):
                noisy = ImageBuffer(np.clip(photo.data + amp * noise, 0, 1), SRGB)
                psnrs.append(psnr(photo, noisy))
                ssims.append(ssim(photo, noisy))
            assert all(a > b for a, b in zip(psnrs, psnrs[1:]))
            assert all(a > b for a, b in zip(ssims, ssims[1:]))


def test_mini_cameraset_build(tmp_path, registry):
    with criterion("mini-cameraset-build", 60.0):
        cfg_a = mini_config(tmp_path, out_root=str(tmp_path / "a"))
        plan = plan_build(cfg_a, registry)
        assert len(plan) == 35  # 5 bases x 7 exposure levels

        report = render_pairs(plan, cfg_a, registry)
        assert report["rendered"] == 35 and not report["errors"]

        cfg_b = mini_config(tmp_path, out_root=str(tmp_path / "b"))
        render_pairs(plan_build(cfg_b, registry), cfg_b, registry)
        bytes_a = (tmp_path / "a" / "manifest.jsonl").read_bytes()
        bytes_b = (tmp_path / "b" / "manifest.jsonl").read_bytes()
        assert bytes_a == bytes_b

        verify = verify_manifest(report["manifest"], sample=1.0, registry=registry)
        assert verify["rerendered"] == 35
        assert verify["ok"] and not verify["checksum_mismatches"]


def test_conditioning_invariants():
    with criterion("conditioning-invariants", 10.0):
        config = CondConfig()
        params = init_cond_params(config, seed=0, safe_start=False)

        rng = np.random.default_rng(0)
        d_random = rng.standard_normal(
            (1000, config.len_directive, config.d_enc_directive)
        )
        gates = predict_gate(d_random, params)
        assert np.all(gates > 0.0) and np.all(gates < 1.0)

        t = rng.standard_normal((2, config.d_time))
        ctx0 = forward(
            [CameraVector(exposure_s=1.0)] * 2,
            ["[CONTROL: exposure=+3EV]"] * 2,
            ["a harbor at dusk"] * 2,
            t,
            params,
            gate_override=0.0,
        )
        assert np.array_equal(ctx0.tape["C_ctx"], ctx0.tape["C_ref"])
        assert np.array_equal(ctx0.t_ctx, t)
        assert np.all(ctx0.F_ctx[:, config.len_content :] == 0.0)

        ctx = forward(
            [CameraVector()] * 2,
            ["[CONTROL: cct=3200K]"] * 2,
            ["a red barn in a field"] * 2,
            t,
            params,
        )
        sums = ctx.attention.sum(axis=-1)
        assert np.max(np.abs(sums - 1.0)) <= 1e-6
        assert np.array_equal(ctx.ID_ctx, np.arange(config.context_len))


def test_gradient_correctness():
    with criterion("gradient-correctness", 60.0):
        config = CondConfig()  # d_model=32, L_c=8, L_d=4
        assert (config.d_model, config.len_content, config.len_directive) == (32, 8, 4)
        report = gradcheck(config, batch=2, seed=0, eps=1e-3, tolerance=1e-4)
        assert report["ok"], (
            f"max relative error {report['max_relative_error']:.3e}"
        )


def test_information_flow_probe():
    with criterion("information-flow-probe", 120.0):
        samples = make_probe_dataset(64, seed=0)
        params = init_cond_params(seed=0, safe_start=False)
        result = probe_train(samples, params, steps=2000, seed=0)
        control = probe_train(samples, params, steps=2000, seed=0, shuffle_labels=True)
        assert result.final_mse < 0.01
        assert control.final_mse > 0.05
        assert control.final_mse > 5.0 * result.final_mse


PARITY_DIRECTIVES = [
    "[CONTROL: exposure=+1EV]",
    "[CONTROL: exposure=-2.5EV]",
    "[CONTROL: cct=3200K]",
    "[CONTROL: cct=10000K]",
    "[CONTROL: contrast=1/4]",
    "[CONTROL: saturation=4/4]",
    "[CONTROL: zoom=2×]",
    "[CONTROL: style=Velvia]",
    "[CONTROL: style=Acros, contrast=3/4]",
    "[CONTROL: exposure=+0.5EV, cct=5000K, saturation=2/4, zoom=1.5×]",
]


def test_api_cli_parity(tmp_path):
    with criterion("api-cli-parity", 10.0):
        src = tmp_path / "src.png"
        src.write_bytes(encode_png(make_photo(48)))

        server = make_server(port=0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            port = server.server_address[1]
            for i, directive in enumerate(PARITY_DIRECTIVES):
                out = tmp_path / f"cli{i}.png"
                with redirect_stdout(io.StringIO()):
                    code = cli_main(
                        ["render", "--in", str(src), "--out", str(out),
                         "--directive", directive]
                    )
                assert code == 0, directive

                conn = http.client.HTTPConnection("127.0.0.1", port, timeout=10)
                conn.request(
                    "POST",
                    f"/render?directive={quote(directive)}",
                    body=src.read_bytes(),
                )
                resp = conn.getresponse()
                body = resp.read()
                conn.close()
                assert resp.status == 200, directive
                assert body == out.read_bytes(), directive
        finally:
            server.shutdown()
            server.server_close()
