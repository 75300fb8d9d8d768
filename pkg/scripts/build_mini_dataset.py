#!/usr/bin/env python3
"""End-to-end mini dataset walkthrough: synthesize base images, build the
exposure sweep from configs/mini.json, verify the manifest, and report
metrics between bases and rendered pairs.

Usage: python3 scripts/build_mini_dataset.py [workdir]
"""

import json
import sys
from pathlib import Path

import numpy as np

from camforge.calibration import load_registry
from camforge.dataset import BuildConfig, plan_build, render_pairs, verify_manifest
from camforge.image import SRGB, ImageBuffer, encode_png


def synthesize_bases(out_dir: Path, count: int = 5, size: int = 128) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(42)
    for i in range(count):
        yy, xx = np.meshgrid(
            np.linspace(-1, 1, size), np.linspace(-1, 1, size), indexing="ij"
        )
        data = np.stack(
            [
                0.45 + 0.3 * np.exp(-((xx - rng.uniform(-0.5, 0.5)) ** 2 + yy**2)),
                0.40 + 0.3 * np.exp(-((yy - rng.uniform(-0.5, 0.5)) ** 2 + xx**2)),
                0.35 + 0.25 * np.cos(2.5 * (xx + yy) + i),
            ],
            axis=-1,
        )
        img = ImageBuffer(np.clip(data, 0, 1), SRGB)
        (out_dir / f"base{i:02d}.png").write_bytes(encode_png(img))


def main() -> int:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("mini_cameraset")
    synthesize_bases(workdir / "bases")

    config_path = Path(__file__).parent.parent / "configs" / "mini.json"
    obj = json.loads(config_path.read_text())
    obj["bases_dir"] = str(workdir / "bases")
    obj["out_root"] = str(workdir / "out")
    patched = workdir / "mini.json"
    patched.write_text(json.dumps(obj, indent=2))

    config = BuildConfig.from_json_file(patched)
    registry = load_registry()
    plan = plan_build(config, registry)
    print(f"planned {len(plan)} records")
    report = render_pairs(plan, config, registry)
    print(f"rendered {report['rendered']} pairs -> {report['manifest']}")
    verify = verify_manifest(report["manifest"], sample=1.0, registry=registry)
    print(f"verify ok={verify['ok']} rerendered={verify['rerendered']}")
    return 0 if verify["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
