import json
from pathlib import Path

import numpy as np
import pytest

from camforge.dataset import (
    BuildConfig,
    PairRecord,
    plan_build,
    read_manifest,
    render_pairs,
    verify_manifest,
)
from camforge.errors import ConfigError
from camforge.image import encode_png, pixel_checksum, read_png
from conftest import make_gradient, make_noise, make_photo


EXPOSURE_GRID = ["-3EV", "-2EV", "-1EV", "+0EV", "+1EV", "+2EV", "+3EV"]


def write_bases(root: Path, count: int = 5, size: int = 24) -> list[str]:
    root.mkdir(parents=True, exist_ok=True)
    makers = [make_gradient, make_photo, make_noise]
    paths = []
    for i in range(count):
        img = makers[i % 3](size)
        path = root / f"base{i:02d}.png"
        path.write_bytes(encode_png(img))
        paths.append(str(path))
    return paths


def mini_config(tmp_path: Path, **overrides) -> BuildConfig:
    bases = write_bases(tmp_path / "bases")
    defaults = dict(
        bases=bases,
        grids={"exposure": list(EXPOSURE_GRID)},
        pairs_per_setting=5,
        master_seed=1234,
        out_root=str(tmp_path / "out"),
    )
    defaults.update(overrides)
    return BuildConfig(**defaults)


class TestPlan:
    def test_count_law_5x7(self, tmp_path, registry):
        plan = plan_build(mini_config(tmp_path), registry)
        assert len(plan) == 35

    def test_paper_scale_count_arithmetic(self):
        # 39 settings x 2000 pairs = 78K, checked symbolically (no rendering)
        settings = 10 + 7 + 7 + 4 + 4 + 3 + 4
        assert settings == 39
        assert settings * 2000 == 78000

    def test_deterministic_plans(self, tmp_path, registry):
        cfg = mini_config(tmp_path)
        a = plan_build(cfg, registry)
        b = plan_build(cfg, registry)
        assert a == b

    def test_insufficient_bases(self, tmp_path, registry):
        with pytest.raises(ConfigError):
            plan_build(mini_config(tmp_path, pairs_per_setting=6), registry)

    def test_split_disjoint_by_base(self, tmp_path, registry):
        cfg = mini_config(
            tmp_path, pairs_per_setting=3, test_pairs_total=14, test_base_count=2
        )
        plan = plan_build(cfg, registry)
        train_bases = {r.base_ref for r in plan if r.split == "train"}
        test_bases = {r.base_ref for r in plan if r.split == "test"}
        assert train_bases and test_bases
        assert not (train_bases & test_bases)
        assert sum(r.split == "test" for r in plan) == 14

    def test_vector_matches_directive(self, tmp_path, registry):
        from camforge.calibration import calibrate
        from camforge.directive import parse_directive

        for record in plan_build(mini_config(tmp_path), registry):
            assert calibrate(parse_directive(record.directive), registry) == record.vector

    def test_record_ids_unique(self, tmp_path, registry):
        plan = plan_build(mini_config(tmp_path), registry)
        assert len({r.id for r in plan}) == len(plan)

    def test_multi_param_grids(self, tmp_path, registry):
        cfg = mini_config(
            tmp_path,
            grids={
                "exposure": ["-1EV", "+1EV"],
                "cct": ["2500K", "6500K", "10000K"],
                "style": ["Velvia"],
            },
            pairs_per_setting=2,
        )
        plan = plan_build(cfg, registry)
        assert len(plan) == (2 + 3 + 1) * 2

    def test_caption_passthrough(self, tmp_path, registry):
        cfg = mini_config(tmp_path, captions={"base00": "a test scene"})
        plan = plan_build(cfg, registry)
        with_caption = [r for r in plan if Path(r.base_ref).stem == "base00"]
        assert with_caption
        assert all(r.caption == "a test scene" for r in with_caption)

    def test_bokeh_needs_masks_dir(self, tmp_path, registry):
        cfg = mini_config(tmp_path, grids={"bokeh": ["1/4", "2/4"]})
        with pytest.raises(ConfigError):
            plan_build(cfg, registry)

    def test_paper_scale_plan_counts(self, tmp_path, registry):
        # plan only; bases are not read until render time
        masks = tmp_path / "masks"
        masks.mkdir()
        bases = [f"base{i:04d}.png" for i in range(2120)]
        for i in range(2120):
            (masks / f"base{i:04d}.png").touch()
        cfg = BuildConfig(
            bases=bases,
            grids=json.loads((Path(__file__).parent.parent / "configs" /
                              "cameraset.json").read_text())["grids"],
            pairs_per_setting=2000,
            master_seed=1,
            test_pairs_total=570,
            test_base_count=120,
            masks_dir=str(masks),
        )
        plan = plan_build(cfg, registry)
        train = [r for r in plan if r.split == "train"]
        test = [r for r in plan if r.split == "test"]
        assert len(train) == 78000
        assert len(test) == 570
        settings = {(r.param, r.raw) for r in plan}
        assert len(settings) == 39


class TestRender:
    def test_build_and_verify_all(self, tmp_path, registry):
        cfg = mini_config(tmp_path)
        plan = plan_build(cfg, registry)
        report = render_pairs(plan, cfg, registry)
        assert report["rendered"] == 35
        assert report["errors"] == []
        verify = verify_manifest(report["manifest"], sample=1.0, registry=registry)
        assert verify["ok"]
        assert verify["records"] == 35
        assert verify["rerendered"] == 35

    def test_same_seed_byte_identical_manifests(self, tmp_path, registry):
        cfg1 = mini_config(tmp_path, out_root=str(tmp_path / "out1"))
        render_pairs(plan_build(cfg1, registry), cfg1, registry)
        cfg2 = mini_config(tmp_path, out_root=str(tmp_path / "out2"))
        render_pairs(plan_build(cfg2, registry), cfg2, registry)
        m1 = (tmp_path / "out1" / "manifest.jsonl").read_bytes()
        m2 = (tmp_path / "out2" / "manifest.jsonl").read_bytes()
        assert m1 == m2

    def test_worker_count_does_not_change_bytes(self, tmp_path, registry):
        cfg1 = mini_config(tmp_path, out_root=str(tmp_path / "w1"))
        render_pairs(plan_build(cfg1, registry), cfg1, registry, workers=1)
        cfg4 = mini_config(tmp_path, out_root=str(tmp_path / "w4"))
        render_pairs(plan_build(cfg4, registry), cfg4, registry, workers=4)
        m1 = (tmp_path / "w1" / "manifest.jsonl").read_bytes()
        m4 = (tmp_path / "w4" / "manifest.jsonl").read_bytes()
        assert m1 == m4

    def test_neutral_directive_checksum_equals_base(self, tmp_path, registry):
        cfg = mini_config(tmp_path, grids={"exposure": ["+0EV"]}, pairs_per_setting=5)
        plan = plan_build(cfg, registry)
        report = render_pairs(plan, cfg, registry)
        for record in read_manifest(report["manifest"]):
            base = read_png(record.base_ref)
            assert record.output_checksum == pixel_checksum(base)

    def test_bokeh_with_masks_builds_and_verifies(self, tmp_path, registry):
        masks_dir = tmp_path / "masks"
        masks_dir.mkdir()
        cfg = mini_config(
            tmp_path,
            grids={"bokeh": ["2/4", "4/4"]},
            pairs_per_setting=2,
            masks_dir=str(masks_dir),
        )
        for base in cfg.bases[:3]:
            mask = np.zeros((24, 24, 3))
            mask[8:16, 8:16] = 1.0
            from camforge.image import SRGB, ImageBuffer

            (masks_dir / f"{Path(base).stem}.png").write_bytes(
                encode_png(ImageBuffer(mask, SRGB))
            )
        plan = plan_build(cfg, registry)
        assert len(plan) == 4
        assert all(r.mask_ref for r in plan)
        report = render_pairs(plan, cfg, registry)
        assert report["rendered"] == 4 and not report["errors"]
        verify = verify_manifest(report["manifest"], sample=1.0, registry=registry)
        assert verify["ok"]

    def test_corrupt_base_isolated(self, tmp_path, registry):
        cfg = mini_config(tmp_path)
        Path(cfg.bases[0]).write_bytes(b"not a png at all")
        plan = plan_build(cfg, registry)
        report = render_pairs(plan, cfg, registry)
        assert len(report["errors"]) == 7  # that base appears once per level
        assert report["rendered"] == 28
        verify = verify_manifest(report["manifest"], sample=1.0, registry=registry)
        assert verify["ok"]


class TestVerify:
    def build(self, tmp_path, registry):
        cfg = mini_config(tmp_path)
        report = render_pairs(plan_build(cfg, registry), cfg, registry)
        return Path(report["manifest"])

    def test_edited_vector_detected(self, tmp_path, registry):
        manifest = self.build(tmp_path, registry)
        lines = manifest.read_text().splitlines()
        obj = json.loads(lines[3])
        obj["vector"]["exposure_s"] += 0.25
        lines[3] = json.dumps(obj, separators=(",", ":"))
        manifest.write_text("\n".join(lines) + "\n")
        verify = verify_manifest(manifest, sample=1.0, registry=registry)
        assert not verify["ok"]
        assert len(verify["vector_mismatches"]) == 1

    def test_bitflipped_output_detected(self, tmp_path, registry):
        manifest = self.build(tmp_path, registry)
        record = read_manifest(manifest)[5]
        out_path = manifest.parent / record.output_ref
        img = read_png(out_path)
        img.data[0, 0, 0] = 1.0 - img.data[0, 0, 0]
        out_path.write_bytes(encode_png(img))
        verify = verify_manifest(manifest, sample=1.0, registry=registry)
        assert not verify["ok"]
        assert verify["checksum_mismatches"] == [record.id]

    def test_sampled_verify_subset(self, tmp_path, registry):
        manifest = self.build(tmp_path, registry)
        verify = verify_manifest(manifest, sample=0.3, seed=9, registry=registry)
        assert verify["ok"]
        assert 0 < verify["rerendered"] < 35


def test_config_json_roundtrip(tmp_path):
    bases_dir = tmp_path / "bases"
    write_bases(bases_dir, count=3)
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "bases_dir": "bases",
                "grids": {"exposure": ["+1EV"]},
                "pairs_per_setting": 2,
                "master_seed": 7,
                "out_root": "out",
            }
        )
    )
    cfg = BuildConfig.from_json_file(cfg_path)
    assert len(cfg.bases) == 3
    assert cfg.out_root == str(tmp_path / "out")


def test_record_json_roundtrip(tmp_path, registry):
    plan = plan_build(mini_config(tmp_path), registry)
    record = plan[0]
    assert PairRecord.from_json(json.loads(json.dumps(record.to_json()))) == record
