"""Paired-dataset synthesis: plan, render, and verify.

A build enumerates (parameter, level) settings from the config grids,
samples base images per setting with seeded shuffles, renders ground
truth through the transform chain, and writes a line-delimited JSON
manifest binding each pair to its directive, calibrated vector, seed and
output checksum.  (config, master_seed) fully determines both manifest
bytes and image bytes, independent of worker count.
"""

from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .calibration import CameraVector, StyleRegistry, calibrate, load_registry
from .directive import Directive, parse_directive, render_directive
from .errors import CamforgeError, ConfigError
from .image import decode_png, encode_png, pixel_checksum, read_png
from .transforms import apply_chain, chain_ops

MANIFEST_NAME = "manifest.jsonl"
CONFIG_ECHO_NAME = "build.json"


@dataclass(frozen=True)
class PairRecord:
    """One synthesized training pair (see module docstring)."""

    id: str
    base_ref: str
    output_ref: str
    directive: str
    param: str
    raw: str
    vector: CameraVector
    seed: int
    split: str
    chain: tuple[str, ...]
    caption: str | None = None
    mask_ref: str | None = None  # foreground matte, bokeh settings only
    output_checksum: str | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "base_ref": self.base_ref,
            "output_ref": self.output_ref,
            "directive": self.directive,
            "caption": self.caption,
            "param": self.param,
            "raw": self.raw,
            "vector": self.vector.to_json(),
            "seed": self.seed,
            "split": self.split,
            "chain": list(self.chain),
            "mask_ref": self.mask_ref,
            "output_checksum": self.output_checksum,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PairRecord":
        return cls(
            id=obj["id"],
            base_ref=obj["base_ref"],
            output_ref=obj["output_ref"],
            directive=obj["directive"],
            caption=obj.get("caption"),
            param=obj["param"],
            raw=obj["raw"],
            vector=CameraVector.from_json(obj["vector"]),
            seed=obj["seed"],
            split=obj["split"],
            chain=tuple(obj["chain"]),
            mask_ref=obj.get("mask_ref"),
            output_checksum=obj.get("output_checksum"),
        )


@dataclass
class BuildConfig:
    bases: list[str]
    grids: dict[str, list[str]]  # param -> raw value strings, e.g. ["-3EV", ...]
    pairs_per_setting: int
    master_seed: int
    out_root: str = "cameraset_out"
    test_pairs_total: int = 0
    test_base_count: int = 0
    captions: dict[str, str] = field(default_factory=dict)
    masks_dir: str | None = None  # <base stem>.png mattes; required for bokeh

    def mask_for(self, base_ref: str) -> str | None:
        if self.masks_dir is None:
            return None
        candidate = Path(self.masks_dir) / f"{Path(base_ref).stem}.png"
        return str(candidate) if candidate.is_file() else None

    @classmethod
    def from_json_file(cls, path: str | Path) -> "BuildConfig":
        path = Path(path)
        obj = json.loads(path.read_text())
        root = path.parent

        def resolve(p: str) -> str:
            q = Path(p)
            return str(q if q.is_absolute() else root / q)

        if "bases" in obj:
            bases = [resolve(p) for p in obj["bases"]]
        elif "bases_dir" in obj:
            bases = sorted(str(p) for p in Path(resolve(obj["bases_dir"])).glob("*.png"))
        else:
            raise ConfigError("config needs 'bases' or 'bases_dir'")
        captions: dict[str, str] = {}
        if obj.get("captions"):
            captions = json.loads(Path(resolve(obj["captions"])).read_text())
        return cls(
            bases=bases,
            grids=obj["grids"],
            pairs_per_setting=obj["pairs_per_setting"],
            master_seed=obj["master_seed"],
            out_root=resolve(obj.get("out_root", "cameraset_out")),
            test_pairs_total=obj.get("test_pairs_total", 0),
            test_base_count=obj.get("test_base_count", 0),
            captions=captions,
            masks_dir=resolve(obj["masks_dir"]) if obj.get("masks_dir") else None,
        )


def _settings(config: BuildConfig) -> list[tuple[str, str]]:
    out = []
    for param, levels in config.grids.items():
        for raw in levels:
            out.append((param, raw))
    return out


def _canonical_single(param: str, raw: str) -> tuple[Directive, str, str]:
    """Parse one grid entry into a single-pair directive; returns the
    directive, its canonical text, and the canonical raw-value token."""
    directive = parse_directive(f"[CONTROL: {param}={raw}]")
    canonical = render_directive(directive)
    raw_canonical = canonical[len("[CONTROL: ") + len(param) + 1 : -1]
    return directive, canonical, raw_canonical


def _record_id(split: str, param: str, raw_canonical: str, base_ref: str) -> str:
    digest = hashlib.sha256(
        f"camforge-pair-v1|{split}|{param}|{raw_canonical}|{base_ref}".encode()
    )
    return digest.hexdigest()[:16]


def _record_seed(master_seed: int, record_id: str) -> int:
    digest = hashlib.sha256(
        master_seed.to_bytes(8, "big", signed=False) + record_id.encode()
    )
    return int.from_bytes(digest.digest()[:8], "big")


def _setting_shuffle(pool: list[str], master_seed: int, split: str, param: str, raw: str) -> list[str]:
    key = hashlib.sha256(f"{master_seed}|{split}|{param}|{raw}".encode()).digest()
    rng = random.Random(int.from_bytes(key[:8], "big"))
    shuffled = list(pool)
    rng.shuffle(shuffled)
    return shuffled


def plan_build(
    config: BuildConfig, registry: StyleRegistry | None = None
) -> list[PairRecord]:
    """Deterministically enumerate every pair record (unrendered)."""
    registry = registry or load_registry()
    if config.pairs_per_setting < 1:
        raise ConfigError("pairs_per_setting must be >= 1")
    if len(set(config.bases)) != len(config.bases):
        raise ConfigError("duplicate base images in config")
    if not config.grids:
        raise ConfigError("no parameter grids configured")
    if config.test_pairs_total > 0 and config.test_base_count < 1:
        raise ConfigError("test pairs requested but test_base_count is 0")
    if config.test_base_count >= len(config.bases):
        raise ConfigError("test_base_count must leave at least one training base")

    # disjoint train/test pools via one seeded shuffle of the base list
    pool = _setting_shuffle(config.bases, config.master_seed, "split", "*", "*")
    test_pool = pool[: config.test_base_count]
    train_pool = pool[config.test_base_count :]

    settings = _settings(config)
    n = len(settings)
    test_counts = [
        config.test_pairs_total // n + (1 if i < config.test_pairs_total % n else 0)
        for i in range(n)
    ]

    records: list[PairRecord] = []
    for split, counts, split_pool in (
        ("train", [config.pairs_per_setting] * n, train_pool),
        ("test", test_counts, test_pool),
    ):
        for (param, raw), count in zip(settings, counts):
            if count == 0:
                continue
            pool = split_pool
            if param == "bokeh":
                pool = [b for b in split_pool if config.mask_for(b)]
                if not pool:
                    raise ConfigError(
                        "bokeh settings need foreground masks; set masks_dir "
                        "with one <base stem>.png matte per eligible base"
                    )
            if count > len(pool):
                raise ConfigError(
                    f"insufficient {split} bases for {param}={raw}: "
                    f"need {count}, have {len(pool)}"
                )
            directive, canonical, raw_canonical = _canonical_single(param, raw)
            vector = calibrate(directive, registry)  # validates ranges
            chain = tuple(chain_ops(directive).describe())
            chosen = _setting_shuffle(pool, config.master_seed, split, param, raw)[
                :count
            ]
            for base_ref in chosen:
                rid = _record_id(split, param, raw_canonical, base_ref)
                records.append(
                    PairRecord(
                        id=rid,
                        base_ref=base_ref,
                        output_ref=f"images/{split}/{rid}.png",
                        directive=canonical,
                        caption=config.captions.get(Path(base_ref).stem),
                        param=param,
                        raw=raw_canonical,
                        vector=vector,
                        seed=_record_seed(config.master_seed, rid),
                        split=split,
                        chain=chain,
                        mask_ref=config.mask_for(base_ref) if param == "bokeh" else None,
                    )
                )
    return records


def _render_record(record: PairRecord, registry: StyleRegistry):
    base = read_png(record.base_ref)
    mask = read_png(record.mask_ref).data[:, :, 0] if record.mask_ref else None
    return apply_chain(
        base, parse_directive(record.directive), registry, bokeh_mask=mask
    )


def _render_one(
    record: PairRecord, out_root: Path, registry: StyleRegistry
) -> PairRecord:
    rendered = _render_record(record, registry)
    out_path = out_root / record.output_ref
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(encode_png(rendered))
    return replace(record, output_checksum=pixel_checksum(rendered))


def render_pairs(
    plan: list[PairRecord],
    config: BuildConfig,
    registry: StyleRegistry | None = None,
    workers: int = 1,
) -> dict:
    """Render every planned record and write the manifest.

    Per-record failures are collected, not fatal; the manifest holds only
    successfully rendered records, in plan order regardless of workers.
    """
    registry = registry or load_registry()
    out_root = Path(config.out_root)
    out_root.mkdir(parents=True, exist_ok=True)

    def render(record: PairRecord):
        try:
            return _render_one(record, out_root, registry)
        except (OSError, CamforgeError) as exc:
            return {"id": record.id, "base_ref": record.base_ref, "error": str(exc)}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(render, plan))
    else:
        results = [render(r) for r in plan]

    errors = [r for r in results if isinstance(r, dict)]
    rendered = [r for r in results if isinstance(r, PairRecord)]

    manifest_path = out_root / MANIFEST_NAME
    with manifest_path.open("w") as fh:
        for record in rendered:
            fh.write(json.dumps(record.to_json(), separators=(",", ":")) + "\n")
    echo = {
        "bases": config.bases,
        "grids": config.grids,
        "pairs_per_setting": config.pairs_per_setting,
        "master_seed": config.master_seed,
        "test_pairs_total": config.test_pairs_total,
        "test_base_count": config.test_base_count,
        "masks_dir": config.masks_dir,
    }
    (out_root / CONFIG_ECHO_NAME).write_text(
        json.dumps(echo, indent=2, sort_keys=True) + "\n"
    )
    return {
        "manifest": str(manifest_path),
        "planned": len(plan),
        "rendered": len(rendered),
        "errors": errors,
    }


def read_manifest(path: str | Path) -> list[PairRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(PairRecord.from_json(json.loads(line)))
    return records


def verify_manifest(
    manifest_path: str | Path,
    sample: float = 1.0,
    seed: int = 0,
    registry: StyleRegistry | None = None,
) -> dict:
    """Re-parse, re-calibrate, and re-render (a sampled subset) against the
    manifest; reports every mismatch."""
    registry = registry or load_registry()
    manifest_path = Path(manifest_path)
    out_root = manifest_path.parent
    records = read_manifest(manifest_path)
    rng = random.Random(seed)

    report = {
        "records": len(records),
        "parse_mismatches": [],
        "vector_mismatches": [],
        "checksum_mismatches": [],
        "io_errors": [],
        "rerendered": 0,
    }
    for record in records:
        try:
            directive = parse_directive(record.directive)
            if render_directive(directive) != record.directive:
                report["parse_mismatches"].append(record.id)
                continue
        except CamforgeError:
            report["parse_mismatches"].append(record.id)
            continue
        if calibrate(directive, registry) != record.vector:
            report["vector_mismatches"].append(record.id)
            continue
        if rng.random() <= sample:
            report["rerendered"] += 1
            try:
                rendered = _render_record(record, registry)
                if pixel_checksum(rendered) != record.output_checksum:
                    report["checksum_mismatches"].append(record.id)
                    continue
                on_disk = decode_png((out_root / record.output_ref).read_bytes())
                if pixel_checksum(on_disk) != record.output_checksum:
                    report["checksum_mismatches"].append(record.id)
            except (OSError, CamforgeError) as exc:
                report["io_errors"].append({"id": record.id, "error": str(exc)})
    report["ok"] = not (
        report["parse_mismatches"]
        or report["vector_mismatches"]
        or report["checksum_mismatches"]
        or report["io_errors"]
    )
    return report
