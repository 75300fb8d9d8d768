"""camforge command line: parse, calibrate, render, dataset, metrics,
condcheck, serve.

Structured results go to stdout as JSON; diagnostics go to stderr.
Exit codes: 0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import __version__
from .calibration import calibrate, load_registry
from .dataset import BuildConfig, plan_build, read_manifest, render_pairs, verify_manifest
from .directive import parse_directive
from .errors import CamforgeError
from .image import decode_png_meta, encode_png, read_png
from .metrics import compare
from .transforms import apply_chain

RENDER_PARAM_FLAGS = (
    "exposure",
    "cct",
    "contrast",
    "saturation",
    "zoom",
    "bokeh",
    "style",
)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camforge",
        description="camera-aware retouching toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="parse a camera control directive")
    p_parse.add_argument("text")

    p_cal = sub.add_parser("calibrate", help="directive -> normalized camera vector")
    p_cal.add_argument("text")

    p_render = sub.add_parser("render", help="apply camera transforms to a PNG")
    p_render.add_argument("--in", dest="input", required=True)
    p_render.add_argument("--out", dest="output", required=True)
    for flag in RENDER_PARAM_FLAGS:
        p_render.add_argument(f"--{flag}")
    p_render.add_argument("--mask", help="foreground mask PNG (required for bokeh)")
    p_render.add_argument("--directive", help="full directive text instead of flags")

    p_ds = sub.add_parser("dataset", help="paired dataset synthesis")
    ds_sub = p_ds.add_subparsers(dest="dataset_command", required=True)
    p_build = ds_sub.add_parser("build", help="plan and render a dataset")
    p_build.add_argument("--config", required=True)
    p_build.add_argument("--out", help="override the configured output root")
    p_build.add_argument("--workers", type=int, default=1)
    p_verify = ds_sub.add_parser("verify", help="re-check a manifest")
    p_verify.add_argument("--manifest", required=True)
    p_verify.add_argument("--sample", type=float, default=1.0)
    p_verify.add_argument("--seed", type=int, default=0)

    p_metrics = sub.add_parser("metrics", help="PSNR / SSIM / delta-E")
    p_metrics.add_argument("--ref")
    p_metrics.add_argument("--test")
    p_metrics.add_argument("--manifest", help="batch mode over a manifest")
    p_metrics.add_argument("--limit", type=int)

    p_check = sub.add_parser("condcheck", help="conditioning-stack invariant suite")
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--skip-gradcheck", action="store_true")
    p_check.add_argument("--skip-probe", action="store_true")

    p_serve = sub.add_parser("serve", help="run the local HTTP service")
    p_serve.add_argument("--port", type=int, default=8521)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--console", action="store_true", help="serve the retouch console")

    return parser


def _cmd_parse(args) -> int:
    _emit(parse_directive(args.text).to_json())
    return 0


def _cmd_calibrate(args) -> int:
    directive = parse_directive(args.text)
    vector = calibrate(directive, load_registry())
    _emit({"directive": directive.to_json(), "vector": vector.to_json()})
    return 0


def _directive_from_flags(args) -> str:
    given = [
        (flag, getattr(args, flag)) for flag in RENDER_PARAM_FLAGS
        if getattr(args, flag) is not None
    ]
    if args.directive is not None:
        if given:
            raise CamforgeError("--directive and per-parameter flags are exclusive")
        return args.directive
    body = ", ".join(f"{flag}={value}" for flag, value in given)
    return f"[CONTROL: {body}]"


def _cmd_render(args) -> int:
    directive = parse_directive(_directive_from_flags(args))
    registry = load_registry()
    data = Path(args.input).read_bytes()
    img, depth = decode_png_meta(data)
    mask = None
    if args.mask:
        mask = read_png(args.mask).data[:, :, 0]
    rendered = apply_chain(img, directive, registry, bokeh_mask=mask)
    Path(args.output).write_bytes(encode_png(rendered, bit_depth=depth))
    _emit(
        {
            "in": args.input,
            "out": args.output,
            "directive": directive.to_json()["canonical"],
            "vector": calibrate(directive, registry).to_json(),
            "bit_depth": depth,
        }
    )
    return 0


def _cmd_dataset(args) -> int:
    if args.dataset_command == "build":
        config = BuildConfig.from_json_file(args.config)
        if args.out:
            config.out_root = args.out
        registry = load_registry()
        plan = plan_build(config, registry)
        report = render_pairs(plan, config, registry, workers=args.workers)
        _emit(report)
        return 0 if not report["errors"] else 1
    if args.dataset_command == "verify":
        report = verify_manifest(args.manifest, sample=args.sample, seed=args.seed)
        _emit(report)
        return 0 if report["ok"] else 1
    raise CamforgeError(f"unknown dataset command {args.dataset_command}")


def _cmd_metrics(args) -> int:
    if args.manifest:
        registry = load_registry()
        records = read_manifest(args.manifest)
        if args.limit:
            records = records[: args.limit]
        root = Path(args.manifest).parent
        rows = []
        for record in records:
            ref = read_png(record.base_ref)
            test = read_png(root / record.output_ref)
            report = compare(ref, test)
            rows.append(
                {"id": record.id, "param": record.param, "raw": record.raw}
                | report.to_json()
            )
        n = max(1, len(rows))
        _emit(
            {
                "records": rows,
                "mean": {
                    "psnr": sum(r["psnr"] for r in rows) / n,
                    "ssim": sum(r["ssim"] for r in rows) / n,
                    "delta_e": sum(r["delta_e"] for r in rows) / n,
                },
            }
        )
        return 0
    if not args.ref or not args.test:
        raise CamforgeError("metrics needs --ref and --test (or --manifest)")
    report = compare(read_png(args.ref), read_png(args.test))
    _emit(report.to_json())
    return 0


def _cmd_condcheck(args) -> int:
    from .cond.check import condcheck_report

    report = condcheck_report(
        seed=args.seed,
        include_gradcheck=not args.skip_gradcheck,
        include_probe=not args.skip_probe,
    )
    _emit(report)
    return 0 if report["ok"] else 1


def _cmd_serve(args) -> int:
    from .service import serve

    console_root = None
    if args.console:
        console_root = Path(__file__).resolve().parents[2] / "frontend" / "static"
        if not console_root.is_dir():
            raise CamforgeError(f"console assets not found at {console_root}")
    print(f"camforge service on http://{args.host}:{args.port}", file=sys.stderr)
    serve(port=args.port, host=args.host, console_root=console_root)
    return 0


_COMMANDS = {
    "parse": _cmd_parse,
    "calibrate": _cmd_calibrate,
    "render": _cmd_render,
    "dataset": _cmd_dataset,
    "metrics": _cmd_metrics,
    "condcheck": _cmd_condcheck,
    "serve": _cmd_serve,
}


_VALUE_FLAGS = {f"--{flag}" for flag in RENDER_PARAM_FLAGS}


def _normalize_argv(argv: list[str]) -> list[str]:
    """Join value flags with arguments that start with a dash (e.g.
    ``--exposure -1EV``), which argparse would otherwise read as options."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        token = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            token in _VALUE_FLAGS
            and nxt is not None
            and len(nxt) > 1
            and nxt[0] == "-"
            and nxt[1].isdigit()
        ):
            out.append(f"{token}={nxt}")
            i += 2
        else:
            out.append(token)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_normalize_argv(list(argv)))
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract says 1
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (CamforgeError, OSError, json.JSONDecodeError) as exc:
        print(f"error [{getattr(exc, 'code', 'io')}]: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
