"""Local HTTP service: parse/calibrate/render over HTTP/1.1.

Endpoints (all stateless):

    GET  /health              -> 200 "ok"
    GET  /styles              -> style registry as JSON
    POST /calibrate           -> {"directive": ..., "vector": ...}
         body: {"directive": "<text>"}
    POST /render?directive=<urlencoded>[&return=image|vector|both]
         body: PNG bytes
         -> PNG bytes (vector in the X-Camforge-Vector header), or JSON
            when return=vector
    POST /metrics             -> {"psnr": ..., "ssim": ..., "delta_e": ...}
         body: {"ref": <base64 PNG>, "test": <base64 PNG>}

Parse and validation failures map to 400, range violations to 422; both
carry the originating error code.  Binds loopback by default; this is a
tool companion, not a deployment.

With a console root configured, GET serves the retouch console's static
files as well.
"""

from __future__ import annotations

import base64
import json
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import __version__
from .calibration import StyleRegistry, calibrate, load_registry
from .directive import parse_directive
from .errors import (
    CamforgeError,
    RangeError,
    TooSmallError,
    UnknownStyleError,
)
from .image import decode_png, decode_png_meta, encode_png
from .metrics import compare
from .transforms import apply_chain

_RANGE_ERRORS = (RangeError, UnknownStyleError, TooSmallError)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


class CamforgeHandler(BaseHTTPRequestHandler):
    server_version = f"camforge/{__version__}"
    protocol_version = "HTTP/1.1"

    # --- plumbing ---------------------------------------------------------

    @property
    def registry(self) -> StyleRegistry:
        return self.server.registry

    def log_message(self, fmt, *args):  # quiet by default
        if self.server.verbose:
            super().log_message(fmt, *args)

    def _send(self, status: int, body: bytes, content_type: str, headers=None):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for key, value in (headers or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, obj, headers=None):
        body = json.dumps(obj).encode()
        self._send(status, body, "application/json", headers)

    def _send_error_obj(self, exc: Exception):
        if isinstance(exc, _RANGE_ERRORS):
            status = 422
        elif isinstance(exc, (CamforgeError, OSError, json.JSONDecodeError)):
            status = 400
        else:
            status = 500
        code = getattr(exc, "code", "internal" if status == 500 else "bad-request")
        self._send_json(status, {"error": code, "message": str(exc)})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length) if length else b""

    # --- routes -----------------------------------------------------------

    def do_GET(self):
        parsed = urlparse(self.path)
        try:
            if parsed.path == "/health":
                self._send(200, b"ok", "text/plain; charset=utf-8")
            elif parsed.path == "/styles":
                self._send_json(200, self.registry.to_json())
            elif self.server.console_root is not None:
                self._serve_static(parsed.path)
            else:
                self._send_json(404, {"error": "not-found", "message": parsed.path})
        except Exception as exc:  # per-request isolation
            self._send_error_obj(exc)

    def do_POST(self):
        parsed = urlparse(self.path)
        try:
            if parsed.path == "/calibrate":
                self._handle_calibrate()
            elif parsed.path == "/render":
                self._handle_render(parse_qs(parsed.query))
            elif parsed.path == "/metrics":
                self._handle_metrics()
            else:
                self._send_json(404, {"error": "not-found", "message": parsed.path})
        except Exception as exc:
            self._send_error_obj(exc)

    def _serve_static(self, path: str):
        root = Path(self.server.console_root)
        rel = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_json(404, {"error": "not-found", "message": path})
            return
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), ctype)

    def _handle_calibrate(self):
        obj = json.loads(self._read_body() or b"{}")
        if "directive" not in obj:
            self._send_json(
                400, {"error": "bad-request", "message": "missing 'directive' field"}
            )
            return
        directive = parse_directive(obj["directive"])
        vector = calibrate(directive, self.registry)
        self._send_json(
            200, {"directive": directive.to_json(), "vector": vector.to_json()}
        )

    def _handle_metrics(self):
        obj = json.loads(self._read_body() or b"{}")
        if "ref" not in obj or "test" not in obj:
            self._send_json(
                400,
                {"error": "bad-request", "message": "need 'ref' and 'test' PNGs"},
            )
            return
        ref = decode_png(base64.b64decode(obj["ref"]))
        test = decode_png(base64.b64decode(obj["test"]))
        self._send_json(200, compare(ref, test).to_json())

    def _handle_render(self, query: dict):
        directives = query.get("directive")
        if not directives:
            self._send_json(
                400, {"error": "bad-request", "message": "missing 'directive' query"}
            )
            return
        mode = query.get("return", ["image"])[0]
        if mode not in ("image", "vector", "both"):
            self._send_json(
                400, {"error": "bad-request", "message": f"bad return mode {mode!r}"}
            )
            return
        directive = parse_directive(directives[0])
        vector = calibrate(directive, self.registry)
        started = time.perf_counter()
        img, depth = decode_png_meta(self._read_body())
        rendered = apply_chain(img, directive, self.registry)
        payload = encode_png(rendered, bit_depth=depth)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        if mode == "vector":
            self._send_json(
                200, {"vector": vector.to_json(), "timing_ms": elapsed_ms}
            )
            return
        headers = {
            "X-Camforge-Vector": json.dumps(vector.to_json()),
            "X-Camforge-Timing-Ms": f"{elapsed_ms:.3f}",
        }
        self._send(200, payload, "image/png", headers)


def make_server(
    port: int = 8521,
    host: str = "127.0.0.1",
    registry: StyleRegistry | None = None,
    console_root: str | Path | None = None,
    verbose: bool = False,
) -> ThreadingHTTPServer:
    """Bind the service (raising OSError if the port is taken) without
    starting the loop; callers run serve_forever()."""
    server = ThreadingHTTPServer((host, port), CamforgeHandler)
    server.registry = registry or load_registry()
    server.console_root = str(console_root) if console_root else None
    server.verbose = verbose
    return server


def serve(
    port: int = 8521,
    host: str = "127.0.0.1",
    registry: StyleRegistry | None = None,
    console_root: str | Path | None = None,
    verbose: bool = True,
) -> None:
    server = make_server(port, host, registry, console_root, verbose)
    try:
        server.serve_forever()
    finally:
        server.server_close()
