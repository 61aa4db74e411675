"""Minimal HTTP server exposing any in-process oracle over the wire protocol.

Used by the serve-toy CLI command and by tests that exercise the remote
client path end to end.  GET /meta returns the model card; POST /classify
takes {"width", "height", "pixels": base64 RGB bytes} and returns {"probs"}.
400 = malformed request, 422 = dimension mismatch.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .imagecore import PreprocessedImage
from .oracle import CLASSIFY_PATH, META_PATH, Oracle


class _BadRequest(Exception):
    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status


def _parse_classify_body(raw: bytes, oracle: Oracle) -> PreprocessedImage:
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise _BadRequest(400, f"body is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise _BadRequest(400, "body must be a JSON object")
    for key in ("width", "height", "pixels"):
        if key not in payload:
            raise _BadRequest(400, f"missing field {key!r}")
    width, height = payload["width"], payload["height"]
    if not isinstance(width, int) or not isinstance(height, int):
        raise _BadRequest(400, "width and height must be integers")
    try:
        data = base64.b64decode(payload["pixels"], validate=True)
    except (binascii.Error, TypeError) as exc:
        raise _BadRequest(400, f"pixels is not valid base64: {exc}") from exc
    meta = oracle.meta
    if width != meta.input_width or height != meta.input_height:
        raise _BadRequest(
            422, f"model expects {meta.input_width}x{meta.input_height}, got {width}x{height}"
        )
    if len(data) != width * height * 3:
        raise _BadRequest(
            422, f"expected {width * height * 3} pixel bytes, got {len(data)}"
        )
    return PreprocessedImage(width, height, data)


class _OracleHandler(BaseHTTPRequestHandler):
    oracle: Oracle  # set on the subclass built in serve_oracle

    def _send_json(self, status: int, obj: dict) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802 (stdlib handler naming)
        if self.path != META_PATH:
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        meta = self.oracle.meta
        self._send_json(
            200,
            {
                "num_classes": meta.num_classes,
                "labels": list(meta.labels),
                "input_width": meta.input_width,
                "input_height": meta.input_height,
            },
        )

    def do_POST(self) -> None:  # noqa: N802
        if self.path != CLASSIFY_PATH:
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            image = _parse_classify_body(raw, self.oracle)
        except _BadRequest as exc:
            self._send_json(exc.status, {"error": str(exc)})
            return
        probs = self.oracle.classify(image)
        self._send_json(200, {"probs": list(probs.probs)})

    def log_message(self, fmt: str, *args) -> None:  # silence per-request stderr noise
        pass


class OracleServer:
    """Threaded HTTP server wrapper with a test-friendly lifecycle."""

    def __init__(self, oracle: Oracle, host: str = "127.0.0.1", port: int = 0) -> None:
        handler = type("BoundOracleHandler", (_OracleHandler,), {"oracle": oracle})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "OracleServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()


def serve_oracle(oracle: Oracle, host: str = "127.0.0.1", port: int = 0) -> OracleServer:
    """Start serving `oracle` in a background thread; caller stops it."""
    return OracleServer(oracle, host, port).start()
