"""HTTP endpoint exposing a served model over the raw-pixel wire protocol.

GET /meta returns the model card; POST /classify takes {"width", "height",
"pixels": base64 RGB bytes} and returns {"probs"}.  400 = malformed request,
422 = dimension mismatch, 500 = the model itself failed.  A semaphore caps
how many classifications run at once; requests are otherwise stateless.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .models import ServedModel

META_PATH = "/meta"
CLASSIFY_PATH = "/classify"


class _BadRequest(Exception):
    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status


def _parse_classify_body(raw: bytes, model: ServedModel) -> np.ndarray:
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
    if width != model.input_width or height != model.input_height:
        raise _BadRequest(
            422, f"model expects {model.input_width}x{model.input_height}, got {width}x{height}"
        )
    if len(data) != width * height * 3:
        raise _BadRequest(422, f"expected {width * height * 3} pixel bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)


class _ModelHandler(BaseHTTPRequestHandler):
    model: ServedModel  # set on the subclass built by ModelServer
    gate: threading.BoundedSemaphore

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
        model = self.model
        self._send_json(
            200,
            {
                "num_classes": len(model.labels),
                "labels": list(model.labels),
                "input_width": model.input_width,
                "input_height": model.input_height,
            },
        )

    def do_POST(self) -> None:  # noqa: N802
        if self.path != CLASSIFY_PATH:
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            pixels = _parse_classify_body(raw, self.model)
        except _BadRequest as exc:
            self._send_json(exc.status, {"error": str(exc)})
            return
        try:
            with self.gate:
                probs = self.model.classify(pixels)
        except Exception as exc:  # the model is the untrusted part here
            self._send_json(500, {"error": f"model failure: {exc}"})
            return
        self._send_json(200, {"probs": probs})

    def log_message(self, fmt: str, *args) -> None:  # silence per-request stderr noise
        pass


class ModelServer:
    """Threaded HTTP server wrapper with a test-friendly lifecycle."""

    def __init__(
        self,
        model: ServedModel,
        host: str = "127.0.0.1",
        port: int = 0,
        max_workers: int = 4,
    ) -> None:
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        attrs = {"model": model, "gate": threading.BoundedSemaphore(max_workers)}
        handler = type("BoundModelHandler", (_ModelHandler,), attrs)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "ModelServer":
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


def serve_model(
    model: ServedModel, host: str = "127.0.0.1", port: int = 0, max_workers: int = 4
) -> ModelServer:
    """Start serving `model` in a background thread; caller stops it."""
    return ModelServer(model, host, port, max_workers).start()
