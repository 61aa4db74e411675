"""Query-only classifier interface, built-in toy models, and the HTTP client.

The attacker sees probabilities only.  The built-in toys are closed-form
functions of the pixel bytes (no weight files), so attack runs against them
are bit-stable across machines:

  * channel  - 3 classes, softmax of per-channel means
  * trigger  - 2 classes, flips when any pixel has r > g + b
  * linear   - C classes, fixed hash-derived linear weights, softmax at scale 20

The remote client speaks the wire protocol: GET /meta for the model card and
POST /classify with base64 row-major RGB bytes.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np
import requests

from .fitness import ProbabilityVector
from .imagecore import PreprocessedImage

CLASSIFY_PATH = "/classify"
META_PATH = "/meta"


class OracleError(Exception):
    """Base class for everything that can go wrong while querying a model."""


class TransportError(OracleError):
    """Connection failure or timeout that survived the configured retries."""


class ProtocolError(OracleError):
    """Non-200 status or a response that does not match the wire schema."""


class ProbabilityError(OracleError):
    """Response parsed fine but the probabilities violate their invariants."""


class QueryFailed(OracleError):
    """An oracle failure annotated with the 1-based query index it occurred at."""

    def __init__(self, query_index: int, cause: OracleError) -> None:
        super().__init__(f"oracle query {query_index} failed: {cause}")
        self.query_index = query_index


@dataclass(frozen=True)
class OracleMeta:
    num_classes: int
    labels: tuple[str, ...]
    input_width: int
    input_height: int
    concurrent_safe: bool = True

    def __post_init__(self) -> None:
        if len(self.labels) != self.num_classes:
            raise ValueError(f"{len(self.labels)} labels for {self.num_classes} classes")
        if self.input_width < 1 or self.input_height < 1:
            raise ValueError("oracle input dimensions must be >= 1")


class Oracle:
    """Classify interface: same image in, same probabilities out, every time."""

    meta: OracleMeta

    def classify(self, image: PreprocessedImage) -> ProbabilityVector:
        raise NotImplementedError

    def _check_dims(self, image: PreprocessedImage) -> None:
        m = self.meta
        if image.width != m.input_width or image.height != m.input_height:
            raise ValueError(
                f"image is {image.width}x{image.height}, oracle expects "
                f"{m.input_width}x{m.input_height}"
            )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


class ChannelMeanOracle(Oracle):
    """Softmax over the three per-channel means (scaled to [0, 1])."""

    def __init__(self, width: int, height: int) -> None:
        self.meta = OracleMeta(3, ("red", "green", "blue"), width, height)

    def classify(self, image: PreprocessedImage) -> ProbabilityVector:
        self._check_dims(image)
        arr = image.to_array()
        # integer channel sums keep the logits exactly reproducible
        sums = arr.astype(np.int64).sum(axis=(0, 1))
        logits = sums / (image.width * image.height * 255.0)
        return ProbabilityVector.from_raw(softmax(logits).tolist())


class RedTriggerOracle(Oracle):
    """Deliberately fragile two-class model: one strongly red pixel flips it.

    m = max over pixels of (r - g - b)/255, clamped to [-1, 1]; the logits
    are (0, 4m), so the 'triggered' class wins exactly when some pixel has
    r > g + b.
    """

    def __init__(self, width: int, height: int) -> None:
        self.meta = OracleMeta(2, ("clean", "triggered"), width, height)

    def classify(self, image: PreprocessedImage) -> ProbabilityVector:
        self._check_dims(image)
        arr = image.to_array().astype(np.int64)
        diff = int((arr[:, :, 0] - arr[:, :, 1] - arr[:, :, 2]).max())
        m = min(max(diff / 255.0, -1.0), 1.0)
        return ProbabilityVector.from_raw(softmax(np.array([0.0, 4.0 * m])).tolist())


class HashLinearOracle(Oracle):
    """Linear model with hash-derived weights; portable stand-in for a
    higher-class-count classifier.

    weight(c, x, y, ch) = ((31x + 17y + 7ch + 13c) mod 101) / 101 - 0.5
    logit_c = sum(weight * byte/255) / (w*h*3), softmax at scale 20.
    """

    def __init__(self, num_classes: int, width: int, height: int) -> None:
        if num_classes < 2:
            raise ValueError("need at least 2 classes")
        labels = tuple(f"class_{c}" for c in range(num_classes))
        self.meta = OracleMeta(num_classes, labels, width, height)
        xs = np.arange(width).reshape(1, 1, width, 1)
        ys = np.arange(height).reshape(1, height, 1, 1)
        chs = np.arange(3).reshape(1, 1, 1, 3)
        cs = np.arange(num_classes).reshape(num_classes, 1, 1, 1)
        grid = (31 * xs + 17 * ys + 7 * chs + 13 * cs) % 101
        self._weights = grid.astype(np.float64) / 101.0 - 0.5  # (C, h, w, 3)
        self._norm = width * height * 3

    def classify(self, image: PreprocessedImage) -> ProbabilityVector:
        self._check_dims(image)
        v = image.to_array().astype(np.float64) / 255.0
        logits = (self._weights * v).sum(axis=(1, 2, 3)) / self._norm
        return ProbabilityVector.from_raw(softmax(20.0 * logits).tolist())


def classify_request_body(image: PreprocessedImage) -> dict:
    return {
        "width": image.width,
        "height": image.height,
        "pixels": base64.b64encode(image.data).decode("ascii"),
    }


def _snippet(text: str, limit: int = 200) -> str:
    return text if len(text) <= limit else text[:limit] + "..."


class RemoteOracle(Oracle):
    """Wire-protocol client; retries transport errors, never repairs payloads.

    classify is idempotent on the server (deterministic inference), so
    retrying a failed POST is safe.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        retries: int = 2,
        max_inflight: int = 8,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self._session = requests.Session()
        meta = self._fetch_meta()
        self.meta = OracleMeta(
            num_classes=meta["num_classes"],
            labels=tuple(meta["labels"]),
            input_width=meta["input_width"],
            input_height=meta["input_height"],
            concurrent_safe=max_inflight > 1,
        )

    def _fetch_meta(self) -> dict:
        try:
            resp = self._session.get(self.base_url + META_PATH, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"GET {META_PATH} failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"GET {META_PATH} returned {resp.status_code}: {_snippet(resp.text)}")
        try:
            meta = resp.json()
            if not isinstance(meta, dict):
                raise ValueError("meta is not an object")
            for key in ("num_classes", "labels", "input_width", "input_height"):
                if key not in meta:
                    raise ValueError(f"meta missing {key!r}")
            return meta
        except ValueError as exc:
            raise ProtocolError(f"malformed {META_PATH} response: {exc}: {_snippet(resp.text)}") from exc

    def classify(self, image: PreprocessedImage) -> ProbabilityVector:
        self._check_dims(image)
        body = classify_request_body(image)
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._session.post(
                    self.base_url + CLASSIFY_PATH, json=body, timeout=self.timeout
                )
                break
            except requests.RequestException as exc:
                last_exc = exc
        else:
            raise TransportError(
                f"POST {CLASSIFY_PATH} failed after {self.retries + 1} attempts: {last_exc}"
            ) from last_exc
        if resp.status_code != 200:
            raise ProtocolError(
                f"POST {CLASSIFY_PATH} returned {resp.status_code}: {_snippet(resp.text)}"
            )
        try:
            payload = resp.json()
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"classify response is not JSON: {_snippet(resp.text)}") from exc
        if not isinstance(payload, dict) or "probs" not in payload:
            raise ProtocolError(f"classify response missing 'probs': {_snippet(resp.text)}")
        probs = payload["probs"]
        if not isinstance(probs, list) or len(probs) != self.meta.num_classes:
            raise ProtocolError(
                f"expected {self.meta.num_classes} probabilities, got {_snippet(json.dumps(probs))}"
            )
        try:
            return ProbabilityVector.from_raw(probs)
        except ValueError as exc:
            raise ProbabilityError(f"{exc}: {_snippet(json.dumps(probs))}") from exc


def build_toy_oracle(kind: str, width: int, height: int) -> Oracle:
    """Construct a built-in oracle from its CLI name: channel | trigger | linear:C."""
    if kind == "channel":
        return ChannelMeanOracle(width, height)
    if kind == "trigger":
        return RedTriggerOracle(width, height)
    if kind.startswith("linear:"):
        num = int(kind.split(":", 1)[1])
        return HashLinearOracle(num, width, height)
    raise ValueError(f"unknown toy oracle {kind!r} (use channel, trigger, or linear:C)")
