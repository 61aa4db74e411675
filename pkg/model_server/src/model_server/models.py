"""Served classification models.

Every model answers the same question: given an already-preprocessed RGB
tensor (raw bytes 0..255 at the model's fixed input size), what is the
probability of each served label?  Normalization statistics are applied
here, server-side, so the wire format stays plain bytes.

Two fully offline backends cover the two classifier styles:

- ``tiny-cnn``: a seeded randomly-initialized CNN with a fixed internal
  class vocabulary.  Probabilities over a served label subset are the full
  softmax restricted to the subset's logits and renormalized.
- ``toy-embed``: a seeded zero-shot model.  Labels become captions via the
  "a photo of " template; image and caption embeddings are unit-normalized
  and cosine similarities are softmaxed.

``clip:<id>`` and ``hub:<id>`` load real pretrained checkpoints through the
same interface when the weights and the transformers package are available.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch
from torch import nn

CAPTION_PREFIX = "a photo of "

# channel statistics applied to inputs scaled to [0, 1]
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

MIN_SIDE = 16


class ModelError(Exception):
    """The model cannot be built or cannot classify (maps to HTTP 500)."""


class ModelUnavailableError(ModelError):
    """Weights or optional dependencies for this model are not obtainable."""


def build_caption(label: str) -> str:
    """Caption used for zero-shot text embeddings: prefix plus raw label."""
    return CAPTION_PREFIX + label


class ServedModel:
    """One classifier behind the wire protocol.

    Subclasses set name/labels/input dims (and caption_template for
    zero-shot models) then implement _probabilities on a float64 array of
    shape (height, width, 3) scaled to [0, 1].
    """

    name: str
    labels: tuple[str, ...]
    input_width: int
    input_height: int
    caption_template: str | None = None

    def _init_card(
        self, name: str, labels: tuple[str, ...], width: int, height: int
    ) -> None:
        if len(labels) < 2:
            raise ModelError(f"{name}: need at least 2 labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise ModelError(f"{name}: served labels must be distinct")
        if width < MIN_SIDE or height < MIN_SIDE:
            raise ModelError(
                f"{name}: input must be at least {MIN_SIDE}x{MIN_SIDE}, got {width}x{height}"
            )
        self.name = name
        self.labels = labels
        self.input_width = width
        self.input_height = height

    def classify(self, pixels: np.ndarray) -> list[float]:
        """Probabilities per served label for one (height, width, 3) uint8 array."""
        expected = (self.input_height, self.input_width, 3)
        if pixels.shape != expected:
            raise ModelError(f"expected tensor shape {expected}, got {pixels.shape}")
        probs = self._probabilities(pixels.astype(np.float64) / 255.0)
        probs = np.clip(probs, 0.0, None)
        total = float(probs.sum())
        if not np.isfinite(total) or total <= 0.0:
            raise ModelError(f"model produced an invalid probability mass {total}")
        return [float(p) for p in probs / total]

    def _probabilities(self, scaled: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _normalize(scaled: np.ndarray, mean, std) -> np.ndarray:
    return (scaled - np.asarray(mean)) / np.asarray(std)


class TinyConvModel(ServedModel):
    """Seeded randomly-initialized CNN with a fixed internal vocabulary.

    Stands in for a standard DNN classifier: the softmax runs over every
    internal class and the served subset is restricted and renormalized,
    so serving fewer labels never changes their relative odds.
    """

    VOCABULARY = tuple(f"class{i:02d}" for i in range(16))

    def __init__(
        self,
        labels: tuple[str, ...] | None = None,
        width: int = 224,
        height: int = 224,
        seed: int = 0,
    ) -> None:
        served = self.VOCABULARY if labels is None else tuple(labels)
        unknown = [label for label in served if label not in self.VOCABULARY]
        if unknown:
            raise ModelError(
                f"tiny-cnn has no classes {unknown}; vocabulary is {list(self.VOCABULARY)}"
            )
        self._init_card(f"tiny-cnn:{seed}", served, width, height)
        self._indices = [self.VOCABULARY.index(label) for label in served]
        generator = torch.Generator().manual_seed(seed)
        self._net = nn.Sequential(
            nn.Conv2d(3, 8, kernel_size=5, stride=2),
            nn.ReLU(),
            nn.Conv2d(8, 16, kernel_size=3, stride=2),
            nn.ReLU(),
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
            nn.Linear(16, len(self.VOCABULARY)),
        )
        with torch.no_grad():
            for param in self._net.parameters():
                param.copy_(torch.empty_like(param).normal_(0.0, 0.5, generator=generator))
        # double precision keeps CPU inference bit-stable across thread counts
        self._net.double().eval()

    def _probabilities(self, scaled: np.ndarray) -> np.ndarray:
        x = _normalize(scaled, IMAGENET_MEAN, IMAGENET_STD)
        tensor = torch.from_numpy(x).permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            logits = self._net(tensor)[0]
        full = torch.softmax(logits, dim=0).numpy()
        return full[self._indices]


class ToyEmbeddingModel(ServedModel):
    """Seeded zero-shot classifier over caption embeddings.

    Caption vectors come from a hash-seeded Gaussian per caption; the image
    vector is a seeded projection of blockwise channel means.  Both sides
    are unit-normalized and cosine similarities are softmaxed, the same
    pipeline a CLIP-family model runs.
    """

    EMBED_DIM = 64
    GRID = 4
    LOGIT_SCALE = 100.0

    def __init__(
        self,
        labels: tuple[str, ...],
        width: int = 224,
        height: int = 224,
        seed: int = 0,
    ) -> None:
        self._init_card(f"toy-embed:{seed}", tuple(labels), width, height)
        self.caption_template = CAPTION_PREFIX + "{label}"
        features = self.GRID * self.GRID * 3 + 6  # block means + global mean/std
        rng = np.random.default_rng(seed)
        self._projection = rng.standard_normal((self.EMBED_DIM, features))
        text = np.stack([self._caption_embedding(build_caption(l)) for l in self.labels])
        self._text = text / np.linalg.norm(text, axis=1, keepdims=True)

    def _caption_embedding(self, caption: str) -> np.ndarray:
        digest = hashlib.sha256(caption.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        return rng.standard_normal(self.EMBED_DIM)

    def _image_features(self, scaled: np.ndarray) -> np.ndarray:
        h, w = scaled.shape[:2]
        rows = np.linspace(0, h, self.GRID + 1, dtype=int)
        cols = np.linspace(0, w, self.GRID + 1, dtype=int)
        blocks = [
            scaled[rows[i] : rows[i + 1], cols[j] : cols[j + 1]].mean(axis=(0, 1))
            for i in range(self.GRID)
            for j in range(self.GRID)
        ]
        flat = np.concatenate(blocks)
        return np.concatenate([flat, scaled.mean(axis=(0, 1)), scaled.std(axis=(0, 1))])

    def _probabilities(self, scaled: np.ndarray) -> np.ndarray:
        vec = self._projection @ self._image_features(scaled)
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec = vec / norm
        logits = self.LOGIT_SCALE * (self._text @ vec)
        logits -= logits.max()
        exp = np.exp(logits)
        return exp / exp.sum()


class ClipZeroShotModel(ServedModel):
    """Pretrained CLIP-family checkpoint served as a zero-shot classifier."""

    def __init__(self, model_id: str, labels: tuple[str, ...], device: str = "cpu") -> None:
        try:
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ModelUnavailableError(f"transformers is required for clip:{model_id}") from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id).to(device).eval()
            processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise ModelUnavailableError(f"cannot load {model_id}: {exc}") from exc
        image_processor = processor.image_processor
        size = image_processor.crop_size
        self._init_card(f"clip:{model_id}", tuple(labels), size["width"], size["height"])
        self.caption_template = CAPTION_PREFIX + "{label}"
        self._mean = tuple(image_processor.image_mean)
        self._std = tuple(image_processor.image_std)
        self._device = device
        captions = [build_caption(label) for label in self.labels]
        with torch.no_grad():
            tokens = processor(text=captions, return_tensors="pt", padding=True).to(device)
            text = self._model.get_text_features(**tokens)
            self._text = text / text.norm(dim=-1, keepdim=True)

    def _probabilities(self, scaled: np.ndarray) -> np.ndarray:
        x = _normalize(scaled, self._mean, self._std)
        tensor = (
            torch.from_numpy(x).to(torch.float32).permute(2, 0, 1).unsqueeze(0).to(self._device)
        )
        with torch.no_grad():
            image = self._model.get_image_features(pixel_values=tensor)
            image = image / image.norm(dim=-1, keepdim=True)
            scale = self._model.logit_scale.exp()
            logits = (scale * image @ self._text.t())[0].double()
            return torch.softmax(logits, dim=0).cpu().numpy()


class HubClassifierModel(ServedModel):
    """Pretrained image classifier; served labels restrict its class head."""

    def __init__(self, model_id: str, labels: tuple[str, ...] | None, device: str = "cpu") -> None:
        try:
            from transformers import AutoImageProcessor, AutoModelForImageClassification
        except ImportError as exc:
            raise ModelUnavailableError(f"transformers is required for hub:{model_id}") from exc
        try:
            self._model = AutoModelForImageClassification.from_pretrained(model_id)
            self._model = self._model.to(device).eval()
            image_processor = AutoImageProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise ModelUnavailableError(f"cannot load {model_id}: {exc}") from exc
        id2label = self._model.config.id2label
        vocabulary = tuple(id2label[i] for i in sorted(id2label))
        served = vocabulary if labels is None else tuple(labels)
        unknown = [label for label in served if label not in vocabulary]
        if unknown:
            raise ModelError(f"{model_id} has no classes {unknown}")
        size = getattr(image_processor, "crop_size", None) or image_processor.size
        self._init_card(f"hub:{model_id}", served, size["width"], size["height"])
        self._indices = [vocabulary.index(label) for label in served]
        self._mean = tuple(image_processor.image_mean)
        self._std = tuple(image_processor.image_std)
        self._device = device

    def _probabilities(self, scaled: np.ndarray) -> np.ndarray:
        x = _normalize(scaled, self._mean, self._std)
        tensor = (
            torch.from_numpy(x).to(torch.float32).permute(2, 0, 1).unsqueeze(0).to(self._device)
        )
        with torch.no_grad():
            logits = self._model(pixel_values=tensor).logits[0].double()
        full = torch.softmax(logits, dim=0).cpu().numpy()
        return full[self._indices]


def build_model(
    spec: str,
    labels: tuple[str, ...] | None,
    width: int = 224,
    height: int = 224,
    device: str = "cpu",
) -> ServedModel:
    """Build a served model from a CLI spec string.

    Specs: tiny-cnn[:SEED], toy-embed[:SEED], clip:MODEL_ID, hub:MODEL_ID.
    """
    kind, _, arg = spec.partition(":")
    if kind == "tiny-cnn":
        seed = _parse_seed(spec, arg)
        return TinyConvModel(labels, width, height, seed)
    if kind == "toy-embed":
        if labels is None:
            raise ModelError("toy-embed is zero-shot and needs an explicit label set")
        seed = _parse_seed(spec, arg)
        return ToyEmbeddingModel(labels, width, height, seed)
    if kind == "clip":
        if not arg:
            raise ModelError("clip spec needs a checkpoint id, e.g. clip:openai/clip-vit-base-patch32")
        if labels is None:
            raise ModelError("clip models are zero-shot and need an explicit label set")
        return ClipZeroShotModel(arg, labels, device)
    if kind == "hub":
        if not arg:
            raise ModelError("hub spec needs a checkpoint id, e.g. hub:microsoft/resnet-50")
        return HubClassifierModel(arg, labels, device)
    raise ModelError(
        f"unknown model {spec!r}; expected tiny-cnn[:SEED], toy-embed[:SEED], clip:ID, or hub:ID"
    )


def _parse_seed(spec: str, arg: str) -> int:
    if not arg:
        return 0
    try:
        return int(arg)
    except ValueError as exc:
        raise ModelError(f"bad seed in model spec {spec!r}") from exc
