"""Classification endpoint serving DNN and zero-shot models over raw pixels."""

from .models import (
    CAPTION_PREFIX,
    ClipZeroShotModel,
    HubClassifierModel,
    ModelError,
    ModelUnavailableError,
    ServedModel,
    TinyConvModel,
    ToyEmbeddingModel,
    build_caption,
    build_model,
)
from .server import CLASSIFY_PATH, META_PATH, ModelServer, serve_model

__version__ = "0.1.0"

__all__ = [
    "CAPTION_PREFIX",
    "CLASSIFY_PATH",
    "META_PATH",
    "ClipZeroShotModel",
    "HubClassifierModel",
    "ModelError",
    "ModelUnavailableError",
    "ModelServer",
    "ServedModel",
    "TinyConvModel",
    "ToyEmbeddingModel",
    "build_caption",
    "build_model",
    "serve_model",
    "__version__",
]
