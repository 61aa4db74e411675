"""Command line entrypoint: build a model and serve it until interrupted."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .models import ModelError, build_model
from .server import ModelServer


class CLIError(Exception):
    """Bad invocation or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise CLIError(message)


def load_labels(path: Path) -> tuple[str, ...]:
    """Label set from a JSON array file or a one-label-per-line text file."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read labels file {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CLIError(f"labels file {path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, list) or not all(isinstance(v, str) for v in payload):
            raise CLIError(f"labels file {path} must hold a JSON array of strings")
        labels = payload
    else:
        labels = [line.strip() for line in text.splitlines() if line.strip()]
    if not labels:
        raise CLIError(f"labels file {path} holds no labels")
    return tuple(labels)


def build_parser() -> _Parser:
    parser = _Parser(prog="model-server", description=__doc__)
    parser.add_argument(
        "--model",
        required=True,
        help="tiny-cnn[:SEED], toy-embed[:SEED], clip:CHECKPOINT, or hub:CHECKPOINT",
    )
    parser.add_argument(
        "--labels", type=Path, help="served label set (JSON array or one label per line)"
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--width", type=int, default=224, help="input width for toy backends")
    parser.add_argument("--height", type=int, default=224, help="input height for toy backends")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--workers", type=int, default=4, help="max concurrent classifications")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        labels = load_labels(args.labels) if args.labels is not None else None
        model = build_model(args.model, labels, args.width, args.height, args.device)
        server = ModelServer(model, args.host, args.port, args.workers)
    except (CLIError, ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"serving {model.name} ({len(model.labels)} labels) at {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
