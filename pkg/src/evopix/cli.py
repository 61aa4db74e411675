"""Command-line front end.

Subcommands: attack (one image), campaign (directory of images), sweep
(campaign grid over pixel counts), area (perturbed-area percentage), serve-toy
(expose a built-in oracle over HTTP), plot (render a sweep CSV).

Exit codes: 0 completed, 1 configuration or validation error, 2 oracle or
transport error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .campaign import (
    CampaignConfig,
    CampaignResult,
    read_sweep_csv,
    run_campaign,
    sweep_pixels,
    write_sweep_csv,
)
from .de_engine import (
    DEFAULT_CROSSOVER,
    DEFAULT_GENERATIONS,
    DEFAULT_MUTATION,
    DEFAULT_POPULATION,
)
from .encoding import ShapeKind
from .imagecore import format_area_percent, load_image
from .oracle import Oracle, OracleError, RemoteOracle, build_toy_oracle
from .server import OracleServer

IMAGE_SUFFIXES = (".png", ".pxr")


class CLIError(Exception):
    """User-facing configuration problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CLIError(message)


def _build_oracle(spec: str, width: int, height: int) -> Oracle:
    if spec.startswith("remote:"):
        return RemoteOracle(spec.split(":", 1)[1])
    try:
        return build_toy_oracle(spec, width, height)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc


def _collect_images(directory: str) -> list[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise CLIError(f"{directory}: not a directory")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise CLIError(f"{directory}: no .png or .pxr images found")
    return paths


def _load_labels(path: str | None) -> dict[str, str] | None:
    if path is None:
        return None
    try:
        table = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"{path}: cannot read label map ({exc})") from exc
    if not isinstance(table, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in table.items()
    ):
        raise CLIError(f"{path}: label map must be a JSON object of image id -> label")
    return table


def _add_attack_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--oracle", required=True, metavar="SPEC",
                        help="channel | trigger | linear:C | remote:URL")
    parser.add_argument("--shape", required=True,
                        help="sparse | row | column | diag | antidiag | patch")
    parser.add_argument("--mode", required=True, choices=["targeted", "untargeted"])
    parser.add_argument("--target", metavar="LABEL", help="target class label (targeted mode)")
    parser.add_argument("--pop", type=int, default=DEFAULT_POPULATION, metavar="P")
    parser.add_argument("--gens", type=int, default=DEFAULT_GENERATIONS, metavar="G")
    parser.add_argument("--mutation", type=float, default=DEFAULT_MUTATION, metavar="F")
    parser.add_argument("--crossover", type=float, default=DEFAULT_CROSSOVER, metavar="CR")
    parser.add_argument("--seed", type=int, default=0, metavar="S")
    parser.add_argument("--budget", type=int, default=None, metavar="Q",
                        help="query budget override (default pop * (gens + 1))")
    parser.add_argument("--early-stop", action="store_true",
                        help="stop a run at the first successful query")


def _parse_shape(token: str) -> ShapeKind:
    try:
        return ShapeKind.parse(token)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc


def _campaign_config(args: argparse.Namespace, image_paths: list[Path],
                     attack: str, n_pixels: int,
                     shape: ShapeKind | None = None) -> CampaignConfig:
    try:
        return CampaignConfig(
            image_paths=image_paths,
            shape=shape if shape is not None else _parse_shape(args.shape),
            n_pixels=n_pixels,
            mode_kind=args.mode,
            attack=attack,
            target_label=args.target,
            original_labels=_load_labels(getattr(args, "labels", None)),
            population_size=args.pop,
            generations=args.gens,
            mutation_rate=args.mutation,
            crossover_rate=args.crossover,
            query_budget=args.budget,
            seed=args.seed,
            early_stop=args.early_stop,
            out_json=Path(args.out) if getattr(args, "out", None) else None,
            out_csv=Path(args.csv) if getattr(args, "csv", None) else None,
        )
    except ValueError as exc:
        raise CLIError(str(exc)) from exc


def _print_summary(result: CampaignResult) -> None:
    n = len(result.per_image)
    wins = sum(1 for o in result.per_image if o.success)
    mean_queries = sum(o.queries for o in result.per_image) / n
    print(
        f"success_rate={result.success_rate:.4f} ({wins}/{n} images), "
        f"mean_queries={mean_queries:.1f}, duration={result.duration_seconds:.2f}s"
    )


def _cmd_attack(args: argparse.Namespace) -> int:
    image = load_image(args.image)
    oracle = _build_oracle(args.oracle, image.width, image.height)
    config = _campaign_config(args, [Path(args.image)], "de", args.pixels)
    result = run_campaign(config, oracle)
    outcome = result.per_image[0]
    first = outcome.first_success_query
    print(
        f"{'SUCCESS' if outcome.success else 'no success'}: "
        f"best_fitness={outcome.best_fitness:.6f}, queries={outcome.queries}"
        + (f", first_success_query={first}" if first is not None else "")
    )
    if args.plot:
        from .plotting import save_fitness_history

        save_fitness_history(
            result.attack_results[0].best_fitness_per_generation,
            args.plot,
            title=f"{args.shape} n={args.pixels} {args.mode}",
        )
        print(f"wrote {args.plot}")
    return 0


def _cmd_campaign(args: argparse.Namespace) -> int:
    paths = _collect_images(args.images)
    probe = load_image(paths[0])
    oracle = _build_oracle(args.oracle, probe.width, probe.height)
    config = _campaign_config(args, paths, args.attack, args.pixels)
    result = run_campaign(config, oracle)
    _print_summary(result)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    paths = _collect_images(args.images)
    probe = load_image(paths[0])
    oracle = _build_oracle(args.oracle, probe.width, probe.height)
    try:
        pixel_counts = [int(tok) for tok in args.pixels.split(",") if tok]
    except ValueError as exc:
        raise CLIError(f"--pixels must be a comma-separated integer list: {exc}") from exc
    shapes = [_parse_shape(tok) for tok in args.shape.split(",") if tok]
    attacks = [tok for tok in args.attack.split(",") if tok]
    for attack in attacks:
        if attack not in ("de", "random"):
            raise CLIError(f"--attack entries must be de or random, got {attack!r}")
    base = _campaign_config(args, paths, attacks[0], pixel_counts[0], shape=shapes[0])
    base.out_json = None
    base.out_csv = None
    try:
        rows = sweep_pixels(base, oracle, pixel_counts, shapes=shapes, attacks=attacks)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    write_sweep_csv(rows, args.csv)
    print(f"wrote {args.csv} ({len(rows)} rows)")
    if args.plot:
        from .plotting import save_sr_curves

        save_sr_curves(rows, args.plot)
        print(f"wrote {args.plot}")
    return 0


def _cmd_area(args: argparse.Namespace) -> int:
    try:
        print(format_area_percent(args.pixels, args.width, args.height))
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    return 0


def _cmd_serve_toy(args: argparse.Namespace) -> int:
    try:
        oracle = build_toy_oracle(args.model, args.width, args.height)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    server = OracleServer(oracle, host=args.host, port=args.port)
    print(f"serving {args.model} oracle at {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    from .plotting import save_sr_curves

    try:
        rows = read_sweep_csv(args.csv)
    except (OSError, ValueError, KeyError) as exc:
        raise CLIError(f"{args.csv}: cannot read sweep CSV ({exc})") from exc
    save_sr_curves(rows, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evopix", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="attack a single image")
    p_attack.add_argument("--image", required=True, metavar="PATH")
    _add_attack_flags(p_attack)
    p_attack.add_argument("--pixels", required=True, type=int, metavar="N")
    p_attack.add_argument("--out", required=True, metavar="FILE.json")
    p_attack.add_argument("--csv", metavar="FILE.csv")
    p_attack.add_argument("--plot", metavar="FILE.png",
                          help="render best-fitness-per-generation figure")
    p_attack.set_defaults(func=_cmd_attack)

    p_campaign = sub.add_parser("campaign", help="attack every image in a directory")
    p_campaign.add_argument("--images", required=True, metavar="DIR")
    p_campaign.add_argument("--attack", choices=["de", "random"], default="de")
    _add_attack_flags(p_campaign)
    p_campaign.add_argument("--pixels", required=True, type=int, metavar="N")
    p_campaign.add_argument("--labels", metavar="FILE.json",
                            help="image id -> expected clean label (untargeted pre-check)")
    p_campaign.add_argument("--out", required=True, metavar="FILE.json")
    p_campaign.add_argument("--csv", metavar="FILE.csv")
    p_campaign.set_defaults(func=_cmd_campaign)

    p_sweep = sub.add_parser("sweep", help="campaign grid over pixel counts")
    p_sweep.add_argument("--images", required=True, metavar="DIR")
    p_sweep.add_argument("--attack", default="de", metavar="KINDS",
                         help="comma list of de,random (default de)")
    _add_attack_flags(p_sweep)
    p_sweep.add_argument("--pixels", required=True, metavar="N,N,...",
                         help="comma-separated pixel counts")
    p_sweep.add_argument("--labels", metavar="FILE.json")
    p_sweep.add_argument("--csv", required=True, metavar="FILE.csv")
    p_sweep.add_argument("--plot", metavar="FILE.png",
                         help="render SR-vs-pixels curves next to the CSV")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_area = sub.add_parser("area", help="print perturbed-area percentage")
    p_area.add_argument("--pixels", required=True, type=int, metavar="N")
    p_area.add_argument("--width", required=True, type=int, metavar="W")
    p_area.add_argument("--height", required=True, type=int, metavar="H")
    p_area.set_defaults(func=_cmd_area)

    p_serve = sub.add_parser("serve-toy", help="serve a built-in oracle over HTTP")
    p_serve.add_argument("--model", required=True, metavar="SPEC",
                         help="channel | trigger | linear:C")
    p_serve.add_argument("--port", required=True, type=int, metavar="P",
                         help="TCP port (0 picks a free one)")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--width", type=int, default=32, metavar="W")
    p_serve.add_argument("--height", type=int, default=32, metavar="H")
    p_serve.set_defaults(func=_cmd_serve_toy)

    p_plot = sub.add_parser("plot", help="render SR curves from a sweep CSV")
    p_plot.add_argument("--csv", required=True, metavar="FILE.csv")
    p_plot.add_argument("--out", required=True, metavar="FILE.png")
    p_plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
