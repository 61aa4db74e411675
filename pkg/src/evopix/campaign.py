"""Multi-image campaign runner: success rates, persistence, pixel sweeps.

A campaign attacks every image with an independently seeded run (seed derived
from the master seed and the image index), aggregates the success rate, and
persists a JSON report plus a CSV summary.  Preconditions are checked for all
images before the first attack so the SR denominator is never ambiguous.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .baseline import run_random_attack
from .de_engine import AttackConfig, AttackResult, run_attack
from .encoding import ShapeKind, derive_seed
from .fitness import Targeted, Untargeted
from .imagecore import PreprocessedImage, load_image
from .oracle import Oracle

ATTACK_KINDS = ("de", "random")


@dataclass
class CampaignConfig:
    image_paths: list[Path]
    shape: ShapeKind
    n_pixels: int
    mode_kind: str  # "targeted" | "untargeted"
    attack: str = "de"
    target_label: str | None = None
    original_labels: dict[str, str] | None = None  # image id -> expected clean label
    population_size: int = 300
    generations: int = 100
    mutation_rate: float = 0.55
    crossover_rate: float = 0.8
    query_budget: int | None = None
    seed: int = 0
    early_stop: bool = False
    out_json: Path | None = None
    out_csv: Path | None = None

    def __post_init__(self) -> None:
        if self.attack not in ATTACK_KINDS:
            raise ValueError(f"attack must be one of {ATTACK_KINDS}, got {self.attack!r}")
        if self.mode_kind not in ("targeted", "untargeted"):
            raise ValueError(f"mode must be targeted or untargeted, got {self.mode_kind!r}")
        if self.mode_kind == "targeted" and self.target_label is None:
            raise ValueError("targeted campaigns need a target label")


@dataclass(frozen=True)
class ImageOutcome:
    image_id: str
    success: bool
    queries: int
    first_success_query: int | None
    best_fitness: float
    best_genome: tuple[float, ...]


@dataclass
class CampaignResult:
    per_image: list[ImageOutcome]
    success_rate: float
    config_echo: dict
    duration_seconds: float
    # Full per-image attack results, in image order; not serialized.
    attack_results: list[AttackResult] = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config_echo,
            "success_rate": self.success_rate,
            "per_image": [
                {
                    "id": o.image_id,
                    "success": o.success,
                    "queries": o.queries,
                    "first_success_query": o.first_success_query,
                    "best_fitness": o.best_fitness,
                    "best_genome": list(o.best_genome),
                }
                for o in self.per_image
            ],
            "duration_seconds": self.duration_seconds,
        }


def _config_echo(config: CampaignConfig, oracle: Oracle, image_ids: list[str], budget: int) -> dict:
    meta = oracle.meta
    return {
        "attack": config.attack,
        "shape": config.shape.value,
        "n_pixels": config.n_pixels,
        "mode": config.mode_kind,
        "target_label": config.target_label,
        "population_size": config.population_size,
        "generations": config.generations,
        "mutation_rate": config.mutation_rate,
        "crossover_rate": config.crossover_rate,
        "query_budget": budget,
        "seed": config.seed,
        "early_stop": config.early_stop,
        "oracle": {
            "num_classes": meta.num_classes,
            "labels": list(meta.labels),
            "input_width": meta.input_width,
            "input_height": meta.input_height,
        },
        "images": image_ids,
    }


def _preflight(
    config: CampaignConfig, oracle: Oracle, images: list[tuple[str, PreprocessedImage]]
) -> list[AttackConfig]:
    """Validate every image and resolve its attack mode; raises before any attack runs."""
    meta = oracle.meta
    labels = list(meta.labels)
    problems: list[str] = []
    modes: list[AttackConfig] = []
    target_idx: int | None = None
    if config.mode_kind == "targeted":
        if config.target_label not in labels:
            raise ValueError(f"target label {config.target_label!r} not among oracle labels")
        target_idx = labels.index(config.target_label)

    for image_id, image in images:
        if image.width != meta.input_width or image.height != meta.input_height:
            problems.append(
                f"{image_id}: image is {image.width}x{image.height}, oracle expects "
                f"{meta.input_width}x{meta.input_height}"
            )
            continue
        predicted = oracle.classify(image).argmax()
        if config.mode_kind == "untargeted":
            original = predicted
            if config.original_labels is not None:
                expected = config.original_labels.get(image_id)
                if expected is None:
                    problems.append(f"{image_id}: no original label provided")
                    continue
                if expected not in labels:
                    problems.append(f"{image_id}: label {expected!r} not among oracle labels")
                    continue
                original = labels.index(expected)
                if predicted != original:
                    problems.append(
                        f"{image_id}: oracle classifies as {labels[predicted]!r}, "
                        f"expected {expected!r} (not correctly classified)"
                    )
                    continue
            mode = Untargeted(original)
        else:
            assert target_idx is not None
            if predicted == target_idx:
                problems.append(
                    f"{image_id}: already classified as target {config.target_label!r}"
                )
                continue
            mode = Targeted(target_idx)
        modes.append(
            AttackConfig(
                shape=config.shape,
                n_pixels=config.n_pixels,
                mode=mode,
                population_size=config.population_size,
                generations=config.generations,
                mutation_rate=config.mutation_rate,
                crossover_rate=config.crossover_rate,
                query_budget=config.query_budget,
                seed=0,  # replaced per image
                early_stop=config.early_stop,
            )
        )
        modes[-1].validate_for_image(image.width, image.height)
    if problems:
        raise ValueError("campaign preconditions failed:\n  " + "\n  ".join(problems))
    return modes


def run_campaign(config: CampaignConfig, oracle: Oracle) -> CampaignResult:
    """Attack every configured image and aggregate the success rate."""
    if not config.image_paths:
        raise ValueError("empty campaign: no images")
    started = time.perf_counter()
    images = [(Path(p).name, load_image(p)) for p in config.image_paths]
    attack_configs = _preflight(config, oracle, images)

    attack_fn = run_attack if config.attack == "de" else run_random_attack
    outcomes: list[ImageOutcome] = []
    full_results: list[AttackResult] = []
    for index, ((image_id, image), attack_config) in enumerate(zip(images, attack_configs)):
        seeded = attack_config.with_seed(derive_seed(config.seed, index))
        result: AttackResult = attack_fn(image, oracle, seeded)
        full_results.append(result)
        outcomes.append(
            ImageOutcome(
                image_id=image_id,
                success=result.success,
                queries=result.queries_used,
                first_success_query=result.first_success_query,
                best_fitness=result.best_agent.fitness,
                best_genome=result.best_agent.genome.values,
            )
        )

    success_rate = sum(1 for o in outcomes if o.success) / len(outcomes)
    budget = attack_configs[0].budget
    campaign = CampaignResult(
        per_image=outcomes,
        success_rate=success_rate,
        config_echo=_config_echo(config, oracle, [i for i, _ in images], budget),
        duration_seconds=time.perf_counter() - started,
        attack_results=full_results,
    )
    if config.out_json is not None:
        write_campaign_json(campaign, config.out_json)
    if config.out_csv is not None:
        write_campaign_csv(campaign, config.out_csv)
    return campaign


def write_campaign_json(result: CampaignResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_json_dict(), indent=2) + "\n")


def write_campaign_csv(result: CampaignResult, path: str | Path) -> None:
    """One summary row per image plus an aggregate ALL row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "success", "queries", "first_success_query", "best_fitness", "success_rate"]
        )
        for o in result.per_image:
            writer.writerow(
                [
                    o.image_id,
                    int(o.success),
                    o.queries,
                    "" if o.first_success_query is None else o.first_success_query,
                    repr(o.best_fitness),
                    "",
                ]
            )
        mean_queries = sum(o.queries for o in result.per_image) / len(result.per_image)
        writer.writerow(
            [
                "ALL",
                sum(1 for o in result.per_image if o.success),
                repr(mean_queries),
                "",
                "",
                repr(result.success_rate),
            ]
        )


@dataclass(frozen=True)
class SweepRow:
    shape: str
    attack: str
    pixels: int
    sr: float
    mean_queries: float


def sweep_pixels(
    config: CampaignConfig,
    oracle: Oracle,
    pixel_counts: list[int],
    shapes: list[ShapeKind] | None = None,
    attacks: list[str] | None = None,
) -> list[SweepRow]:
    """Run one campaign per (shape, attack, pixel count) and tabulate SR.

    Rows come out in deterministic order: shapes, then attacks, then pixel
    counts, matching the input order.
    """
    if not pixel_counts:
        raise ValueError("sweep needs at least one pixel count")
    rows: list[SweepRow] = []
    for shape in shapes or [config.shape]:
        for attack in attacks or [config.attack]:
            for pixels in pixel_counts:
                sub = replace(
                    config,
                    shape=shape,
                    attack=attack,
                    n_pixels=pixels,
                    out_json=None,
                    out_csv=None,
                )
                result = run_campaign(sub, oracle)
                mean_queries = sum(o.queries for o in result.per_image) / len(result.per_image)
                rows.append(
                    SweepRow(
                        shape=shape.value,
                        attack=attack,
                        pixels=pixels,
                        sr=result.success_rate,
                        mean_queries=mean_queries,
                    )
                )
    return rows


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["shape", "attack", "pixels", "sr", "mean_queries"])
        for row in rows:
            writer.writerow([row.shape, row.attack, row.pixels, repr(row.sr), repr(row.mean_queries)])


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    rows: list[SweepRow] = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                SweepRow(
                    shape=rec["shape"],
                    attack=rec["attack"],
                    pixels=int(rec["pixels"]),
                    sr=float(rec["sr"]),
                    mean_queries=float(rec["mean_queries"]),
                )
            )
    if not rows:
        raise ValueError(f"{path}: no sweep rows")
    return rows
