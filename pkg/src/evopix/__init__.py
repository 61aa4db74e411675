"""Black-box L0 adversarial perturbation toolkit.

Evolves sparse or contiguous pixel perturbations against an image classifier
exposed only through class probabilities, using differential evolution with a
hard query budget, plus a uniform-random baseline for comparison.
"""

from .baseline import run_random_attack
from .campaign import (
    CampaignConfig,
    CampaignResult,
    ImageOutcome,
    SweepRow,
    run_campaign,
    sweep_pixels,
)
from .de_engine import (
    AttackConfig,
    AttackResult,
    EvaluatedAgent,
    crossover_exp,
    mutate,
    run_attack,
    select,
)
from .encoding import Genome, ShapeKind, SplitMix64, decode, derive_seed, init_genome
from .fitness import (
    AttackMode,
    ProbabilityVector,
    Targeted,
    Untargeted,
    fitness_targeted,
    fitness_untargeted,
    is_success,
)
from .imagecore import (
    DecodedPixel,
    PreprocessedImage,
    apply_perturbation,
    format_area_percent,
    load_image,
    perturbed_area_fraction,
    save_image,
)
from .oracle import (
    ChannelMeanOracle,
    HashLinearOracle,
    Oracle,
    OracleError,
    OracleMeta,
    RedTriggerOracle,
    RemoteOracle,
    build_toy_oracle,
)
from .server import OracleServer, serve_oracle

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackMode",
    "AttackResult",
    "CampaignConfig",
    "CampaignResult",
    "ChannelMeanOracle",
    "DecodedPixel",
    "EvaluatedAgent",
    "Genome",
    "HashLinearOracle",
    "ImageOutcome",
    "Oracle",
    "OracleError",
    "OracleMeta",
    "OracleServer",
    "PreprocessedImage",
    "ProbabilityVector",
    "RedTriggerOracle",
    "RemoteOracle",
    "ShapeKind",
    "SplitMix64",
    "SweepRow",
    "Targeted",
    "Untargeted",
    "apply_perturbation",
    "build_toy_oracle",
    "crossover_exp",
    "decode",
    "derive_seed",
    "fitness_targeted",
    "fitness_untargeted",
    "format_area_percent",
    "init_genome",
    "is_success",
    "load_image",
    "mutate",
    "perturbed_area_fraction",
    "run_attack",
    "run_campaign",
    "run_random_attack",
    "save_image",
    "select",
    "serve_oracle",
    "sweep_pixels",
]
