"""Random-search baseline: same encodings, same budget, no evolution.

Each iteration draws a fresh batch of genomes straight from the shared
initializer, so a DE-vs-random comparison isolates the evolutionary
mechanism and nothing else.
"""

from __future__ import annotations

from .de_engine import AttackConfig, AttackResult, EvaluatedAgent, _Evaluator
from .encoding import SplitMix64, decode, init_genome
from .imagecore import PreprocessedImage, apply_perturbation
from .oracle import Oracle


def run_random_attack(image: PreprocessedImage, oracle: Oracle, config: AttackConfig) -> AttackResult:
    """G iterations of P independent random genomes; tracks the running best.

    No information flows between iterations.  Budget accounting and the
    result schema match run_attack.
    """
    config.validate_for_image(image.width, image.height)
    rng = SplitMix64(config.seed)
    ev = _Evaluator(image, oracle, config.mode)
    budget = config.budget

    best: EvaluatedAgent | None = None
    best_history: list[float] = []
    stop = False
    for iteration in range(config.generations):
        if stop or ev.queries >= budget:
            break
        for _ in range(config.population_size):
            if ev.queries >= budget:
                stop = True
                break
            genome = init_genome(rng, config.shape, config.n_pixels, image.width, image.height)
            agent = ev.evaluate(genome, birth_generation=iteration)
            if best is None or agent.fitness > best.fitness:
                best = agent
            if config.early_stop and ev.first_success is not None:
                stop = True
                break
        if best is not None:
            best_history.append(best.fitness)

    if best is None:
        raise ValueError("query budget too small to evaluate a single genome")
    perturbed = apply_perturbation(image, decode(best.genome, image.width, image.height))
    return AttackResult(
        success=ev.first_success is not None,
        queries_used=ev.queries,
        first_success_query=ev.first_success,
        best_agent=best,
        best_fitness_per_generation=best_history,
        perturbed_image=perturbed,
    )
