"""Differential-evolution attack loop.

One attack = seeded init of P genomes, then G generations of
best/1 mutation, exponential crossover against the index-aligned parent,
clamping, one oracle query per candidate, and elitist top-P selection over
the merged old+new pool.  Every query is checked for success as it happens,
so success detection costs nothing extra.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .encoding import (
    Genome,
    ShapeKind,
    SplitMix64,
    clamp_genome,
    coordinate_ranges,
    decode,
    genome_length,
    init_genome,
)
from .fitness import AttackMode, ProbabilityVector, fitness_for, is_success
from .imagecore import PreprocessedImage, apply_perturbation
from .oracle import Oracle, OracleError, QueryFailed

DEFAULT_POPULATION = 300
DEFAULT_GENERATIONS = 100
DEFAULT_MUTATION = 0.55
DEFAULT_CROSSOVER = 0.8


@dataclass(frozen=True)
class AttackConfig:
    shape: ShapeKind
    n_pixels: int
    mode: AttackMode
    population_size: int = DEFAULT_POPULATION
    generations: int = DEFAULT_GENERATIONS
    mutation_rate: float = DEFAULT_MUTATION
    crossover_rate: float = DEFAULT_CROSSOVER
    query_budget: int | None = None  # None -> population * (generations + 1)
    seed: int = 0
    early_stop: bool = False

    def __post_init__(self) -> None:
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4 (best + two distinct others)")
        if not (0.0 < self.crossover_rate <= 1.0):
            raise ValueError("crossover_rate must be in (0, 1]")
        if self.mutation_rate <= 0.0:
            raise ValueError("mutation_rate must be > 0")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        genome_length(self.shape, self.n_pixels)  # validates n_pixels / patch squareness
        if self.budget < 1:
            raise ValueError("query_budget must be >= 1")

    @property
    def budget(self) -> int:
        if self.query_budget is not None:
            return self.query_budget
        return self.population_size * (self.generations + 1)

    def validate_for_image(self, width: int, height: int) -> None:
        coordinate_ranges(self.shape, self.n_pixels, width, height)

    def with_seed(self, seed: int) -> "AttackConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class EvaluatedAgent:
    genome: Genome
    fitness: float
    probs: ProbabilityVector
    birth_generation: int


@dataclass
class AttackResult:
    success: bool
    queries_used: int
    first_success_query: int | None
    best_agent: EvaluatedAgent
    best_fitness_per_generation: list[float]
    perturbed_image: PreprocessedImage


def mutate(population: list[EvaluatedAgent], rng: SplitMix64, mutation_rate: float) -> Genome:
    """best/1 mutant: best + rate * (pop[r1] - pop[r2]).

    The population must be sorted best-first.  r1 and r2 are distinct and
    exclude index 0; r2 uses an index shift instead of rejection so the draw
    count per mutation is fixed.  The result is not yet clamped.
    """
    size = len(population)
    if size < 4:
        raise ValueError(f"mutation needs a population of >= 4, got {size}")
    r1 = rng.next_int(1, size - 1)
    r2 = rng.next_int(1, size - 2)
    if r2 >= r1:
        r2 += 1
    best = population[0].genome
    a = population[r1].genome.values
    b = population[r2].genome.values
    values = tuple(
        v + mutation_rate * (x - y) for v, x, y in zip(best.values, a, b)
    )
    return Genome(values, best.shape, best.n_pixels)


def crossover_exp(
    agent_old: Genome, agent_cand: Genome, crossover_rate: float, rng: SplitMix64
) -> Genome:
    """Exponential crossover: copy a geometric-length circular run of slots
    from the old agent into the candidate, starting at a random index.

    Each loop step draws r ~ U(0,1) first and stops before copying when
    crossover_rate < r, so the run can be empty; at rate 1.0 the whole old
    agent is copied.
    """
    if len(agent_old.values) != len(agent_cand.values):
        raise ValueError(
            f"genome length mismatch: {len(agent_old.values)} vs {len(agent_cand.values)}"
        )
    size = len(agent_cand.values)
    values = list(agent_cand.values)
    big_r = rng.next_int(0, size - 1)
    for _ in range(size):
        if crossover_rate < rng.next_float():
            break
        values[big_r] = agent_old.values[big_r]
        big_r = (big_r + 1) % size
    return Genome(tuple(values), agent_cand.shape, agent_cand.n_pixels)


def _merge_select(
    old: list[EvaluatedAgent], candidates: list[EvaluatedAgent], population_size: int
) -> list[EvaluatedAgent]:
    # ties prefer old agents, then lower original index; sorted() is stable
    pool = [(agent, 0, i) for i, agent in enumerate(old)]
    pool += [(agent, 1, i) for i, agent in enumerate(candidates)]
    pool.sort(key=lambda t: (-t[0].fitness, t[1], t[2]))
    return [t[0] for t in pool[:population_size]]


def select(
    old: list[EvaluatedAgent], candidates: list[EvaluatedAgent], population_size: int
) -> list[EvaluatedAgent]:
    """Keep the best population_size agents of the merged old+candidate pool,
    sorted best-first; ties prefer old agents, then lower index."""
    if len(old) != population_size or len(candidates) != population_size:
        raise ValueError(
            f"selection expects two pools of {population_size}, "
            f"got {len(old)} old and {len(candidates)} candidates"
        )
    return _merge_select(old, candidates, population_size)


class _Evaluator:
    """Counts queries, computes fitness, and spots the first success."""

    def __init__(self, image: PreprocessedImage, oracle: Oracle, mode: AttackMode) -> None:
        self.image = image
        self.oracle = oracle
        self.mode = mode
        self.queries = 0
        self.first_success: int | None = None

    def evaluate(self, genome: Genome, birth_generation: int) -> EvaluatedAgent:
        perturbed = apply_perturbation(
            self.image, decode(genome, self.image.width, self.image.height)
        )
        try:
            probs = self.oracle.classify(perturbed)
        except OracleError as exc:
            raise QueryFailed(self.queries + 1, exc) from exc
        self.queries += 1
        if self.first_success is None and is_success(probs, self.mode):
            self.first_success = self.queries
        return EvaluatedAgent(genome, fitness_for(probs, self.mode), probs, birth_generation)


def run_attack(image: PreprocessedImage, oracle: Oracle, config: AttackConfig) -> AttackResult:
    """Run the full evolutionary attack against one image.

    Stops after the configured number of generations, when the next query
    would exceed the budget (that generation is truncated and still
    selected over), or at the first successful query when early_stop is set.
    """
    config.validate_for_image(image.width, image.height)
    rng = SplitMix64(config.seed)
    ev = _Evaluator(image, oracle, config.mode)
    budget = config.budget

    population: list[EvaluatedAgent] = []
    for _ in range(config.population_size):
        if ev.queries >= budget:
            break
        genome = init_genome(rng, config.shape, config.n_pixels, image.width, image.height)
        population.append(ev.evaluate(genome, birth_generation=0))
        if config.early_stop and ev.first_success is not None:
            break
    population = _merge_select(population, [], len(population))
    best_history = [population[0].fitness]

    stop = config.early_stop and ev.first_success is not None
    generation = 0
    while (
        not stop
        and generation < config.generations
        and ev.queries < budget
        and len(population) >= 4
    ):
        generation += 1
        candidates: list[EvaluatedAgent] = []
        for i in range(len(population)):
            if ev.queries >= budget:
                break
            mutant = mutate(population, rng, config.mutation_rate)
            crossed = crossover_exp(population[i].genome, mutant, config.crossover_rate, rng)
            clamped = clamp_genome(crossed, image.width, image.height)
            candidates.append(ev.evaluate(clamped, birth_generation=generation))
            if config.early_stop and ev.first_success is not None:
                stop = True
                break
        if candidates:
            population = _merge_select(population, candidates, len(population))
            best_history.append(population[0].fitness)
        if ev.queries >= budget:
            stop = True

    best = population[0]
    perturbed = apply_perturbation(image, decode(best.genome, image.width, image.height))
    return AttackResult(
        success=ev.first_success is not None,
        queries_used=ev.queries,
        first_success_query=ev.first_success,
        best_agent=best,
        best_fitness_per_generation=best_history,
        perturbed_image=perturbed,
    )
