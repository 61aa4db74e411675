"""Evolution loop: mutation arithmetic, exponential crossover, selection,
budget accounting, determinism, monotonicity."""

import pytest

from evopix.de_engine import (
    AttackConfig,
    EvaluatedAgent,
    crossover_exp,
    mutate,
    run_attack,
    select,
)
from evopix.encoding import Genome, ShapeKind, SplitMix64
from evopix.fitness import ProbabilityVector, Targeted, Untargeted
from evopix.imagecore import PreprocessedImage
from evopix.oracle import (
    ChannelMeanOracle,
    HashLinearOracle,
    Oracle,
    OracleMeta,
    ProbabilityError,
    QueryFailed,
    RedTriggerOracle,
)


class ScriptedRng:
    """Stands in for SplitMix64 with a fixed list of draws per method."""

    def __init__(self, ints=(), floats=()):
        self._ints = list(ints)
        self._floats = list(floats)

    def next_int(self, lo, hi):
        v = self._ints.pop(0)
        assert lo <= v <= hi, f"scripted int {v} outside [{lo}, {hi}]"
        return v

    def next_float(self):
        return self._floats.pop(0)


class ConstantOracle(Oracle):
    """Same distribution for every input: zero search signal."""

    def __init__(self, width, height, probs=(0.6, 0.4)):
        labels = tuple(f"c{i}" for i in range(len(probs)))
        self.meta = OracleMeta(len(probs), labels, width, height)
        self._probs = probs

    def classify(self, image):
        self._check_dims(image)
        return ProbabilityVector.from_raw(self._probs)


class FailAtOracle(Oracle):
    """Classifies fine until the nth call, then raises a protocol error."""

    def __init__(self, width, height, fail_at):
        self.meta = OracleMeta(2, ("a", "b"), width, height)
        self.fail_at = fail_at
        self.calls = 0

    def classify(self, image):
        self._check_dims(image)
        self.calls += 1
        if self.calls == self.fail_at:
            raise ProbabilityError("deliberately bad response")
        return ProbabilityVector.from_raw((0.5, 0.5))


def agent(values, fitness, shape=ShapeKind.SPARSE, n=1, birth=0):
    g = Genome(tuple(float(v) for v in values), shape, n)
    return EvaluatedAgent(g, fitness, ProbabilityVector.from_raw((0.5, 0.5)), birth)


def sparse_cfg(**kw):
    base = dict(
        shape=ShapeKind.SPARSE,
        n_pixels=1,
        mode=Untargeted(0),
        population_size=6,
        generations=5,
        seed=0,
    )
    base.update(kw)
    return AttackConfig(**base)


def test_config_validation():
    sparse_cfg()  # baseline is fine
    with pytest.raises(ValueError):
        sparse_cfg(population_size=3)
    with pytest.raises(ValueError):
        sparse_cfg(crossover_rate=0.0)
    with pytest.raises(ValueError):
        sparse_cfg(crossover_rate=1.1)
    with pytest.raises(ValueError):
        sparse_cfg(mutation_rate=0.0)
    with pytest.raises(ValueError):
        sparse_cfg(generations=0)
    with pytest.raises(ValueError):
        sparse_cfg(shape=ShapeKind.PATCH, n_pixels=6)
    with pytest.raises(ValueError):
        sparse_cfg(query_budget=0)


def test_config_budget_default_and_validate_for_image():
    cfg = sparse_cfg(population_size=300, generations=100)
    assert cfg.budget == 30300
    assert sparse_cfg(query_budget=42).budget == 42
    row = sparse_cfg(shape=ShapeKind.ROW, n_pixels=9)
    with pytest.raises(ValueError):
        row.validate_for_image(8, 8)
    row.validate_for_image(9, 8)


def test_mutate_identical_population_returns_best():
    pop = [agent([3, 3, 3, 3, 3], 0.5 - i * 0.1) for i in range(4)]
    out = mutate(pop, SplitMix64(0), 0.55)
    assert out.values == (3.0, 3.0, 3.0, 3.0, 3.0)


def test_mutate_arithmetic():
    # best + 0.55 * (pop[r1] - pop[r2]) slot by slot: 10 + 0.55*20 = 21,
    # 10 - 0.55*20 = -1
    pop = [
        agent([10, 10, 10, 10, 10], 0.9),
        agent([20, 0, 20, 0, 20], 0.5),
        agent([0, 20, 0, 20, 0], 0.4),
        agent([7, 7, 7, 7, 7], 0.1),
    ]
    rng = ScriptedRng(ints=[1, 1])  # r1=1; r2 draw 1 shifts to 2 since r2 >= r1
    out = mutate(pop, rng, 0.55)
    assert out.values == (21.0, -1.0, 21.0, -1.0, 21.0)


def test_mutate_rate_zero_returns_best():
    pop = [agent([i, i, i, i, i], 1.0 - i * 0.1) for i in range(5)]
    out = mutate(pop, SplitMix64(3), 0.0)
    assert out.values == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_mutate_requires_four_agents():
    pop = [agent([1, 1, 1, 1, 1], 0.1) for _ in range(3)]
    with pytest.raises(ValueError):
        mutate(pop, SplitMix64(0), 0.5)


def test_mutate_index_exclusions():
    # slot 0 of agent i is 10^i, so the output uniquely identifies (r1, r2)
    pop = [agent([10.0**i, 0, 0, 0, 0], 1.0 - i * 0.01) for i in range(5)]
    rng = SplitMix64(12)
    seen = set()
    for _ in range(3000):
        out = mutate(pop, rng, 1.0)
        delta = round(out.values[0] - 1.0)  # 10^r1 - 10^r2, exact in floats here
        found = None
        for r1 in range(1, 5):
            for r2 in range(1, 5):
                if r1 != r2 and round(10.0**r1 - 10.0**r2) == delta:
                    found = (r1, r2)
        assert found is not None, f"draw used index 0 or r1 == r2 (delta {delta})"
        seen.add(found)
    assert seen == {(a, b) for a in range(1, 5) for b in range(1, 5) if a != b}


def genome_of(values):
    return Genome(tuple(float(v) for v in values), ShapeKind.SPARSE, 1)


def test_crossover_traced_example():
    # start index 1, r draws 0.5, 0.5, 0.9 at rate 0.8: indices 1 and 2 are
    # copied from the old agent, then the loop breaks; everything else keeps
    # the candidate's values.
    old = genome_of([10, 11, 12, 13, 14])
    cand = genome_of([0, 1, 2, 3, 4])
    rng = ScriptedRng(ints=[1], floats=[0.5, 0.5, 0.9])
    out = crossover_exp(old, cand, 0.8, rng)
    assert out.values == (0.0, 11.0, 12.0, 3.0, 4.0)


def test_crossover_immediate_break_keeps_candidate():
    old = genome_of([10, 11, 12, 13, 14])
    cand = genome_of([0, 1, 2, 3, 4])
    rng = ScriptedRng(ints=[2], floats=[0.9])
    out = crossover_exp(old, cand, 0.8, rng)
    assert out.values == cand.values


def test_crossover_rate_one_copies_everything():
    old = genome_of([10, 11, 12, 13, 14])
    cand = genome_of([0, 1, 2, 3, 4])
    rng = ScriptedRng(ints=[3], floats=[0.0] * 5)
    out = crossover_exp(old, cand, 1.0, rng)
    assert out.values == old.values


def test_crossover_wraps_circularly():
    old = genome_of([10, 11, 12, 13, 14])
    cand = genome_of([0, 1, 2, 3, 4])
    rng = ScriptedRng(ints=[4], floats=[0.1, 0.1, 0.9])
    out = crossover_exp(old, cand, 0.8, rng)
    assert out.values == (10.0, 1.0, 2.0, 3.0, 14.0)  # indices 4 then 0


def test_crossover_length_mismatch():
    old = genome_of([1, 2, 3, 4, 5])
    cand = Genome((0.0,) * 10, ShapeKind.SPARSE, 2)
    with pytest.raises(ValueError):
        crossover_exp(old, cand, 0.8, SplitMix64(0))


def test_crossover_changes_form_contiguous_circular_run():
    old = genome_of([100, 101, 102, 103, 104])
    cand = genome_of([0, 1, 2, 3, 4])
    rng = SplitMix64(41)
    for _ in range(500):
        out = crossover_exp(old, cand, 0.8, rng)
        changed = [i for i in range(5) if out.values[i] != cand.values[i]]
        if not changed:
            continue
        start = min(
            (i for i in range(5)),
            key=lambda i: 0 if i in changed and (i - 1) % 5 not in changed else 1,
        )
        expect = [(start + k) % 5 for k in range(len(changed))]
        assert sorted(changed) == sorted(expect)


def test_select_takes_top_of_merged_pool():
    old = [agent([1, 1, 1, 1, 1], 0.9), agent([2, 2, 2, 2, 2], 0.1)]
    cand = [agent([3, 3, 3, 3, 3], 0.5, birth=1), agent([4, 4, 4, 4, 4], 0.2, birth=1)]
    out = select(old, cand, 2)
    assert [a.fitness for a in out] == [0.9, 0.5]


def test_select_elitism_keeps_old_population():
    old = [agent([1, 1, 1, 1, 1], 0.9), agent([2, 2, 2, 2, 2], 0.8)]
    cand = [agent([3, 3, 3, 3, 3], 0.1, birth=1), agent([4, 4, 4, 4, 4], 0.0, birth=1)]
    assert select(old, cand, 2) == old


def test_select_tie_prefers_old_then_lower_index():
    old = [agent([1, 1, 1, 1, 1], 0.5)]
    cand = [agent([2, 2, 2, 2, 2], 0.5, birth=1)]
    assert select(old, cand, 1) == old

    old2 = [agent([1, 1, 1, 1, 1], 0.5), agent([2, 2, 2, 2, 2], 0.5)]
    cand2 = [agent([3, 3, 3, 3, 3], 0.5, birth=1), agent([4, 4, 4, 4, 4], 0.5, birth=1)]
    assert select(old2, cand2, 2) == old2


def test_select_size_mismatch():
    old = [agent([1, 1, 1, 1, 1], 0.5)]
    with pytest.raises(ValueError):
        select(old, [], 1)


def test_run_attack_constant_oracle_flat_history():
    img = PreprocessedImage.filled(8, 8, (0, 0, 0))
    oracle = ConstantOracle(8, 8)
    res = run_attack(img, oracle, sparse_cfg())
    assert res.success is False
    assert res.first_success_query is None
    assert res.queries_used == 6 * (5 + 1)
    assert len(res.best_fitness_per_generation) == 6
    assert set(res.best_fitness_per_generation) == {res.best_fitness_per_generation[0]}


def test_run_attack_trigger_seed7_succeeds():
    img = PreprocessedImage.filled(8, 8, (0, 0, 0))
    oracle = RedTriggerOracle(8, 8)
    cfg = sparse_cfg(population_size=30, generations=30, seed=7)
    res = run_attack(img, oracle, cfg)
    assert res.success is True
    assert res.first_success_query is not None
    assert 1 <= res.first_success_query <= res.queries_used
    # the winning perturbation is visible in the returned image
    assert res.best_agent.fitness > 0


def test_run_attack_total_budget_at_stock_parameters():
    img = PreprocessedImage.filled(4, 4, (0, 0, 0))
    oracle = ConstantOracle(4, 4)
    cfg = sparse_cfg(population_size=300, generations=100)
    res = run_attack(img, oracle, cfg)
    assert res.queries_used == 30300


def test_run_attack_determinism():
    img = PreprocessedImage.filled(8, 8, (3, 5, 7))
    oracle = HashLinearOracle(5, 8, 8)
    cfg = sparse_cfg(population_size=10, generations=8, seed=99)
    r1 = run_attack(img, oracle, cfg)
    r2 = run_attack(img, oracle, cfg)
    assert r1.best_agent.genome == r2.best_agent.genome
    assert r1.best_fitness_per_generation == r2.best_fitness_per_generation
    assert r1.queries_used == r2.queries_used
    assert r1.first_success_query == r2.first_success_query
    assert r1.perturbed_image == r2.perturbed_image


def test_run_attack_monotone_history():
    img = PreprocessedImage.filled(8, 8, (3, 5, 7))
    oracle = HashLinearOracle(5, 8, 8)
    for seed in range(5):
        res = run_attack(img, oracle, sparse_cfg(population_size=8, generations=10, seed=seed))
        hist = res.best_fitness_per_generation
        assert all(a <= b for a, b in zip(hist, hist[1:]))


def test_run_attack_early_stop():
    img = PreprocessedImage.filled(8, 8, (0, 0, 0))
    oracle = RedTriggerOracle(8, 8)
    cfg = sparse_cfg(population_size=30, generations=30, seed=7, early_stop=True)
    res = run_attack(img, oracle, cfg)
    assert res.success
    assert res.queries_used == res.first_success_query
    assert res.queries_used < cfg.budget


def test_run_attack_budget_truncates_mid_generation():
    img = PreprocessedImage.filled(8, 8, (0, 0, 0))
    oracle = ConstantOracle(8, 8)
    cfg = sparse_cfg(population_size=6, generations=5, query_budget=6 + 7)
    res = run_attack(img, oracle, cfg)
    assert res.queries_used == 13  # init 6, one full gen 6, one extra candidate
    assert len(res.best_fitness_per_generation) == 3


def test_run_attack_budget_smaller_than_population():
    img = PreprocessedImage.filled(8, 8, (0, 0, 0))
    oracle = ConstantOracle(8, 8)
    res = run_attack(img, oracle, sparse_cfg(query_budget=4))
    assert res.queries_used == 4
    assert len(res.best_fitness_per_generation) == 1


def test_run_attack_wraps_oracle_failures_with_query_index():
    img = PreprocessedImage.filled(8, 8, (0, 0, 0))
    oracle = FailAtOracle(8, 8, fail_at=9)
    with pytest.raises(QueryFailed) as exc_info:
        run_attack(img, oracle, sparse_cfg())
    assert exc_info.value.query_index == 9


def test_run_attack_shape_must_fit_image():
    img = PreprocessedImage.filled(8, 8, (0, 0, 0))
    oracle = ConstantOracle(8, 8)
    with pytest.raises(ValueError):
        run_attack(img, oracle, sparse_cfg(shape=ShapeKind.ROW, n_pixels=9))


def test_run_attack_targeted_mode():
    img = PreprocessedImage.filled(8, 8, (40, 40, 40))
    oracle = ChannelMeanOracle(8, 8)
    cfg = sparse_cfg(
        mode=Targeted(0), population_size=20, generations=20, seed=5,
        shape=ShapeKind.PATCH, n_pixels=4,
    )
    res = run_attack(img, oracle, cfg)
    # pushing red up on a gray image is easy for a 2x2 patch
    assert res.success
    assert res.best_agent.probs.argmax() == 0
