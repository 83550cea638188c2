from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from conftest import ScriptedRng, StubTask
from fsmsynth.evolve import (ONE_POINT, TWO_POINT, Fitness, GaConfig, Individual, crossover,
                             draw_cuts, evaluate, exchange, init_population, mutate, objective,
                             run, select_replace)
from fsmsynth.helicopter import HeliParams, HeliTask, generate_course
from fsmsynth.machine import Genome, MealyMachine, encode, load_machine, make_encoding, random_machine

DATA = Path(__file__).parent / "data"
ANT = make_encoding(8, 1, 2, 3)

# chi-square critical value, 15 degrees of freedom, alpha = 0.001
CHI2_15_999 = 37.697


class TestObjective:
    def test_table_one_values(self):
        assert objective(7, 190, (1, 0.01)) == pytest.approx(8.9, abs=1e-12)

    def test_zero_weights(self):
        assert objective(5, 314, (1, 0)) == 5
        assert objective(7, 200, (0, 1)) == 200


class _FixedOutcome:
    name = "fixed"
    input_bits, output_bits, action_count, raw_key = 1, 2, 3, "food_eaten"

    def __init__(self, result):
        self.result = result

    def outcome(self, machine):
        return self.result


class TestEvaluate:
    def test_feasible_seven_state_machine(self):
        nxt = np.zeros((8, 2), dtype=int)
        for s in range(7):
            nxt[s] = (s + 1) % 7
        m = MealyMachine(ANT, nxt, np.zeros((8, 2), dtype=int))
        task = _FixedOutcome((True, 190, 0, {"food_eaten": 89}, 0.0))
        fit = evaluate(encode(m, ANT), ANT, task, GaConfig())
        assert fit.feasible and fit.a1 == 7 and fit.a2 == 190
        assert fit.F == pytest.approx(8.9)

    def test_ant_eating_nothing(self, ant_task):
        m = MealyMachine(ANT, np.zeros((8, 2), dtype=int), np.ones((8, 2), dtype=int))
        cfg = GaConfig()
        fit = evaluate(encode(m, ANT), ANT, ant_task, cfg)
        assert not fit.feasible
        assert fit.deficit == 89 and fit.a2 == 200 and fit.a1 == 1
        assert fit.F == pytest.approx(1000 * 89 + 1 + 2)

    def test_autopilot_visiting_all_markers(self):
        m = load_machine(DATA / "autopilot_k4.fsm")
        params = HeliParams(sectors=4)
        task = HeliTask(generate_course(0, 20, params=params), params)
        fit = evaluate(encode(m, m.spec), m.spec, task, GaConfig())
        assert fit.feasible and fit.raw["markers_visited"] == 20
        assert fit.F == pytest.approx(objective(fit.a1, fit.a2, (1, 0.01)))

    def test_deterministic(self, ant_task):
        g = encode(random_machine(ANT, np.random.default_rng(3)), ANT)
        assert evaluate(g, ANT, ant_task, GaConfig()) == evaluate(g, ANT, ant_task, GaConfig())


class TestInitPopulation:
    def test_size_and_correctness(self):
        spec = make_encoding(3, 1, 2, 3)
        cfg = GaConfig(population_size=1200)
        pop = init_population(spec, cfg, np.random.default_rng(0), StubTask())
        assert len(pop) == 1200
        assert all(ind.genome.is_corrected() for ind in pop)
        assert [ind.F for ind in pop] == sorted(ind.F for ind in pop)

    def test_same_seed_same_population(self):
        spec = make_encoding(3, 1, 2, 3)
        cfg = GaConfig(population_size=50)
        a = init_population(spec, cfg, np.random.default_rng(9), StubTask())
        b = init_population(spec, cfg, np.random.default_rng(9), StubTask())
        assert [i.genome for i in a] == [i.genome for i in b]


class TestMutate:
    def test_output_branch(self):
        g = Genome(bytes(ANT.genome_bits), ANT)
        child = mutate(g, ANT, ScriptedRng([2, 1, 1]))
        nxt, out = child.fields()
        assert out[2] == 1
        assert out.sum() == 1 and nxt.sum() == 0
        assert g.bits == bytes(ANT.genome_bits)

    def test_next_state_branch(self):
        g = Genome(bytes(ANT.genome_bits), ANT)
        child = mutate(g, ANT, ScriptedRng([0, 0, ANT.states - 1]))
        nxt, out = child.fields()
        assert nxt[0] == ANT.states - 1
        assert nxt[1:].sum() == 0 and out.sum() == 0

    def test_result_corrected(self):
        rng = np.random.default_rng(5)
        spec = make_encoding(5, 1, 2, 3)
        g = encode(random_machine(spec, rng), spec)
        for _ in range(500):
            g = mutate(g, spec, rng)
            assert g.is_corrected()

    def test_uniform_gene_coverage(self):
        hits = Counter()
        shared = np.random.default_rng(2024)

        class Spy:
            def __init__(self):
                self.first = True

            def integers(self, low, high=None, size=None):
                v = shared.integers(low, high, size=size)
                if self.first:
                    hits[int(v)] += 1
                self.first = False
                return v

        g = encode(random_machine(ANT, np.random.default_rng(1)), ANT)
        for _ in range(10_000):
            mutate(g, ANT, Spy())
        assert set(hits) == set(range(ANT.gene_count))
        expected = 10_000 / ANT.gene_count
        chi2 = sum((hits[k] - expected) ** 2 / expected for k in range(ANT.gene_count))
        assert chi2 < CHI2_15_999


class TestCrossover:
    def setup_method(self):
        self.spec = make_encoding(4, 1, 2, 4)  # 32-bit genome, every field valid
        self.zeros = Genome(bytes(32), self.spec)
        self.ones = Genome(bytes([1] * 32), self.spec)

    def test_full_length_cut_returns_parents(self):
        a = encode(random_machine(self.spec, np.random.default_rng(0)), self.spec)
        b = encode(random_machine(self.spec, np.random.default_rng(1)), self.spec)
        c1, c2 = crossover(a, b, ONE_POINT, None, cuts=(self.spec.genome_bits,))
        assert (c1, c2) == (a, b)

    def test_one_point_prefix(self):
        c1, c2 = exchange(self.zeros.bits, self.ones.bits, (8,))
        assert c1 == bytes(8) + bytes([1] * 24)
        assert c2 == bytes([1] * 8) + bytes(24)

    def test_two_point_exchange_property(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a = rng.integers(0, 2, 32, dtype=np.uint8).tobytes()
            b = rng.integers(0, 2, 32, dtype=np.uint8).tobytes()
            i, j = draw_cuts(32, TWO_POINT, rng)
            assert 1 <= i < j <= 31
            c1, c2 = exchange(a, b, (i, j))
            for t in range(32):
                assert sorted((c1[t], c2[t])) == sorted((a[t], b[t]))

    def test_cut_range(self):
        rng = np.random.default_rng(4)
        cuts = {draw_cuts(32, ONE_POINT, rng)[0] for _ in range(3000)}
        assert cuts == set(range(1, 32))

    def test_children_corrected(self):
        spec = make_encoding(5, 1, 2, 3)
        rng = np.random.default_rng(8)
        for _ in range(200):
            a = encode(random_machine(spec, rng), spec)
            b = encode(random_machine(spec, rng), spec)
            for kind in (ONE_POINT, TWO_POINT):
                assert all(c.is_corrected() for c in crossover(a, b, kind, rng))

    def test_length_mismatch(self):
        other = make_encoding(2, 1, 2, 4)
        with pytest.raises(ValueError):
            crossover(self.zeros, Genome(bytes(other.genome_bits), other), ONE_POINT, None)


def _individuals(values):
    g = Genome(bytes(ANT.genome_bits), ANT)
    return [Individual(g, Fitness(False, 1, 1, 1, {}, float(f)), birth)
            for birth, f in enumerate(values)]


class TestSelectReplace:
    def test_forced_ordering(self):
        survivors = select_replace(_individuals([3, 1, 2, 9, 4, 7, 8]), 4)
        assert [ind.F for ind in survivors] == [1, 2, 3, 4]

    def test_ties_evict_newest(self):
        survivors = select_replace(_individuals([5] * 7), 4)
        assert [ind.birth for ind in survivors] == [0, 1, 2, 3]

    def test_best_never_removed(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            pop = _individuals(rng.integers(0, 5, size=7))
            best = min(pop, key=lambda i: (i.F, i.birth))
            assert best in select_replace(pop, 4)

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            select_replace(_individuals([1, 2, 3, 4, 5]), 4)


class TestRun:
    def test_feasible_initial_population_stops_at_zero(self):
        spec = make_encoding(2, 1, 2, 3)
        res = run(spec, StubTask(feasible=True), GaConfig(population_size=10, seed=1))
        assert res.generations_run == 0 and res.evaluations == 10
        assert res.best_fitness.feasible

    def test_zero_generations(self, ant_task):
        cfg = GaConfig(population_size=30, max_generations=0, seed=2)
        res = run(ANT, ant_task, cfg)
        pop = init_population(ANT, cfg, np.random.default_rng(2), ant_task)
        assert res.generations_run == 0
        assert res.best_fitness.F == pop[0].F
        assert len(res.stats) == 1

    def test_determinism(self, ant_task):
        cfg = GaConfig(population_size=40, max_generations=300, seed=11)
        a, b = run(ANT, ant_task, cfg), run(ANT, ant_task, cfg)
        assert a.best_genome == b.best_genome
        assert a.stats_csv() == b.stats_csv()
        assert (a.generations_run, a.evaluations) == (b.generations_run, b.evaluations)

    def test_invariants(self, ant_task):
        cfg = GaConfig(population_size=40, max_generations=400, seed=5)
        bests = []

        def observe(gen, pop):
            assert len(pop) == cfg.population_size
            assert all(ind.genome.is_corrected() for ind in pop)
            bests.append(pop[0].F)

        res = run(ANT, ant_task, cfg, observer=observe)
        assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
        assert res.best_fitness.F == min(bests)
        assert res.evaluations == 40 + 3 * res.generations_run
        assert all(row.best_F == b for row, b in zip(res.stats, bests))

    def test_no_operators_only_clones(self, ant_task):
        cfg = GaConfig(population_size=30, max_generations=200, seed=3,
                       crossover_probability=0.0, mutation_probability=0.0)
        first = {}

        def observe(gen, pop):
            if gen == 0:
                first["genomes"] = {ind.genome for ind in pop}
                first["best"] = pop[0].F
            assert {ind.genome for ind in pop} <= first["genomes"]
            assert pop[0].F == first["best"]

        run(ANT, ant_task, cfg, observer=observe)

    def test_evaluation_budget(self, ant_task):
        cfg = GaConfig(population_size=30, max_generations=10**6, seed=3, max_evaluations=300)
        res = run(ANT, ant_task, cfg)
        assert res.evaluations <= 300 and res.generations_run == 90

    def test_task_shape_mismatch(self, ant_task):
        with pytest.raises(ValueError):
            run(make_encoding(4, 2, 2, 4), ant_task, GaConfig(population_size=4))

    def test_csv_columns(self, ant_task):
        res = run(ANT, ant_task, GaConfig(population_size=10, max_generations=2, seed=0))
        lines = res.stats_csv().splitlines()
        assert lines[0] == "generation,best_F,mean_F,best_a1,best_a2,best_raw"
        assert len(lines) == 4 and lines[3].startswith("2,")


@pytest.mark.parametrize("kwargs", [dict(population_size=3), dict(crossover_probability=1.5),
                                    dict(mutation_probability=-0.1), dict(crossover_kind="3pt"),
                                    dict(weights=(-1, 0)), dict(infeasibility_penalty=0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        GaConfig(**kwargs)
