"""Steady-state genetic algorithm over bit-string Mealy machine genomes.

Each generation breeds exactly three newcomers (two from crossover, one from
mutation; clones fill any slot whose probability gate fails), inserts them and
evicts the three individuals with the highest objective. Random draws happen
in a fixed order per generation so that a run is a pure function of its
inputs and seed:

1. two 2-way tournaments for the crossover parents,
2. the crossover gate, then the cut point(s) if it passes,
3. one 2-way tournament for the mutation parent,
4. the mutation gate, then gene index, branch and new field value.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from .machine import EncodingSpec, Genome, MealyMachine, correct, decode, reachable_states

log = logging.getLogger(__name__)

ONE_POINT = "one-point"
TWO_POINT = "two-point"
OFFSPRING_PER_GENERATION = 3


class Task(Protocol):
    name: str
    input_bits: int
    output_bits: int
    action_count: int
    raw_key: str

    def outcome(self, machine: MealyMachine) -> tuple[bool, int, int, dict, float]:
        """(feasible, a2, deficit, raw measures, tie-break distance)."""


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 1200
    max_generations: int = 10000
    crossover_probability: float = 0.4
    mutation_probability: float = 0.25
    crossover_kind: str = TWO_POINT
    weights: tuple[float, float] = (1.0, 0.01)
    infeasibility_penalty: float = 1000.0
    seed: int = 0
    target: int | None = None
    max_evaluations: int | None = None
    tiebreak_weight: float = 1e-6

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if self.max_generations < 0:
            raise ValueError("max_generations must be non-negative")
        for name in ("crossover_probability", "mutation_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.crossover_kind not in (ONE_POINT, TWO_POINT):
            raise ValueError(f"unknown crossover kind {self.crossover_kind!r}")
        if len(self.weights) != 2 or min(self.weights) < 0:
            raise ValueError("weights must be two non-negative numbers")
        if self.infeasibility_penalty <= 0:
            raise ValueError("infeasibility_penalty must be positive")
        if self.max_evaluations is not None and self.max_evaluations < self.population_size:
            raise ValueError("max_evaluations cannot be smaller than the initial population")


@dataclass(frozen=True)
class Fitness:
    feasible: bool
    a1: int
    a2: int
    deficit: int
    raw: dict = field(compare=False)
    F: float = 0.0


def objective(a1: float, a2: float, weights: tuple[float, float]) -> float:
    w1, w2 = weights
    return w1 * a1 + w2 * a2


def evaluate(genome: Genome, spec: EncodingSpec, task: Task, config: GaConfig) -> Fitness:
    machine = decode(genome, spec)
    feasible, a2, deficit, raw, distance = task.outcome(machine)
    a1 = reachable_states(machine)
    F = objective(a1, a2, config.weights)
    if not feasible:
        F += config.infeasibility_penalty * deficit
    F += config.tiebreak_weight * distance
    return Fitness(bool(feasible), a1, int(a2), int(deficit), raw, F)


@dataclass
class Individual:
    genome: Genome
    fitness: Fitness
    birth: int

    @property
    def F(self) -> float:
        return self.fitness.F


def random_genome(spec: EncodingSpec, rng: np.random.Generator) -> Genome:
    bits = rng.integers(0, 2, size=spec.genome_bits, dtype=np.uint8)
    return correct(Genome(bits.tobytes(), spec), spec)


def init_population(spec: EncodingSpec, config: GaConfig, rng: np.random.Generator,
                    task: Task, evaluator=None) -> list[Individual]:
    """Uniform random bits, corrected, evaluated and sorted best first."""
    evaluator = evaluator or (lambda g: evaluate(g, spec, task, config))
    genomes = [random_genome(spec, rng) for _ in range(config.population_size)]
    pop = [Individual(g, evaluator(g), i) for i, g in enumerate(genomes)]
    pop.sort(key=lambda ind: ind.F)
    return pop


def mutate(genome: Genome, spec: EncodingSpec, rng) -> Genome:
    """Redraw either the output or the next-state field of one random gene."""
    nxt, out = genome.fields()
    nxt, out = nxt.copy(), out.copy()
    gene = int(rng.integers(0, spec.gene_count))
    if int(rng.integers(0, 2)) == 1:
        out[gene] = int(rng.integers(0, spec.action_count))
    else:
        nxt[gene] = int(rng.integers(0, spec.states))
    bits = bytearray(genome.bits)
    lo = gene * spec.gene_bits
    t, y = spec.triggers, spec.output_bits
    for k in range(t):
        bits[lo + k] = (int(nxt[gene]) >> (t - 1 - k)) & 1
    for k in range(y):
        bits[lo + t + k] = (int(out[gene]) >> (y - 1 - k)) & 1
    return Genome(bytes(bits), spec)


def draw_cuts(n_bits: int, kind: str, rng) -> tuple[int, ...]:
    if kind == ONE_POINT:
        return (int(rng.integers(1, n_bits)),)
    i, j = (int(v) for v in rng.choice(np.arange(1, n_bits), size=2, replace=False))
    return (min(i, j), max(i, j))


def exchange(a: bytes, b: bytes, cuts: tuple[int, ...]) -> tuple[bytes, bytes]:
    """Raw bit exchange at the given cut points, before any correction."""
    if len(a) != len(b):
        raise ValueError("parents differ in length")
    if len(cuts) == 1:
        (k,) = cuts
        return a[:k] + b[k:], b[:k] + a[k:]
    i, j = cuts
    return a[:i] + b[i:j] + a[j:], b[:i] + a[i:j] + b[j:]


def crossover(a: Genome, b: Genome, kind: str, rng, cuts: tuple[int, ...] | None = None
              ) -> tuple[Genome, Genome]:
    if a.spec != b.spec or len(a.bits) != len(b.bits):
        raise ValueError("parents differ in length")
    spec = a.spec
    if cuts is None:
        cuts = draw_cuts(spec.genome_bits, kind, rng)
    c1, c2 = exchange(a.bits, b.bits, cuts)
    return correct(Genome(c1, spec), spec), correct(Genome(c2, spec), spec)


def select_replace(population: list[Individual], population_size: int) -> list[Individual]:
    """Stable sort by objective (best first) and drop the three worst.

    Callers append newcomers after the incumbents, so equal objectives keep
    the older individual.
    """
    if len(population) != population_size + OFFSPRING_PER_GENERATION:
        raise ValueError(
            f"expected {population_size + OFFSPRING_PER_GENERATION} individuals, got {len(population)}")
    return _rank(population)[:population_size]


def _rank(population: list[Individual]) -> list[Individual]:
    return sorted(population, key=lambda ind: ind.F)


def tournament(population: list[Individual], rng) -> Individual:
    i, j = (int(v) for v in rng.integers(0, len(population), size=2))
    a, b = population[i], population[j]
    if b.F < a.F or (b.F == a.F and b.birth < a.birth):
        return b
    return a


@dataclass
class GenerationStats:
    generation: int
    best_F: float
    mean_F: float
    best_a1: int
    best_a2: int
    best_raw: Any

    def csv_row(self) -> str:
        return (f"{self.generation},{self.best_F!r},{self.mean_F!r},"
                f"{self.best_a1},{self.best_a2},{self.best_raw}")


CSV_HEADER = "generation,best_F,mean_F,best_a1,best_a2,best_raw"


@dataclass
class SynthesisResult:
    best_genome: Genome
    best_machine: MealyMachine
    best_fitness: Fitness
    generations_run: int
    evaluations: int
    stats: list[GenerationStats]

    @property
    def feasible(self) -> bool:
        return self.best_fitness.feasible

    def stats_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.stats:
            buf.write(row.csv_row() + "\n")
        return buf.getvalue()


def _done(fit: Fitness, target: int | None) -> bool:
    return fit.feasible and (target is None or fit.a1 <= target)


def run(spec: EncodingSpec, task: Task, config: GaConfig,
        rng: np.random.Generator | None = None, observer=None) -> SynthesisResult:
    """Evolve until a feasible machine within ``config.target`` states appears
    or the generation/evaluation budget runs out. ``observer(generation, pop)``
    is called after initialization and after every replacement.
    """
    if (spec.input_bits, spec.action_count) != (task.input_bits, task.action_count):
        raise ValueError(f"encoding does not fit task {task.name!r}")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    cache: dict[bytes, Fitness] = {}

    def evaluator(g: Genome) -> Fitness:
        fit = cache.get(g.bits)
        if fit is None:
            fit = cache[g.bits] = evaluate(g, spec, task, config)
        return fit

    size = config.population_size
    pop = init_population(spec, config, rng, task, evaluator)
    evaluations = size
    births = size
    best = pop[0]
    total_F = sum(ind.F for ind in pop)
    stats = [_stats(0, pop, total_F, task)]
    generation = 0
    if observer:
        observer(generation, pop)

    while generation < config.max_generations and not _done(best.fitness, config.target):
        if (config.max_evaluations is not None
                and evaluations + OFFSPRING_PER_GENERATION > config.max_evaluations):
            break
        generation += 1
        pa, pb = tournament(pop, rng), tournament(pop, rng)
        if rng.random() < config.crossover_probability:
            c1, c2 = crossover(pa.genome, pb.genome, config.crossover_kind, rng)
        else:
            c1, c2 = pa.genome, pb.genome
        pm = tournament(pop, rng)
        if rng.random() < config.mutation_probability:
            c3 = mutate(pm.genome, spec, rng)
        else:
            c3 = pm.genome
        newcomers = []
        for g in (c1, c2, c3):
            newcomers.append(Individual(g, evaluator(g), births))
            births += 1
        evaluations += OFFSPRING_PER_GENERATION
        ranked = _rank(pop + newcomers)
        pop = ranked[:size]
        total_F += sum(ind.F for ind in newcomers) - sum(ind.F for ind in ranked[size:])
        if pop[0].F < best.F:
            best = pop[0]
        stats.append(_stats(generation, pop, total_F, task))
        if observer:
            observer(generation, pop)

    machine = decode(best.genome, spec)
    log.info("run finished: generation=%d evaluations=%d F=%r feasible=%s",
             generation, evaluations, best.F, best.fitness.feasible)
    return SynthesisResult(best.genome, machine, best.fitness, generation, evaluations, stats)


def _stats(generation: int, pop: list[Individual], total_F: float, task: Task) -> GenerationStats:
    top = pop[0].fitness
    return GenerationStats(generation, top.F, total_F / len(pop), top.a1, top.a2,
                           top.raw.get(task.raw_key))
