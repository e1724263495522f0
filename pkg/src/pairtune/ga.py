"""Genetic configuration search driven by pairwise comparisons.

The search never asks for a performance value: generation fitness is the
Copeland win count from a round-robin of the population under the trained
comparator.  An oracle-fitness mode (raw performance) exists for calibration
and for measuring how much the learned comparator costs relative to truth.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .metrics import pairwise_scores
from .space import ConfigSpace, Configuration, ParameterDef, encode_many, sample_uniform


def _derive(seed: int, *path) -> int:
    digest = hashlib.sha256(repr((int(seed),) + path).encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class GaConfig:
    population: int = 200
    crossover_rate: float = 0.5
    mutation_rate: float = 0.015
    generations: int = 30
    elitism: int = 1
    seed: int = 0
    # None: full round-robin up to population 64, else 32 sampled opponents
    opponents: int | None = None

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (0 <= self.elitism <= self.population):
            raise ValueError("elitism must lie in [0, population]")
        if self.opponents is not None and self.opponents < 1:
            raise ValueError("opponents must be >= 1 when set")


@dataclass(frozen=True)
class GenerationStat:
    generation: int
    best_values: tuple
    best_fitness: float


@dataclass
class EvolveResult:
    best: Configuration
    history: tuple[GenerationStat, ...]
    comparisons: int


def _resample_gene(param: ParameterDef, rng: np.random.Generator):
    if param.kind == "continuous":
        return float(rng.uniform(param.lower, param.upper))
    if param.kind == "integer":
        return int(rng.integers(int(param.lower), int(param.upper) + 1))
    return param.categories[int(rng.integers(len(param.categories)))]


def _tournament(fitness: np.ndarray, rng: np.random.Generator) -> int:
    i = int(rng.integers(len(fitness)))
    j = int(rng.integers(len(fitness)))
    if fitness[i] > fitness[j]:
        return i
    if fitness[j] > fitness[i]:
        return j
    return min(i, j)


def _comparator_mode(fitness_source) -> bool:
    if hasattr(fitness_source, "decision_many"):
        return True
    if hasattr(fitness_source, "true_performance"):
        return False
    raise TypeError("fitness source must be a comparator or an oracle")


def evolve(space: ConfigSpace, fitness_source, cfg: GaConfig) -> EvolveResult:
    """Tournament GA with uniform crossover, per-gene mutation and elitism.

    Fitness draws nothing from the generator, so with tie-free fitness the
    selection decisions depend only on the fitness ordering; a comparator
    that orders pairs exactly like the oracle yields an identical run.
    """
    comparator = _comparator_mode(fitness_source)
    pop_values = [tuple(c.values) for c in
                  sample_uniform(space, cfg.population, seed=_derive(cfg.seed, "init"))]
    rng = np.random.default_rng(_derive(cfg.seed, "loop"))
    comparisons = 0
    history: list[GenerationStat] = []

    sampled = cfg.opponents if cfg.opponents is not None else (
        None if cfg.population <= 64 else 32)

    def fitness_of(values: list[tuple]) -> np.ndarray:
        nonlocal comparisons
        if not comparator:
            return np.asarray([
                fitness_source.true_performance(Configuration(values=v, id=-1))
                for v in values])
        E = encode_many(space, [Configuration(values=v, id=i)
                                for i, v in enumerate(values)])
        n = len(values)
        if sampled is None:
            S = pairwise_scores(fitness_source, E)
            comparisons += n * (n - 1)
            return (S > 0).sum(axis=1).astype(np.float64)
        wins = np.zeros(n)
        k = min(sampled, n - 1)
        for i in range(n):
            opp = rng.choice(n - 1, size=k, replace=False)
            opp = np.where(opp >= i, opp + 1, opp)
            feats_lr = np.hstack([np.tile(E[i], (k, 1)), E[opp]])
            feats_rl = np.hstack([E[opp], np.tile(E[i], (k, 1))])
            score = (fitness_source.decision_many(feats_lr)
                     - fitness_source.decision_many(feats_rl)) / 2.0
            wins[i] = float((score > 0).sum())
            comparisons += 2 * k
        return wins

    for generation in range(cfg.generations):
        fit = fitness_of(pop_values)
        order = sorted(range(cfg.population), key=lambda i: (-fit[i], i))
        history.append(GenerationStat(
            generation=generation,
            best_values=pop_values[order[0]],
            best_fitness=float(fit[order[0]])))
        elites = [pop_values[i] for i in order[:cfg.elitism]]
        children: list[tuple] = []
        while len(children) < cfg.population - cfg.elitism:
            p1 = _tournament(fit, rng)
            p2 = _tournament(fit, rng)
            child = [
                pop_values[p2][g] if rng.random() < cfg.crossover_rate
                else pop_values[p1][g]
                for g in range(len(space.parameters))
            ]
            for g, param in enumerate(space.parameters):
                if rng.random() < cfg.mutation_rate:
                    child[g] = _resample_gene(param, rng)
            children.append(tuple(child))
        pop_values = elites + children

    fit = fitness_of(pop_values)
    order = sorted(range(cfg.population), key=lambda i: (-fit[i], i))
    best_values = pop_values[order[0]]
    history.append(GenerationStat(generation=cfg.generations,
                                  best_values=best_values,
                                  best_fitness=float(fit[order[0]])))
    return EvolveResult(best=Configuration(values=best_values, id=-1),
                        history=tuple(history), comparisons=comparisons)


@dataclass
class TuneResult:
    best: Configuration
    decoded: dict
    true_performance: float
    history: tuple[GenerationStat, ...]
    comparisons: int

    def as_dict(self) -> dict:
        return {
            "best": self.decoded,
            "true_performance": self.true_performance,
            "comparisons": self.comparisons,
            "generations": len(self.history) - 1,
            "history": [
                {"generation": s.generation, "best_fitness": s.best_fitness}
                for s in self.history
            ],
        }


def tune(session, space: ConfigSpace, cfg: GaConfig, oracle) -> TuneResult:
    """Search with a session's comparator; score the winner against truth once."""
    model = session.model if hasattr(session, "model") else session
    result = evolve(space, model, cfg)
    perf = float(oracle.true_performance(result.best))
    decoded = {p.name: v for p, v in zip(space.parameters, result.best.values)}
    return TuneResult(best=result.best, decoded=decoded, true_performance=perf,
                      history=result.history, comparisons=result.comparisons)
