"""Evolutionary estimation of (Q, P_chi).

Each generation is e elites, c crossover children (c/2 crossovers), m mutants
and r random additions. Elitism keeps the best value non-decreasing.
"""
from __future__ import annotations

import copy
import logging
import lzma
import pickle
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np  # type: ignore

from cmc.components.operators import crossover, mutate, random_addition, select_elite
from cmc.exceptions import InputError
from cmc.likelihood import LikelihoodObjective
from cmc.model import ChiDistribution, ModelParams, QMatrix, TransitionMatrix, nondeterioration_probs
from cmc.panel import CountTensor
from cmc.sampler import FeasibleSampleSet, feasible_start
from cmc.trace import Trace

import utils

log = logging.getLogger(__name__)

Objective = Callable[[ModelParams], float]


@dataclass(frozen=True)
class EaConfig:
    e: int = 30
    c: int = 50
    m: int = 100
    r: int = 50
    initial_population: int = 750
    max_iterations: int = 150
    rng_seed: int = 0
    n_functionals: int = 20
    k_directions: int = 40

    def __post_init__(self):
        if min(self.e, self.c, self.m, self.r) < 0:
            raise InputError("operator counts must be nonnegative")
        if self.e < 1:
            raise InputError("at least one elite is needed")
        if self.generation_size < 2:
            raise InputError("a generation needs at least two chromosomes")
        if self.c % 2:
            raise InputError("crossover child count must be even")
        if self.initial_population < self.e:
            raise InputError("initial population is smaller than the elite count")
        if self.max_iterations < 0:
            raise InputError("iteration limit must be nonnegative")

    @property
    def generation_size(self) -> int:
        return self.e + self.c + self.m + self.r


class Chromosome:
    def __init__(self, q: QMatrix, chi: ChiDistribution, value: Optional[float] = None):
        self.q = q
        self.chi = chi
        self.value = value

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.q, self.chi)

    def spawn(self, q: QMatrix) -> Chromosome:
        """Copy of this chromosome with a new Q, awaiting evaluation."""
        clone = copy.copy(self)
        clone.q = q
        clone.value = None
        return clone

    def evaluate(self, objective: Objective) -> float:
        if self.value is None:
            self.value = objective(self.params)
        return self.value


class Generation:
    """State of one evolutionary run; ``iteration`` counts completed generations."""

    def __init__(self, config: EaConfig, objective: LikelihoodObjective, population: List[Chromosome]):
        self.config = config
        self.objective = objective
        self.population = population
        self.iteration = 0
        self.trace = Trace()
        self.rng = np.random.default_rng(utils.seed_for(config.rng_seed, "optimizer"))
        self.trace.add_record(0, self.best.value, self.values)

    @property
    def values(self) -> List[float]:
        return [c.value for c in self.population]

    @property
    def best(self) -> Chromosome:
        return select_elite(self.population, 1)[0]

    def save_as(self, filename: str) -> None:
        """Save this generation as a compressed file."""
        with open(filename, "wb") as f:
            f.write(lzma.compress(pickle.dumps(self)))


def init_population(
    config: EaConfig,
    P: TransitionMatrix,
    counts: CountTensor,
    samples: Optional[FeasibleSampleSet] = None,
) -> Generation:
    objective = LikelihoodObjective(counts, P)
    if samples is None:
        samples = feasible_start(
            nondeterioration_probs(P),
            counts.n_sectors,
            config.initial_population,
            config.rng_seed,
            n_functionals=config.n_functionals,
            K=config.k_directions,
        )
    population = [Chromosome(q, chi) for q, chi in samples.pairs(config.initial_population)]
    for chromosome in population:
        chromosome.evaluate(objective)
    return Generation(config, objective, population)


def offspring(parents: List[Chromosome], config: EaConfig, rng: np.random.Generator) -> List[Chromosome]:
    """Crossover children, mutants and random additions, in that order."""
    children: List[Chromosome] = []
    for _ in range(config.c // 2):
        i, j = rng.integers(len(parents), size=2)
        children.extend(crossover(parents[i], parents[j], float(rng.random())))
    for _ in range(config.m):
        children.append(mutate(parents[int(rng.integers(len(parents)))], rng))
    for _ in range(config.r):
        children.append(random_addition(parents, rng))
    return children


def ea_step(generation: Generation) -> Generation:
    config = generation.config
    parents = generation.population
    children = offspring(parents, config, generation.rng)
    for child in children:
        child.evaluate(generation.objective)
    generation.population = select_elite(parents, config.e) + children

    generation.iteration += 1
    record = generation.trace.add_record(generation.iteration, generation.best.value, generation.values)
    log.debug(
        "ea generation %d best %.6g mean %.6g variance %.6g",
        record.iteration, record.best, record.mean, record.variance,
    )
    return generation


def run_generations(generation: Generation) -> Generation:
    while generation.iteration < generation.config.max_iterations:
        ea_step(generation)
    return generation


def run_ea(
    counts: CountTensor,
    P: TransitionMatrix,
    config: EaConfig,
    samples: Optional[FeasibleSampleSet] = None,
) -> Tuple[ModelParams, Trace]:
    generation = init_population(config, P, counts, samples)
    log.info("ea: %d chromosomes, initial best %.6g", len(generation.population), generation.best.value)
    run_generations(generation)
    log.info("ea: %d generations, best %.6g", generation.iteration, generation.best.value)
    return generation.best.params, generation.trace
