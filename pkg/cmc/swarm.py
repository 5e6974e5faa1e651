"""Particle swarm estimation of (Q, P_chi) with bounce-off walls."""
from __future__ import annotations

import logging
import lzma
import pickle
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np  # type: ignore

from cmc.components.boundary import MAX_BOUNCES, bounded_move
from cmc.exceptions import InputError
from cmc.likelihood import LikelihoodObjective
from cmc.model import ModelParams, TransitionMatrix, nondeterioration_probs
from cmc.panel import CountTensor
from cmc.sampler import AffineBasis, FeasibleSampleSet, affine_basis, feasible_start
from cmc.trace import Trace, population_stats

import utils

log = logging.getLogger(__name__)

SwarmTrace = Trace


@dataclass(frozen=True)
class SwarmConfig:
    c0: float = 0.5
    c1: float = 1.5
    c2: float = 1.5
    swarm_size: int = 200
    max_iterations: int = 150
    var_threshold: float = 1e-6
    rng_seed: int = 0
    max_bounces: int = MAX_BOUNCES
    n_functionals: int = 20
    k_directions: int = 40

    def __post_init__(self):
        if min(self.c0, self.c1, self.c2) < 0:
            raise InputError("swarm weights c0, c1, c2 must be nonnegative")
        if self.swarm_size < 2:
            raise InputError("swarm needs at least two particles")
        if self.var_threshold <= 0:
            raise InputError("variance threshold must be positive")
        if self.max_iterations < 0 or self.max_bounces < 0:
            raise InputError("iteration and bounce limits must be nonnegative")


class Particle:
    def __init__(self, position: np.ndarray, value: float):
        self.position = np.array(position, dtype=float)
        self.velocity = np.zeros_like(self.position)
        self.best_position = self.position.copy()
        self.value = value
        self.best_value = value


class Swarm:
    """State of one particle swarm run; ``iteration`` counts completed steps."""

    def __init__(
        self,
        config: SwarmConfig,
        objective: LikelihoodObjective,
        basis: AffineBasis,
        particles: List[Particle],
    ):
        self.config = config
        self.objective = objective
        self.basis = basis
        self.particles = particles
        self.iteration = 0
        self.trace = SwarmTrace()
        # one stream per particle, so evaluation order never changes the draws
        streams = np.random.SeedSequence(utils.seed_for(config.rng_seed, "optimizer")).spawn(len(particles))
        self.rngs = [np.random.default_rng(s) for s in streams]

        best = 0
        for k, particle in enumerate(particles):
            if particle.value > particles[best].value:
                best = k
        self.global_best_position = particles[best].position.copy()
        self.global_best_value = particles[best].value
        self.trace.add_record(0, self.global_best_value, self.values)

    @property
    def values(self) -> List[float]:
        return [p.value for p in self.particles]

    @property
    def n_q(self) -> int:
        return self.objective.n_classes * self.objective.n_sectors

    @property
    def variance(self) -> float:
        return population_stats(self.values)[1]

    @property
    def converged(self) -> bool:
        return self.variance < self.config.var_threshold

    def params_at(self, position: np.ndarray) -> ModelParams:
        return ModelParams.from_vector(position, self.objective.n_classes, self.objective.n_sectors)

    @property
    def best_params(self) -> ModelParams:
        return self.params_at(self.global_best_position)

    def save_as(self, filename: str) -> None:
        """Save this swarm as a compressed file."""
        with open(filename, "wb") as f:
            f.write(lzma.compress(pickle.dumps(self)))


def init_swarm(
    config: SwarmConfig,
    P: TransitionMatrix,
    counts: CountTensor,
    samples: Optional[FeasibleSampleSet] = None,
) -> Swarm:
    """Place particles on sampled feasible points with zero velocity."""
    objective = LikelihoodObjective(counts, P)
    p_plus = nondeterioration_probs(P)
    if samples is None:
        samples = feasible_start(
            p_plus,
            counts.n_sectors,
            config.swarm_size,
            config.rng_seed,
            n_functionals=config.n_functionals,
            K=config.k_directions,
        )
    particles = []
    for q, chi in samples.pairs(config.swarm_size):
        params = ModelParams(q, chi)
        particles.append(Particle(params.to_vector(), objective(params)))
    return Swarm(config, objective, affine_basis(p_plus), particles)


def velocity_update(
    particle: Particle,
    global_best: np.ndarray,
    config: SwarmConfig,
    rng: np.random.Generator,
    basis: AffineBasis,
) -> np.ndarray:
    """c0 v + c1 r1 o (own best - x) + c2 r2 o (global best - x).

    The chi block's random weights act on the coordinates of the subspace
    basis, so the chi velocity stays inside the subspace.
    """
    n_q = len(particle.position) - basis.ambient_dimension
    x = particle.position
    own = particle.best_position - x
    crowd = global_best - x

    v = config.c0 * particle.velocity
    r1, r2 = rng.random(n_q), rng.random(n_q)
    v[:n_q] += config.c1 * r1 * own[:n_q] + config.c2 * r2 * crowd[:n_q]

    if basis.dimension:
        s1, s2 = rng.random(basis.dimension), rng.random(basis.dimension)
        pull = config.c1 * s1 * basis.coordinates(own[n_q:]) + config.c2 * s2 * basis.coordinates(crowd[n_q:])
        v[n_q:] += basis.embed(pull)
    return v


def pso_step(swarm: Swarm) -> Swarm:
    """Fly every particle once, then update personal and global bests."""
    config = swarm.config
    for particle, rng in zip(swarm.particles, swarm.rngs):
        particle.velocity = velocity_update(particle, swarm.global_best_position, config, rng, swarm.basis)
        particle.position, particle.velocity = bounded_move(
            particle.position, particle.velocity, swarm.basis, config.max_bounces
        )
        particle.value = swarm.objective(swarm.params_at(particle.position))
        if particle.value > particle.best_value:
            particle.best_value = particle.value
            particle.best_position = particle.position.copy()

    for particle in swarm.particles:
        if particle.value > swarm.global_best_value:
            swarm.global_best_value = particle.value
            swarm.global_best_position = particle.position.copy()

    swarm.iteration += 1
    record = swarm.trace.add_record(swarm.iteration, swarm.global_best_value, swarm.values)
    log.debug(
        "pso iteration %d best %.6g mean %.6g variance %.6g",
        record.iteration, record.best, record.mean, record.variance,
    )
    return swarm


def run_swarm(swarm: Swarm) -> Swarm:
    while swarm.iteration < swarm.config.max_iterations and not swarm.converged:
        pso_step(swarm)
    return swarm


def run_pso(
    counts: CountTensor,
    P: TransitionMatrix,
    config: SwarmConfig,
    samples: Optional[FeasibleSampleSet] = None,
) -> Tuple[ModelParams, SwarmTrace]:
    """Iterate until the swarm's value variance drops below the threshold or the cap is hit."""
    swarm = init_swarm(config, P, counts, samples)
    log.info("pso: %d particles, initial best %.6g", len(swarm.particles), swarm.global_best_value)
    run_swarm(swarm)
    log.info("pso: stopped after %d iterations, best %.6g", swarm.iteration, swarm.global_best_value)
    return swarm.best_params, swarm.trace
