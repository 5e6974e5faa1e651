"""Genetic operators. Randomness acts on Q only; chi vectors are only ever copied."""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np  # type: ignore

from cmc.exceptions import InputError
from cmc.model import QMatrix

if TYPE_CHECKING:
    from cmc.evolution import Chromosome

MUTATION_SPAN = 0.5


def crossover(parent1: Chromosome, parent2: Chromosome, lam: float) -> Tuple[Chromosome, Chromosome]:
    """Intermediate crossover: interpolate the Q matrices, each child keeps one parent's chi."""
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"crossover weight {lam} outside [0, 1]")
    q1, q2 = parent1.q.entries, parent2.q.entries
    child1 = parent1.spawn(q=QMatrix(lam * q1 + (1.0 - lam) * q2))
    child2 = parent2.spawn(q=QMatrix((1.0 - lam) * q1 + lam * q2))
    return child1, child2


def mutate(parent: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Add independent uniform [-0.5, 0.5] noise to every Q entry, then truncate to [0, 1]."""
    q = parent.q.entries
    phi = rng.uniform(-MUTATION_SPAN, MUTATION_SPAN, size=q.shape)
    return parent.spawn(q=QMatrix(np.clip(q + phi, 0.0, 1.0)))


def random_addition(parents: Sequence[Chromosome], rng: np.random.Generator) -> Chromosome:
    """Fresh uniform Q with the chi vector of a uniformly chosen parent."""
    if not parents:
        raise InputError("random addition needs a parent population")
    donor = parents[int(rng.integers(len(parents)))]
    return donor.spawn(q=QMatrix(rng.random(donor.q.entries.shape)))


def select_elite(population: Sequence[Chromosome], e: int) -> List[Chromosome]:
    """The e best chromosomes; equal values keep their population order."""
    if e > len(population):
        raise InputError(f"cannot select {e} elites from {len(population)} chromosomes")
    order = sorted(range(len(population)), key=lambda i: -population[i].value)
    return [population[i] for i in order[:e]]
