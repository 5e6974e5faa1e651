import dataclasses

import numpy as np  # type: ignore
import pytest

from cmc.components.operators import crossover, mutate, random_addition, select_elite
from cmc.evolution import Chromosome, EaConfig, ea_step, init_population, run_ea
from cmc.exceptions import InputError
from cmc.likelihood import log_likelihood
from cmc.model import ChiDistribution, QMatrix, nondeterioration_probs
from cmc.panel import count_tensor
from cmc.simulator import synth_panel

from instances import random_matrix, random_params

SMALL = EaConfig(e=4, c=6, m=8, r=4, initial_population=30, max_iterations=8, n_functionals=4, k_directions=6, rng_seed=2)


@pytest.fixture
def instance():
    rng = np.random.default_rng(8)
    P = random_matrix(rng, 2)
    truth = random_params(rng, P, 2)
    panel = synth_panel(P, truth, 40, 5, 2, rng_seed=4)
    return P, count_tensor(panel, 2, 2)


def _chromosome(q, value=None):
    return Chromosome(QMatrix(q), ChiDistribution([0.1, 0.2, 0.3, 0.4]), value)


def test_crossover_interpolates_q():
    a, b = _chromosome([[0.0, 1.0]]), _chromosome([[1.0, 0.0]])
    child1, child2 = crossover(a, b, 0.25)
    np.testing.assert_allclose(child1.q.entries, [[0.75, 0.25]])
    np.testing.assert_allclose(child2.q.entries, [[0.25, 0.75]])
    assert child1.chi is a.chi and child2.chi is b.chi
    assert child1.value is None
    with pytest.raises(InputError):
        crossover(a, b, 1.5)


def test_mutation_stays_in_bounds():
    rng = np.random.default_rng(0)
    parent = _chromosome(np.full((3, 4), 0.9), value=-2.0)
    for _ in range(20):
        child = mutate(parent, rng)
        assert child.q.entries.min() >= 0 and child.q.entries.max() <= 1
        assert np.abs(child.q.entries - 0.9).max() <= 0.5
        assert child.chi is parent.chi
    assert parent.value == -2.0


def test_random_addition_copies_a_parent_chi():
    rng = np.random.default_rng(1)
    parents = [_chromosome([[0.5]]) for _ in range(3)]
    child = random_addition(parents, rng)
    assert any(child.chi is p.chi for p in parents)
    with pytest.raises(InputError):
        random_addition([], rng)


def test_elite_ties_keep_population_order():
    population = [_chromosome([[0.1]], v) for v in (-3.0, -1.0, -2.0, -1.0)]
    elite = select_elite(population, 3)
    assert elite == [population[1], population[3], population[2]]
    with pytest.raises(InputError):
        select_elite(population, 5)


def test_generation_size():
    assert EaConfig().generation_size == 230
    with pytest.raises(InputError):
        EaConfig(c=51)
    with pytest.raises(InputError):
        EaConfig(initial_population=10)


def test_generations_keep_size_and_chi_pool(instance):
    P, counts = instance
    generation = init_population(SMALL, P, counts)
    assert len(generation.population) == 30
    pool = {id(c.chi) for c in generation.population}
    p_plus = nondeterioration_probs(P)
    for _ in range(3):
        ea_step(generation)
        assert len(generation.population) == SMALL.generation_size
        assert {id(c.chi) for c in generation.population} <= pool
        assert all(c.params.is_feasible(p_plus) for c in generation.population)


def test_best_is_monotone(instance):
    P, counts = instance
    params, trace = run_ea(counts, P, SMALL)
    assert len(trace) == SMALL.max_iterations + 1
    assert (np.diff(trace.best_values) >= 0).all()
    assert log_likelihood(counts, P, params) == pytest.approx(trace.last.best)


def test_runs_are_reproducible(instance):
    P, counts = instance
    a, trace_a = run_ea(counts, P, SMALL)
    b, trace_b = run_ea(counts, P, SMALL)
    np.testing.assert_array_equal(a.to_vector(), b.to_vector())
    assert trace_a.to_frame().equals(trace_b.to_frame())
    c, _ = run_ea(counts, P, dataclasses.replace(SMALL, rng_seed=3))
    assert not np.array_equal(a.to_vector(), c.to_vector())


@pytest.mark.slow
def test_recovers_known_parameters(recovery_instance):
    P, counts, truth = recovery_instance
    target = log_likelihood(counts, P, truth)
    _, trace = run_ea(counts, P, EaConfig(rng_seed=1))
    assert trace.last.best >= target - 0.01 * abs(target)


def test_random_addition_picks_parents_uniformly():
    rng = np.random.default_rng(6)
    parents = [_chromosome([[0.5]]) for _ in range(4)]
    n = 20_000
    picks = np.zeros(4)
    for _ in range(n):
        child = random_addition(parents, rng)
        picks[[child.chi is p.chi for p in parents].index(True)] += 1
    sigma = np.sqrt(0.25 * 0.75 / n)
    assert (np.abs(picks / n - 0.25) <= 4 * sigma).all()
