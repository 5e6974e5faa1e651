import dataclasses

import numpy as np  # type: ignore
import pytest

from cmc.exceptions import InputError
from cmc.likelihood import log_likelihood
from cmc.model import nondeterioration_probs
from cmc.panel import count_tensor
from cmc.sampler import affine_basis
from cmc.setup_run import load_engine
from cmc.simulator import synth_panel
from cmc.swarm import Particle, SwarmConfig, init_swarm, pso_step, run_pso, run_swarm, velocity_update

from instances import random_matrix, random_params

SMALL = SwarmConfig(swarm_size=12, max_iterations=10, n_functionals=4, k_directions=6, rng_seed=3)


@pytest.fixture
def instance():
    rng = np.random.default_rng(5)
    P = random_matrix(rng, 2)
    truth = random_params(rng, P, 2)
    panel = synth_panel(P, truth, 40, 5, 2, rng_seed=9)
    return P, count_tensor(panel, 2, 2), truth


def test_best_is_monotone_and_traced(instance):
    P, counts, _ = instance
    params, trace = run_pso(counts, P, SMALL)
    best = trace.best_values
    assert (np.diff(best) >= 0).all()
    assert [r.iteration for r in trace.records] == list(range(len(trace)))
    assert log_likelihood(counts, P, params) == pytest.approx(best[-1])
    assert all(r.variance >= 0 for r in trace.records)


def test_particles_stay_feasible(instance):
    P, counts, _ = instance
    swarm = init_swarm(SMALL, P, counts)
    p_plus = nondeterioration_probs(P)
    for _ in range(5):
        pso_step(swarm)
        for particle in swarm.particles:
            assert swarm.params_at(particle.position).is_feasible(p_plus)


def test_runs_are_reproducible(instance):
    P, counts, _ = instance
    a, trace_a = run_pso(counts, P, SMALL)
    b, trace_b = run_pso(counts, P, SMALL)
    np.testing.assert_array_equal(a.to_vector(), b.to_vector())
    assert trace_a.to_frame().equals(trace_b.to_frame())


def test_zero_weights_keep_the_swarm_still(instance):
    P, counts, _ = instance
    swarm = init_swarm(dataclasses.replace(SMALL, c0=0.0, c1=0.0, c2=0.0), P, counts)
    before = [p.position.copy() for p in swarm.particles]
    pso_step(swarm)
    for particle, position in zip(swarm.particles, before):
        np.testing.assert_array_equal(particle.position, position)


def test_velocity_update_by_hand():
    p_plus = nondeterioration_probs(random_matrix(np.random.default_rng(0), 2))
    basis = affine_basis(p_plus)
    chi = basis.origin
    particle = Particle(np.concatenate([[0.2, 0.4], chi]), value=-1.0)
    particle.velocity = np.concatenate([[0.1, -0.1], np.zeros(4)])
    direction = basis.embed(np.ones(1))
    particle.best_position = np.concatenate([[0.3, 0.4], chi + 0.01 * direction])
    global_best = np.concatenate([[0.2, 0.0], chi - 0.02 * direction])
    config = SwarmConfig()

    v = velocity_update(particle, global_best, config, np.random.default_rng(1), basis)

    draws = np.random.default_rng(1)
    r1, r2 = draws.random(2), draws.random(2)
    s1, s2 = draws.random(1), draws.random(1)
    q_expected = 0.5 * np.array([0.1, -0.1]) + 1.5 * r1 * [0.1, 0.0] + 1.5 * r2 * [0.0, -0.4]
    chi_expected = (1.5 * s1[0] * 0.01 - 1.5 * s2[0] * 0.02) * direction
    np.testing.assert_allclose(v[:2], q_expected, atol=1e-13)
    np.testing.assert_allclose(v[2:], chi_expected, atol=1e-13)
    np.testing.assert_allclose(basis.normals @ v[2:], 0.0, atol=1e-12)


def test_stops_when_values_agree(instance):
    P, counts, _ = instance
    swarm = run_swarm(init_swarm(dataclasses.replace(SMALL, var_threshold=1e300), P, counts))
    assert swarm.iteration == 0
    assert len(swarm.trace) == 1


def test_checkpoint_resumes_identically(instance, tmp_path):
    P, counts, _ = instance
    straight = run_swarm(init_swarm(SMALL, P, counts))

    first = run_swarm(init_swarm(dataclasses.replace(SMALL, max_iterations=4), P, counts))
    first.save_as(tmp_path / "swarm.xz")
    resumed = load_engine(tmp_path / "swarm.xz")
    resumed.config = dataclasses.replace(resumed.config, max_iterations=SMALL.max_iterations)
    run_swarm(resumed)

    np.testing.assert_array_equal(resumed.global_best_position, straight.global_best_position)
    assert resumed.trace.to_frame().equals(straight.trace.to_frame())


@pytest.mark.parametrize("field, value", [("swarm_size", 1), ("c1", -1.0), ("var_threshold", 0.0)])
def test_invalid_config(field, value):
    with pytest.raises(InputError):
        dataclasses.replace(SwarmConfig(), **{field: value})


@pytest.mark.slow
def test_recovers_known_parameters(recovery_instance):
    P, counts, truth = recovery_instance
    target = log_likelihood(counts, P, truth)
    _, trace = run_pso(counts, P, SwarmConfig(rng_seed=1))
    assert trace.last.best >= target - 0.01 * abs(target)
