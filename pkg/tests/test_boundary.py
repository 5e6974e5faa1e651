import numpy as np  # type: ignore
import pytest

from cmc.components.boundary import bounded_move, projected_normal, reflect_velocity, subspace_normal
from cmc.exceptions import DegenerateDirectionError
from cmc.model import NondeteriorationProbs, independent_chi
from cmc.sampler import affine_basis, constraint_system

POINT = affine_basis(NondeteriorationProbs([0.8]))


def _random_basis(rng):
    M = int(rng.integers(2, 4))
    p_plus = NondeteriorationProbs(rng.uniform(0.1, 0.9, size=M))
    return p_plus, affine_basis(p_plus)


def test_wall_trace_is_a_level_set_of_the_subspace_normal(rng):
    for _ in range(100):
        p_plus, basis = _random_basis(rng)
        i = int(rng.integers(basis.ambient_dimension))
        n_bar = subspace_normal(i, basis)
        length = np.linalg.norm(projected_normal(np.eye(basis.ambient_dimension)[i], basis))
        level = basis.origin @ n_bar - basis.origin[i] / length

        y = basis.origin + basis.embed(rng.standard_normal(basis.dimension))
        on_wall = y - y[i] / n_bar[i] * n_bar
        assert on_wall[i] == pytest.approx(0.0, abs=1e-10)
        assert on_wall @ n_bar == pytest.approx(level, abs=1e-10)
        A, b = constraint_system(p_plus)
        np.testing.assert_allclose(A @ on_wall, b, atol=1e-10)

        off_wall = on_wall + 0.1 * n_bar
        assert abs(off_wall @ n_bar - level) > 1e-3


def test_reflection_identities(rng):
    for _ in range(100):
        _, basis = _random_basis(rng)
        n_bar = subspace_normal(int(rng.integers(basis.ambient_dimension)), basis)
        v = basis.embed(rng.standard_normal(basis.dimension))
        w = reflect_velocity(v, n_bar)
        assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(v), abs=1e-12)
        assert w @ n_bar == pytest.approx(-(v @ n_bar), abs=1e-12)
        np.testing.assert_allclose(w - (w @ n_bar) * n_bar, v - (v @ n_bar) * n_bar, atol=1e-12)
        np.testing.assert_allclose(basis.normals @ w, 0.0, atol=1e-10)


def test_constant_coordinate_has_no_normal():
    with pytest.raises(DegenerateDirectionError):
        subspace_normal(0, POINT)


@pytest.mark.parametrize(
    "q, v, q_after, v_after",
    [
        (0.9, 0.4, 0.7, -0.4),
        (0.1, -0.3, 0.2, 0.3),
        (0.5, 2.3, 0.8, 2.3),
        (0.5, 0.2, 0.7, 0.2),
    ],
)
def test_q_walls(q, v, q_after, v_after):
    x, w = bounded_move(np.array([q, 0.2, 0.8]), np.array([v, 0.0, 0.0]), POINT)
    assert x[0] == pytest.approx(q_after, abs=1e-12)
    assert w[0] == pytest.approx(v_after)
    np.testing.assert_array_equal(x[1:], [0.2, 0.8])


def test_bounce_limit_stops_the_particle():
    x, w = bounded_move(np.array([0.5, 0.2, 0.8]), np.array([2.3, 0.0, 0.0]), POINT, max_bounces=1)
    assert x[0] == 1.0
    assert not w.any()


def test_chi_moves_stay_feasible(rng):
    for _ in range(50):
        p_plus, basis = _random_basis(rng)
        A, b = constraint_system(p_plus)
        x = np.concatenate([rng.random(2), independent_chi(p_plus).probs])
        v = np.concatenate([rng.standard_normal(2), basis.embed(rng.standard_normal(basis.dimension))])
        y, w = bounded_move(x, v, basis)
        assert y[:2].min() >= 0 and y[:2].max() <= 1
        assert y[2:].min() >= -1e-12
        np.testing.assert_allclose(A @ y[2:], b, atol=1e-9)
        if w.any():
            assert np.linalg.norm(w[2:]) == pytest.approx(np.linalg.norm(v[2:]), rel=1e-9)
            np.testing.assert_allclose(basis.normals @ w[2:], 0.0, atol=1e-9)
