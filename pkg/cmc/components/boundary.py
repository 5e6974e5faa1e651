"""Moves of a particle that bounce off the walls of the feasible region.

A position is the Q block (entries in [0, 1]) followed by the chi block,
which lives in the affine constraint subspace and must stay nonnegative.
Q walls reflect by a sign flip; chi walls reflect about the wall's normal
taken inside the subspace, so a reflected velocity never leaves it.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np  # type: ignore

from cmc.exceptions import DegenerateDirectionError
from cmc.sampler import AffineBasis

MAX_BOUNCES = 100
NORMAL_EPS = 1e-12
# Velocity components smaller than this cannot hit a wall.
VELOCITY_EPS = 1e-15


def projected_normal(normal: np.ndarray, basis: AffineBasis) -> np.ndarray:
    """Sum of <e_j, n> e_j over the basis: the normal of the wall's trace inside the subspace."""
    return basis.project(normal)


def subspace_normal(i: int, basis: AffineBasis) -> np.ndarray:
    """Unit normal, inside the subspace, of the wall ``x_i = const`` of chi coordinate i."""
    normal = np.zeros(basis.ambient_dimension)
    normal[i] = 1.0
    n_bar = projected_normal(normal, basis)
    length = np.linalg.norm(n_bar)
    if length < NORMAL_EPS:
        raise DegenerateDirectionError(f"coordinate {i} is constant on the feasible set")
    return n_bar / length


def reflect_velocity(v: np.ndarray, n_bar: np.ndarray) -> np.ndarray:
    """Flip the component along the unit normal, keep the orthogonal rest."""
    return v - 2.0 * (n_bar @ v) * n_bar


def _first_exit(x: np.ndarray, v: np.ndarray, remaining: float, n_q: int) -> Tuple[int, float]:
    """Index of the first wall crossed by ``x + remaining * v`` and the step fraction that reaches it."""
    target = x + remaining * v
    steps = np.full(len(x), np.inf)
    rising = np.zeros(len(x), dtype=bool)
    rising[:n_q] = (v[:n_q] > VELOCITY_EPS) & (target[:n_q] > 1.0)
    falling = (v < -VELOCITY_EPS) & (target < 0.0)
    steps[rising] = (1.0 - x[rising]) / v[rising]
    steps[falling] = -x[falling] / v[falling]
    i = int(np.argmin(steps))
    if not np.isfinite(steps[i]):
        return -1, remaining
    return i, min(max(steps[i], 0.0), remaining)


def bounded_move(
    position: np.ndarray,
    velocity: np.ndarray,
    basis: AffineBasis,
    max_bounces: int = MAX_BOUNCES,
) -> Tuple[np.ndarray, np.ndarray]:
    """Advance by one velocity step, reflecting at every wall met on the way.

    After ``max_bounces`` reflections the particle stops at its last feasible
    point with zero velocity.
    """
    x = np.array(position, dtype=float)
    v = np.array(velocity, dtype=float)
    n_q = len(x) - basis.ambient_dimension
    remaining = 1.0
    bounces = 0

    while True:
        i, step = _first_exit(x, v, remaining, n_q)
        if i < 0:
            x += remaining * v
            x[:n_q] = np.clip(x[:n_q], 0.0, 1.0)
            return x, v
        if bounces == max_bounces:
            break
        bounces += 1
        x += step * v
        x[i] = 1.0 if (i < n_q and v[i] > 0) else 0.0
        remaining -= step
        if i < n_q:
            v[i] = -v[i]
            continue
        try:
            n_bar = subspace_normal(i - n_q, basis)
        except DegenerateDirectionError:
            break
        v[n_q:] = reflect_velocity(v[n_q:], n_bar)

    return x, np.zeros_like(v)
