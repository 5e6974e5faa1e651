"""Seeded generation of feasible starting points.

Tendency distributions are spread over the polytope of laws on {0,1}^M with
prescribed marginals: random linear functionals give vertices, their mean
gives a central point, random directions through it inside the constraint
subspace give segments, and points are placed on the segments in proportion
to their lengths.
"""
from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

import numpy as np  # type: ignore

from cmc.exceptions import DegenerateDirectionError, InfeasibleError, InputError, ModelError
from cmc.method import Sense
from cmc.model import (
    EQ_TOL,
    ChiDistribution,
    NondeteriorationProbs,
    QMatrix,
    bit_table,
    independent_chi,
)
from cmc.simplex import solve_standard_form

import utils

log = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
VERTEX_DEDUP_TOL = 1e-9
# Direction components below this are treated as zero when locating segment ends.
DIRECTION_EPS = 1e-14


def constraint_system(p_plus: NondeteriorationProbs) -> Tuple[np.ndarray, np.ndarray]:
    """Equality constraints ``A x = b``: normalisation first, then the M marginals."""
    bits = bit_table(p_plus.n_classes)
    A = np.vstack([np.ones(len(bits)), bits.T.astype(float)])
    b = np.concatenate([[1.0], p_plus.p_plus])
    return A, b


class AffineBasis:
    """A feasible origin plus an orthonormal basis of the constraint subspace's linear part.

    ``basis`` holds one basis vector per row, ``normals`` one constraint normal per row.
    """

    def __init__(self, origin: np.ndarray, basis: np.ndarray, normals: np.ndarray):
        self.origin = origin
        self.basis = basis
        self.normals = normals

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dimension(self) -> int:
        return self.basis.shape[1]

    def coordinates(self, v: np.ndarray) -> np.ndarray:
        return self.basis @ v

    def embed(self, z: np.ndarray) -> np.ndarray:
        return z @ self.basis

    def project(self, v: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the linear part of the subspace."""
        return self.embed(self.coordinates(v))


def _orthonormal_rows(vectors: np.ndarray) -> np.ndarray:
    rows: List[np.ndarray] = []
    for v in vectors:
        w = v.astype(float).copy()
        for _ in range(2):
            for r in rows:
                w -= (r @ w) * r
        norm = np.linalg.norm(w)
        if norm > ORTHO_TOL:
            rows.append(w / norm)
    return np.array(rows).reshape(len(rows), vectors.shape[1])


def affine_basis(p_plus: NondeteriorationProbs) -> AffineBasis:
    """Orthonormal complement of the constraint normals via pivoted Gram-Schmidt."""
    A, b = constraint_system(p_plus)
    size = A.shape[1]
    span = _orthonormal_rows(A)
    if len(span) != len(A):
        raise ModelError("constraint normals are linearly dependent")

    residual = np.eye(size) - span.T @ span  # column j: unit vector j minus its span part
    basis: List[np.ndarray] = []
    for _ in range(size - len(span)):
        norms = np.linalg.norm(residual, axis=0)
        j = int(np.argmax(norms))
        if norms[j] <= ORTHO_TOL:
            break
        e = residual[:, j] / norms[j]
        for _ in range(2):
            e -= span.T @ (span @ e)
            for f in basis:
                e -= (f @ e) * f
        e /= np.linalg.norm(e)
        basis.append(e)
        residual -= np.outer(e, e @ residual)

    expected = size - (p_plus.n_classes + 1)
    if len(basis) != expected:
        raise ModelError(f"basis has dimension {len(basis)}, expected {expected}")

    origin = independent_chi(p_plus).probs.copy()
    if np.abs(A @ origin - b).max() > EQ_TOL:
        raise InfeasibleError("no feasible tendency distribution for these marginals")
    return AffineBasis(origin, np.array(basis).reshape(expected, size), A)


def lp_vertex(p_plus: NondeteriorationProbs, objective, sense: Sense = Sense.MAX) -> ChiDistribution:
    A, b = constraint_system(p_plus)
    return ChiDistribution(solve_standard_form(objective, A, b, sense))


def vertex_set(p_plus: NondeteriorationProbs, n_functionals: int, rng_seed: int) -> List[ChiDistribution]:
    """Vertices optimising random Gaussian functionals in both directions, deduplicated."""
    if n_functionals < 1:
        raise InputError(f"need at least one functional, got {n_functionals}")
    rng = np.random.default_rng(rng_seed)
    vertices: List[ChiDistribution] = []
    for _ in range(n_functionals):
        psi = rng.standard_normal(2 ** p_plus.n_classes)
        for sense in (Sense.MAX, Sense.MIN):
            v = lp_vertex(p_plus, psi, sense)
            if not any(np.abs(v.probs - w.probs).max() <= VERTEX_DEDUP_TOL for w in vertices):
                vertices.append(v)
    log.info("found %d distinct vertices from %d functionals", len(vertices), n_functionals)
    return vertices


def centroid(vertices: List[ChiDistribution]) -> ChiDistribution:
    if not vertices:
        raise InputError("centroid of an empty vertex set")
    return ChiDistribution(np.mean([v.probs for v in vertices], axis=0))


def sample_directions(basis: AffineBasis, K: int, rng_seed: int) -> List[np.ndarray]:
    """K uniformly distributed unit directions inside the constraint subspace."""
    if K < 1:
        raise InputError(f"need at least one direction, got {K}")
    if basis.dimension == 0:
        raise DegenerateDirectionError("the feasible set is a single point")
    rng = np.random.default_rng(rng_seed)
    z = rng.standard_normal((K, basis.dimension))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    directions = basis.embed(z)
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return list(directions)


def segment(c: ChiDistribution, d: np.ndarray) -> Tuple[float, float]:
    """Largest interval [lambda-, lambda+] keeping c + lambda d nonnegative."""
    d = np.asarray(d, dtype=float)
    if np.linalg.norm(d) < DIRECTION_EPS:
        raise DegenerateDirectionError("direction is numerically zero")
    x = c.probs
    falling = d < -DIRECTION_EPS
    rising = d > DIRECTION_EPS
    if not falling.any() or not rising.any():
        raise DegenerateDirectionError("direction leaves the constraint subspace")
    lam_plus = float(np.min(-x[falling] / d[falling]))
    lam_minus = float(np.max(-x[rising] / d[rising]))
    return lam_minus, max(lam_plus, lam_minus)


class FeasibleSampleSet:
    """Sampled tendency distributions and Q matrices.

    ``provenance[i]`` is ``(direction index, lambda)`` of chi sample i; direction
    index -1 marks the central point of a zero-dimensional feasible set.
    """

    def __init__(
        self,
        chi_samples: List[ChiDistribution],
        q_samples: Optional[List[QMatrix]] = None,
        provenance: Optional[List[Tuple[int, float]]] = None,
    ):
        self.chi_samples = chi_samples
        self.q_samples = q_samples or []
        self.provenance = provenance or [(-1, 0.0)] * len(chi_samples)
        self.vertices: List[ChiDistribution] = []
        self.n_directions = 0

    def __len__(self) -> int:
        return len(self.chi_samples)

    def pairs(self, count: int) -> List[Tuple[QMatrix, ChiDistribution]]:
        """``count`` (Q, chi) pairs; chi samples are thinned evenly across directions."""
        if len(self.chi_samples) < 1 or len(self.q_samples) < count:
            raise ModelError(f"sample set cannot provide {count} starting points")
        picks = np.linspace(0, len(self.chi_samples) - 1, count).round().astype(int)
        return [(self.q_samples[i], self.chi_samples[j]) for i, j in enumerate(picks)]


def sample_chi_points(c: ChiDistribution, directions: List[np.ndarray], L: int, rng_seed: int) -> FeasibleSampleSet:
    """About L points spread over the segments through c, in proportion to segment length."""
    if not directions:
        raise InputError("no directions to sample along")
    rng = np.random.default_rng(rng_seed)
    bounds = [segment(c, d) for d in directions]
    lengths = np.array([hi - lo for lo, hi in bounds])
    total = lengths.sum()

    chi_samples: List[ChiDistribution] = []
    provenance: List[Tuple[int, float]] = []
    for index, (d, (lo, hi), length) in enumerate(zip(directions, bounds, lengths)):
        if total <= 0 or length <= 0:
            lambdas = np.zeros(1)
        else:
            # the tolerance stops rounding noise from adding a point
            count = max(1, math.ceil(length / total * L - 1e-9))
            lambdas = rng.uniform(lo, hi, size=count)
        for lam in lambdas:
            chi_samples.append(ChiDistribution(c.probs + lam * d))
            provenance.append((index, float(lam)))
    return FeasibleSampleSet(chi_samples, provenance=provenance)


def sample_q(n_classes: int, n_sectors: int, count: int, rng_seed: int) -> List[QMatrix]:
    rng = np.random.default_rng(rng_seed)
    return [QMatrix(rng.random((n_classes, n_sectors))) for _ in range(count)]


def feasible_start(
    p_plus: NondeteriorationProbs,
    n_sectors: int,
    count: int,
    master_seed: int,
    n_functionals: int = 20,
    K: int = 40,
    L: Optional[int] = None,
) -> FeasibleSampleSet:
    """Run the whole pipeline and attach ``count`` uniform Q samples."""
    L = count if L is None else L
    vertices = vertex_set(p_plus, n_functionals, utils.seed_for(master_seed, "functionals"))
    c = centroid(vertices)
    basis = affine_basis(p_plus)
    if basis.dimension == 0:
        samples = FeasibleSampleSet([c] * max(L, 1))
    else:
        directions = sample_directions(basis, K, utils.seed_for(master_seed, "directions"))
        samples = sample_chi_points(c, directions, L, utils.seed_for(master_seed, "positions"))
        samples.n_directions = K
    samples.vertices = vertices
    samples.q_samples = sample_q(p_plus.n_classes, n_sectors, count, utils.seed_for(master_seed, "q"))
    log.info(
        "sampled %d tendency distributions on %d directions, %d Q matrices",
        len(samples), samples.n_directions, len(samples.q_samples),
    )
    return samples
