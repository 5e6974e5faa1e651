"""Random small instances shared by the tests."""
import numpy as np  # type: ignore

from cmc.model import (
    ChiDistribution,
    ModelParams,
    QMatrix,
    independent_chi,
    nondeterioration_probs,
    validate_transition_matrix,
)
from cmc.panel import RatingPanel, new_observations
from cmc.sampler import lp_vertex


def random_matrix(rng, M):
    """Transition matrix with strictly positive non-default rows."""
    body = rng.dirichlet(np.ones(M + 1), size=M)
    return validate_transition_matrix(np.vstack([body, np.eye(M + 1)[-1]]))


def random_chi(rng, p_plus):
    """Mixture of the product law and a random vertex, so always feasible."""
    vertex = lp_vertex(p_plus, rng.standard_normal(2 ** p_plus.n_classes))
    w = rng.random()
    return ChiDistribution(w * vertex.probs + (1 - w) * independent_chi(p_plus).probs)


def random_params(rng, P, S):
    q = QMatrix(rng.uniform(0.05, 0.95, size=(P.n_classes, S)))
    return ModelParams(q, random_chi(rng, nondeterioration_probs(P)))


def random_panel(rng, M, S, N, T, skip=0.2):
    """N companies over periods 1..T; defaults absorb and some periods go unobserved."""
    records = []
    for n in range(N):
        sector = int(rng.integers(1, S + 1))
        rating = int(rng.integers(1, M + 1))
        for t in range(1, T + 1):
            if t > 1 and rating <= M:
                rating = int(rng.integers(1, M + 2))
            if rng.random() >= skip:
                records.append((f"c{n}", sector, t, rating))
    return RatingPanel(new_observations(records), default_class=M + 1)
