import numpy as np  # type: ignore
import pytest

from cmc.model import ChiDistribution, ModelParams, QMatrix, nondeterioration_probs, validate_transition_matrix
from cmc.panel import count_tensor
from cmc.reference import EXAMPLE_MATRIX
from cmc.simulator import synth_panel

from instances import random_chi

RECOVERY_MATRIX = [
    [0.80, 0.12, 0.05, 0.03],
    [0.10, 0.70, 0.12, 0.08],
    [0.05, 0.15, 0.60, 0.20],
    [0.00, 0.00, 0.00, 1.00],
]


@pytest.fixture
def example_matrix():
    return validate_transition_matrix(EXAMPLE_MATRIX)


@pytest.fixture
def example_p_plus(example_matrix):
    return nondeterioration_probs(example_matrix)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def recovery_instance():
    """500 companies over 10 periods drawn from known parameters, 3 classes and 2 sectors."""
    P = validate_transition_matrix(RECOVERY_MATRIX)
    chi = random_chi(np.random.default_rng(17), nondeterioration_probs(P))
    truth = ModelParams(QMatrix([[0.3, 0.6], [0.5, 0.2], [0.4, 0.7]]), ChiDistribution(chi.probs))
    panel = synth_panel(P, truth, 500, 10, 2, rng_seed=23)
    return P, count_tensor(panel, 3, 2), truth
