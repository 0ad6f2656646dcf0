import numpy as np
import pytest

from logsift import EncoderWeights, HashingProvider
from logsift.synthetic import generate_corpus
from logsift.training import TrainingPair

PROVIDER_DIM = 512

# pass/fail lines recorded by the acceptance suite, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def provider():
    return HashingProvider(dim=PROVIDER_DIM)


@pytest.fixture(scope="session")
def identity_weights():
    return EncoderWeights.identity_init(PROVIDER_DIM)


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus(n_templates=10, logs_per_template=100, seed=7)


def random_unit(rng, dim):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def make_two_family_pairs(n=120, seed=0):
    """Separable pair dataset: both families share a dominant common
    component (so raw cosine similarity is uninformative) plus a small
    family-specific offset the encoder must learn to amplify."""
    rng = np.random.default_rng(seed)
    common = np.ones(9)
    common[8] = 0.05
    offset_a = np.zeros(9)
    offset_a[0] = 0.5
    offset_b = np.zeros(9)
    offset_b[4] = 0.5
    a = common + offset_a + 0.05 * rng.normal(size=(n, 9))
    b = common + offset_b + 0.05 * rng.normal(size=(n, 9))
    pairs = []
    for i in range(0, n, 2):
        pairs.append(TrainingPair(a[i], a[i + 1], 1.0))
        pairs.append(TrainingPair(b[i], b[i + 1], 1.0))
    for i in range(n):
        pairs.append(TrainingPair(a[i], b[i], 0.0))
    return pairs
