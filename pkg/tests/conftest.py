import math
import sys

import numpy as np
import pytest

from latticewkb.core import exponential_basis
from latticewkb.perturbation import PerturbationPair
from latticewkb.potentials import PotentialSpec

X1 = (3 - math.sqrt(5)) / 2  # root with x + 1/x = 3, i.e. V = 1


@pytest.fixture
def x1():
    return X1


@pytest.fixture
def rng():
    # fixed seed for every randomized fixture
    return np.random.default_rng(20240611)


def example61(n_lo=1, n_hi=401):
    """Geometric alternating perturbation of V = 1 with its exponential basis."""
    V0 = PotentialSpec.constant(1.0)
    V = PotentialSpec.perturbed(V0, PotentialSpec.geometric(1.0))
    return PerturbationPair(V, V0, exponential_basis(1.0, n_lo, n_hi))


@pytest.fixture
def ex61_pair():
    return example61()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
