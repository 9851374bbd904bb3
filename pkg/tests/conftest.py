from fractions import Fraction

import pytest

from freeprob.freeness import MarginalSpec, build_free_state
from freeprob.ncpoly import state_from_sequence
from freeprob.spectral import semicircular_state


@pytest.fixture(scope="session")
def sc8():
    return semicircular_state(8)


@pytest.fixture(scope="session")
def free_pair(sc8):
    """Two free standard semicirculars as a marginal spec."""
    return MarginalSpec.singletons([sc8, sc8])


@pytest.fixture(scope="session")
def free_pair_state(free_pair):
    return build_free_state(free_pair, 6)


@pytest.fixture(scope="session")
def bernoulli():
    """+-1/2 with equal mass, exact moments to degree 8."""
    return state_from_sequence([Fraction(1, 2) ** j if j % 2 == 0 else 0 for j in range(9)])
