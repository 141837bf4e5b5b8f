import numpy as np
import pytest

from forestgen import templates


@pytest.fixture(scope="session")
def tiny_library():
    """Small template set shared across tests; meshes are treated as
    immutable by convention."""
    return templates.default_library("tiny")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
