import numpy as np
import pytest

from torapot import GradientBody, build_context


@pytest.fixture(scope="session")
def ctx1():
    """1-D workhorse context: 201 nodes on [-1,1], body [-2,2]."""
    return build_context(1, (-1, 1), 201)


@pytest.fixture(scope="session")
def ctx1_narrow():
    """1-D context whose body equals the reference slope range."""
    return build_context(1, (-1, 1), 201, body=GradientBody(dim=1, interval=(-1.0, 1.0)))


@pytest.fixture(scope="session")
def ctx2():
    """2-D workhorse context: 33^2 nodes, body [-2,2]^2."""
    return build_context(2, (-1, 1), 33)


@pytest.fixture(scope="session")
def ctx2_unit():
    """2-D context at criterion resolution with the unit body."""
    return build_context(2, (-1, 1), 65, body=GradientBody.box(2, 1.0))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
