import jax.numpy as jnp
import pytest

from pyfinsub.core.metric import ZermeloData, randers_from_zermelo, riemannian
from pyfinsub.core.verifier import load_scenario


@pytest.fixture(scope="session")
def euclid3():
    return riemannian(3)


@pytest.fixture(scope="session")
def randers2():
    """Euclidean plane with the constant wind (1/2, 0)."""
    return randers_from_zermelo(ZermeloData(2, lambda x: jnp.array([0.5, 0.0])))


@pytest.fixture(scope="session")
def fig1():
    return load_scenario("FIG1")


@pytest.fixture(scope="session")
def fig2():
    return load_scenario("FIG2")


@pytest.fixture(scope="session")
def euclid():
    return load_scenario("EUCLID")


@pytest.fixture(scope="session")
def sphere():
    return load_scenario("SPHERE")


@pytest.fixture(scope="session")
def xy():
    return load_scenario("XY")


@pytest.fixture(scope="session")
def tilted():
    return load_scenario("TILTED")
