import numpy as np
import pytest

from solitonflow import make_soliton


@pytest.fixture(scope="session")
def gaussian2():
    return make_soliton("gaussian", {"dim": 2})


@pytest.fixture(scope="session")
def gaussian3():
    return make_soliton("gaussian", {"dim": 3})


@pytest.fixture(scope="session")
def sphere():
    return make_soliton("sphere")


@pytest.fixture(scope="session")
def cylinder():
    return make_soliton("cylinder")


@pytest.fixture(scope="session")
def all_solitons(gaussian2, sphere, cylinder):
    return {"gaussian": gaussian2, "sphere": sphere, "cylinder": cylinder}


def sample_interior_points(soliton, rng, count):
    if soliton.name == "gaussian":
        return rng.normal(0.0, 1.5, size=(count, soliton.dim))
    theta = rng.uniform(0.2, np.pi - 0.2, size=count)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=count)
    if soliton.name == "sphere":
        return np.column_stack([theta, phi])
    return np.column_stack([theta, phi, rng.normal(0.0, 1.5, size=count)])
