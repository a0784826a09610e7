import numpy as np
import pytest

from optistack.materials import default_catalog
from optistack.tasks import builtin_task


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def task1():
    return builtin_task("task1")


@pytest.fixture(scope="session")
def task2():
    return builtin_task("task2")


@pytest.fixture(scope="session")
def task3():
    return builtin_task("task3")


@pytest.fixture
def rng():
    return np.random.default_rng(42)
