import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bicm4d import constellation as cons

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def pm_qpsk():
    return cons.builtin("pm-qpsk")


@pytest.fixture(scope="session")
def pm16():
    return cons.builtin("pm-16qam")


@pytest.fixture(scope="session")
def qpsk():
    return cons.builtin("qpsk")


@pytest.fixture(scope="session")
def c4_16():
    return cons.builtin("c4_16")


@pytest.fixture(scope="session")
def so_pm_qpsk():
    return cons.builtin("so-pm-qpsk")


@pytest.fixture(scope="session")
def c4_256():
    return cons.builtin("c4_256")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
