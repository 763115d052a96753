import numpy as np
import pytest

from fields import Disk, build_grid


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale end-to-end tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def disk_grid():
    return build_grid(Disk(radius=1.0), 64)


@pytest.fixture(scope="session")
def fine_disk_grid():
    return build_grid(Disk(radius=1.0), 128)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
