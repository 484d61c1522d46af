import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--full",
        action="store_true",
        default=False,
        help="run the full paper-scale computations (tens of minutes)",
    )


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "full: long paper-scale runs, enabled with --full"
    )
    config.addinivalue_line(
        "markers", "slow: minutes-tier tests that always run"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full"):
        return
    skip = pytest.mark.skip(reason="needs --full")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
