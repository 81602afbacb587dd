"""
Pytest configuration and fixtures.
"""

import numpy as np
import pytest

from codedpush.models import FadingParams, SystemConfig


def pytest_addoption(parser):
    """Add an option for the acceptance-size suites."""
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Run tests marked slow (acceptance-size grids and sweeps)",
    )


def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line(
        "markers",
        "slow: acceptance-size test (minutes); enable with --run-slow",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


@pytest.fixture
def example1_cfg():
    """Two users, two contents, each user caches one content's worth of bits."""
    return SystemConfig(
        num_contents=2,
        num_users=2,
        content_size=10_000,
        cache_contents=1.0,
        power=1e10,
        bandwidth=1e3,
        subcarriers=10,
    )


@pytest.fixture
def homogeneous_fading():
    """Every user at unit gain: no path loss and no fading."""
    return FadingParams(pathloss_exponent=0.0, rice_factor=1e9)


@pytest.fixture
def channel_cfg():
    """K=4 system with a budget that gives moderate SNRs in the default cell."""
    return SystemConfig(
        num_contents=4,
        num_users=4,
        content_size=100_000,
        cache_contents=1.2,
        power=1e10,
        bandwidth=1e3,
        subcarriers=16,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_instance(rng):
    """Factory for random instances: S in [100, 1000] bits, n^m in [0.5, 10] W/Hz."""
    from codedpush.allocator import OptInstance

    def make(n: int, power: float = 10.0, bandwidth: float = 1.0):
        return OptInstance(
            sizes=rng.uniform(100.0, 1000.0, size=n),
            worst_noise=rng.uniform(0.5, 10.0, size=n),
            power=power,
            bandwidth=bandwidth,
        )

    return make
