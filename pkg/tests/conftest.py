"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from teleportsim.backend import warmup
from teleportsim.operators import ChannelParams, InputQubit


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(1234)))


@pytest.fixture
def channel():
    """The work-horse channel: |b|^2 = 0.25, real amplitudes."""
    return ChannelParams.from_b_squared(0.25)


@pytest.fixture
def oracle_input():
    """The input used by the frozen branch tables: 0.6|0> + 0.8|1>."""
    return InputQubit(0.6, 0.8)


@pytest.fixture(scope="session")
def compiled_backends():
    """Compile (or load from cache) every trial kernel before timing anything."""
    warmup()
    return True
