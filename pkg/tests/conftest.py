import numpy as np
import pytest

from isirate.channel import ChannelResponse


def random_unit_channel(rng: np.random.Generator, max_len: int = 6) -> ChannelResponse:
    """Random unit-energy FIR channel with 1..max_len taps."""
    length = int(rng.integers(1, max_len + 1))
    taps = rng.standard_normal(length)
    while not taps.any():
        taps = rng.standard_normal(length)
    return ChannelResponse(tuple(taps / np.sqrt(taps @ taps)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
