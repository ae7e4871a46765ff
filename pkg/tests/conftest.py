import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import two_blobs, xor_quadrants  # noqa: E402


@pytest.fixture(scope="session")
def blobs_dataset():
    return two_blobs(n=200, center=4.0, spread=1.0, seed=42)


@pytest.fixture(scope="session")
def small_blobs_dataset():
    return two_blobs(n=60, center=6.0, spread=1.0, seed=3)


@pytest.fixture(scope="session")
def xor_dataset():
    return xor_quadrants(n=200, seed=42)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
