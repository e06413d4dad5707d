import numpy as np
import pytest

from schottkydim.cli import bundled
from schottkydim.schottky import SchottkyDescriptor


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def example():
    return SchottkyDescriptor.load(bundled("example_descriptor.json"))
