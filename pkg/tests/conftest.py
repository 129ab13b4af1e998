import pathlib
import sys

import numpy as np
import pytest

try:
    import stbeam  # noqa: F401
except ImportError:  # running from a checkout without installation
    sys.path.insert(0, str(pathlib.Path(__file__).parents[1] / "src"))

from stbeam.channel import ArrayGeometry

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def geom64():
    """8 x 8 half-wavelength array at the default carrier."""
    return ArrayGeometry.square(8, 1.9925e9)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
