import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def phantom_dataset(tmp_path_factory):
    """A small on-disk phantom dataset shared by the I/O and CLI tests."""
    from kneegrade.phantoms import make_phantom_dataset
    out = tmp_path_factory.mktemp("phantoms")
    manifest = make_phantom_dataset(out, n=40, seed=7)
    return manifest
