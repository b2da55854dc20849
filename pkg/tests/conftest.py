import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqhmm.dataset import load_bundled_corpus


@pytest.fixture(scope="session")
def corpus():
    return load_bundled_corpus()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
