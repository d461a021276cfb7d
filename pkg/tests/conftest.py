import numpy as np
import pytest

from majorana_nh import Coupling3


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_complex_coupling(rng, lo=0.5, hi=2.2):
    mods = rng.uniform(lo, hi, 3)
    phases = rng.uniform(-np.pi, np.pi, 3)
    return Coupling3(*(mods * np.exp(1j * phases)))
