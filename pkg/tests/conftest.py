import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("condmap", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "condmap"))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([2024, 11])))
