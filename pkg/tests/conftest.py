import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(20240824)


def random_fraction(r, max_abs=6, max_den=6, nonzero=False):
    while True:
        q = Fraction(r.randint(-max_abs, max_abs), r.randint(1, max_den))
        if q != 0 or not nonzero:
            return q
