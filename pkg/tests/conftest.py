import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from horofix.seqspace import SeqVector

settings.register_profile("default", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def seqvectors(draw, max_len=8, tails=False, elements=finite):
    coeffs = draw(st.lists(elements, max_size=max_len))
    tail = draw(st.one_of(st.none(), elements)) if tails else None
    return SeqVector(coeffs, tail)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
