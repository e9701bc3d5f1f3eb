import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def masks(draw, max_side=32, min_side=1):
    h = draw(st.integers(min_side, max_side))
    w = draw(st.integers(min_side, max_side))
    return draw(arrays(np.bool_, (h, w)))


@st.composite
def mask_pairs(draw, max_side=32):
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    return draw(arrays(np.bool_, (h, w))), draw(arrays(np.bool_, (h, w)))


def random_blobby(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Random mask with some spatial structure (thresholded block noise)."""
    k = int(rng.integers(1, 6))
    coarse = rng.random((h // k + 1, w // k + 1)) < rng.uniform(0.2, 0.8)
    return np.kron(coarse, np.ones((k, k), dtype=bool))[:h, :w]


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
