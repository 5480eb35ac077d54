"""Shared fixtures and hypothesis strategies."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cheshire.qsystem import DIM, PhotonKet

settings.register_profile(
    "pkg",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pkg")


@pytest.fixture
def example_prep() -> PhotonKet:
    """(|L,+> + |R,+> + |R,->)/sqrt(3)."""
    return PhotonKet(np.array([1.0, 0.0, 1.0, 1.0]) / np.sqrt(3.0))


@pytest.fixture
def example_post() -> PhotonKet:
    """(|L,+> + |R,+> - |R,->)/sqrt(3)."""
    return PhotonKet(np.array([1.0, 0.0, 1.0, -1.0]) / np.sqrt(3.0))


@pytest.fixture
def cheshire_prep() -> PhotonKet:
    """Preparation giving weak values L_w = Sigma_w = 1 with the paired post."""
    return PhotonKet(np.array([np.sqrt(0.5), 0.0, 0.5, 0.5]))


@pytest.fixture
def cheshire_post() -> PhotonKet:
    return PhotonKet(np.array([np.sqrt(0.5), 0.0, 0.5, -0.5]))


def complex_amplitudes():
    """Strategy: finite complex 4-vectors with non-negligible norm."""
    part = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
    vec = st.lists(st.tuples(part, part), min_size=DIM, max_size=DIM)
    return vec.map(lambda v: np.array([re + 1j * im for re, im in v])).filter(
        lambda a: np.linalg.norm(a) > 1e-3
    )


def unit_kets():
    """Strategy: normalized PhotonKet values."""
    return complex_amplitudes().map(PhotonKet.normalized)
