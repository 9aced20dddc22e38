"""Fixtures for the dicebias tests."""

import numpy as np
import pytest

from dicebias import RegionModel, canonical_abc


@pytest.fixture(name="rng")
def random_generator() -> np.random.Generator:
    """Return a seeded random generator."""
    return np.random.default_rng(20240917)


@pytest.fixture(name="single_region_model")
def single_uncertain_region() -> RegionModel:
    """Return the canonical model with one β region at μ = 1, p_β = 0.5."""
    return canonical_abc(1.0, 0.5, 1)
