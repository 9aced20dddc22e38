"""Tests for the dicebias package."""

from collections.abc import Callable
from pathlib import Path

import numpy as np
from numpy.typing import NDArray


def load_fixtures(filename: str) -> str:
    """Load a fixture."""
    path = Path(__file__).parent / "fixtures" / filename
    return path.read_text()


def central_difference(
    func: Callable[[NDArray[np.float64]], float],
    x: NDArray[np.float64],
    step: float = 1e-6,
) -> NDArray[np.float64]:
    """Return the central finite-difference gradient of func at x."""
    grad = np.empty_like(x)
    for k in range(x.size):
        shift = np.zeros_like(x)
        shift[k] = step
        grad[k] = (func(x + shift) - func(x - shift)) / (2.0 * step)
    return grad
