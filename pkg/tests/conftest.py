import math

import numpy as np
import pytest

from fiesta import DriveConfig

OMEGA_PHYS = 2 * math.pi * 2.288  # rad/ns
T1_NS = 2000.0


@pytest.fixture
def resonant():
    """Resonant drive in units where omega = 1."""
    return DriveConfig(1.0, 1.0, 0.0)


@pytest.fixture
def physical():
    """Resonant drive with the qubit splitting in rad/ns."""
    return DriveConfig(OMEGA_PHYS, OMEGA_PHYS, 0.0)


def random_state(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)
