from __future__ import annotations

import numpy as np
import pytest


def total_plasma_draws(steps: int) -> int:
    """Number of noise scalars one full generation consumes from a 3x3 seed."""
    n = 9
    h = w = 3
    for _ in range(steps):
        nh, nw = 2 * h - 1, 2 * w - 1
        n += h * w                     # seed-cell jitter
        n += (h - 1) * (w - 1)         # diamond cells
        n += nh * nw - h * w - (h - 1) * (w - 1)  # square cells
        h, w = nh, nw
    return n


def asymmetric_card(width: int, height: int, channels: int = 1) -> np.ndarray:
    """Test image with no flip symmetry: a bright corner plus smooth ramps."""
    yy, xx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    base = (0.15 + 0.5 * xx / max(width - 1, 1)
            + 0.25 * yy / max(height - 1, 1))
    base[: max(height // 4, 1), : max(width // 4, 1)] = 1.0
    base = np.clip(base, 0.0, 1.0)
    return np.stack([base] * channels)


@pytest.fixture
def card():
    return asymmetric_card(31, 23)
