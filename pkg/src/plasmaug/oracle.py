"""Loop-based classical diamond-square, used as an independent test oracle.

This follows the textbook sparse-access formulation: per refinement level it
walks the new grid cell by cell, averaging diagonal neighbors for diamond
cells and in-bounds axis neighbors for square cells, blending each average
with noise as ``(1 - e) * avg + e * noise``.  It shares nothing with the
convolutional path except the documented noise-consumption order (see
:mod:`plasmaug.plasma`), which is what makes draw-for-draw comparison
possible.  It is far too slow for production sizes on purpose.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .plasma import InjectedNoise, PlasmaParams


def recursive_ds_oracle(params: PlasmaParams, injected_noise) -> np.ndarray:
    """Reference plasma generation from an explicit noise sequence."""
    # ndarray.take is numpy's element take, not a noise source; wrap plain
    # sequences explicitly.
    if isinstance(injected_noise, (np.ndarray, list, tuple)):
        noise = InjectedNoise(injected_noise)
    else:
        noise = injected_noise

    seed = noise.take(9)
    grid = [[float(seed[r * 3 + c]) for c in range(3)] for r in range(3)]
    e = 1.0
    for _ in range(params.steps):
        e *= params.roughness
        grid = _refine(grid, e, noise)
    return np.array(grid)


def _refine(grid, e, noise):
    oldh, oldw = len(grid), len(grid[0])
    h, w = 2 * oldh - 1, 2 * oldw - 1
    out = [[0.0] * w for _ in range(h)]

    jitter = noise.take(oldh * oldw)
    for r in range(oldh):
        for c in range(oldw):
            out[2 * r][2 * c] = grid[r][c] + e * float(jitter[r * oldw + c])

    dia = noise.take((oldh - 1) * (oldw - 1))
    k = 0
    for r in range(1, h, 2):
        for c in range(1, w, 2):
            total = 0.0
            count = 0
            for dr, dc in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w:
                    total += out[rr][cc]
                    count += 1
            out[r][c] = (1.0 - e) * (total / count) + e * float(dia[k])
            k += 1
    if k != len(dia):
        raise InvalidInputError("oracle diamond pass consumed a wrong draw count")

    n_square = h * w - oldh * oldw - (oldh - 1) * (oldw - 1)
    sq = noise.take(n_square)
    k = 0
    for r in range(h):
        for c in range(w):
            if (r + c) % 2 != 1:
                continue
            total = 0.0
            count = 0
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w:
                    total += out[rr][cc]
                    count += 1
            out[r][c] = (1.0 - e) * (total / count) + e * float(sq[k])
            k += 1
    return out
