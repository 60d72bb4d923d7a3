"""Plasma-fractal generation via a convolutional diamond-square cascade.

One refinement level doubles the grid: the input cells are scattered onto the
even lattice of a (2w-1) x (2h-1) grid with a jitter proportional to the
noise weight ``e``, diagonal-neighbor averages fill the (odd, odd) cells
(diamond step), and axis-neighbor averages fill the remaining cells (square
step).  Both averaging steps are 3x3 convolutions; border cells are handled
by normalized convolution, dividing by the convolution of the filled-cell
indicator so that edge cells average only in-bounds, filled neighbors.  Every
new cell blends ``(1 - e) * average + e * noise``, and ``e`` decays by the
roughness factor once per level, which is what moves the spectrum from
low-frequency clouds (low roughness) to high-frequency grain (high roughness).

Noise consumption order is part of the contract so that independent
implementations can be compared draw-for-draw.  A full generation consumes,
in order: the initial 3x3 seed (row-major), then per level the seed-cell
jitter draws (row-major over the input cells), the diamond draws (row-major
over new (odd, odd) cells), and the square draws (row-major over new cells
with odd coordinate sum).  Anything with a ``take(n)`` method can serve as
the noise source; :class:`InjectedNoise` replays a fixed sequence.
"""

from __future__ import annotations

import functools
import inspect
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .field import conv3x3
from .rng import RandSource

DIAMOND_FILTER = np.array([[0.25, 0.0, 0.25],
                           [0.0, 0.0, 0.0],
                           [0.25, 0.0, 0.25]])
SQUARE_FILTER = np.array([[0.0, 0.25, 0.0],
                          [0.25, 0.0, 0.25],
                          [0.0, 0.25, 0.0]])

# Stream id for the dedicated plasma noise lane of a seed.
_PLASMA_STREAM = 0x706C61736D61  # "plasma"


@dataclass(frozen=True)
class PlasmaParams:
    """Generation parameters: grid doublings, noise decay factor, seed."""

    steps: int
    roughness: float
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidInputError(f"steps must be >= 1, got {self.steps}")
        if not (0.0 < self.roughness <= 1.0) or not math.isfinite(self.roughness):
            raise InvalidInputError(
                f"roughness must be in (0, 1], got {self.roughness}")

    @property
    def side(self) -> int:
        """Output side length when grown from a 3x3 seed."""
        return 2 ** (self.steps + 1) + 1


class InjectedNoise:
    """Noise source replaying a fixed scalar sequence (shared-sequence tests)."""

    def __init__(self, values):
        self._values = np.asarray(values, dtype=np.float64).reshape(-1)
        self._pos = 0

    def take(self, n: int, out: np.ndarray = None) -> np.ndarray:
        if self._pos + n > len(self._values):
            raise InvalidInputError(
                f"injected noise exhausted: need {n} more scalars after "
                f"{self._pos} of {len(self._values)}")
        chunk = self._values[self._pos:self._pos + n]
        self._pos += n
        if out is None:
            return chunk.copy()
        out = out.reshape(-1)[:n]
        np.copyto(out, chunk)
        return out


# Staging buffers for noise and sublattice assembly never escape one_ds, so
# they are recycled through a per-thread, size-keyed pool.  Fresh large
# allocations cost an order of magnitude more than reuse here (page faults
# dominate), which would otherwise distort benchmark scaling.
_POOL_MIN_BYTES = 1 << 20
_POOL_MAX_TOTAL = 1 << 28
_pool_store = threading.local()


def _pool_take(n: int) -> np.ndarray:
    if n * 8 < _POOL_MIN_BYTES:
        return np.empty(n, dtype=np.float64)
    pool = getattr(_pool_store, "arrays", None)
    if pool is None:
        pool = {}
        _pool_store.arrays = pool
    buf = pool.pop(n, None)
    if buf is None:
        buf = np.empty(n, dtype=np.float64)
    return buf


def _pool_give(*arrays: np.ndarray) -> None:
    # Callers hand back the flat originals from _pool_take/_take_staged and
    # must not retain views into them.
    pool = getattr(_pool_store, "arrays", None)
    if pool is None:
        pool = {}
        _pool_store.arrays = pool
    for arr in arrays:
        if arr.nbytes >= _POOL_MIN_BYTES:
            pool[arr.size] = arr
    while sum(a.nbytes for a in pool.values()) > _POOL_MAX_TOTAL:
        pool.pop(next(iter(pool)))


def _take_staged(noise, n: int) -> np.ndarray:
    buf = _pool_take(n)
    # Third-party noise sources may lack the out parameter; never call take
    # twice, since it advances the source.
    try:
        supports_out = "out" in inspect.signature(noise.take).parameters
    except (TypeError, ValueError):
        supports_out = False
    if supports_out:
        return noise.take(n, out=buf)
    np.copyto(buf, noise.take(n))
    return buf


def _validate_seed_grid(plasma: np.ndarray) -> np.ndarray:
    plasma = np.asarray(plasma, dtype=np.float64)
    if plasma.ndim != 2:
        raise InvalidInputError(f"plasma grid must be 2-D, got {plasma.ndim}-D")
    h, w = plasma.shape
    if h < 3 or w < 3 or h % 2 == 0 or w % 2 == 0:
        raise InvalidInputError(
            f"plasma grid needs odd dimensions >= 3, got {w}x{h}")
    return plasma


def _square_cell_mask(h: int, w: int) -> np.ndarray:
    # Cells with odd coordinate sum: (odd, even) and (even, odd).
    return (np.add.outer(np.arange(h) % 2, np.arange(w) % 2) == 1)


# The normalized-convolution denominators depend only on the grid size, so
# refinement levels of a common size share them.  Kept below a pixel budget
# so pathological side lengths cannot pin gigabytes.
_DEN_CACHE_PIXEL_LIMIT = 2**23


def _denominator_guards_raw(oldh: int, oldw: int) -> tuple[np.ndarray, np.ndarray]:
    h, w = 2 * oldh - 1, 2 * oldw - 1
    filled = np.zeros((h, w))
    filled[::2, ::2] = 1.0
    d_den = conv3x3(filled, DIAMOND_FILTER)
    filled[1::2, 1::2] = 1.0
    s_den = conv3x3(filled, SQUARE_FILTER)
    d_guard = np.where(d_den > 0.0, d_den, 1.0)
    s_guard = np.where(s_den > 0.0, s_den, 1.0)
    d_guard.setflags(write=False)
    s_guard.setflags(write=False)
    return d_guard, s_guard


_denominator_guards_cached = functools.lru_cache(maxsize=16)(_denominator_guards_raw)


def _denominator_guards(oldh: int, oldw: int) -> tuple[np.ndarray, np.ndarray]:
    if (2 * oldh - 1) * (2 * oldw - 1) <= _DEN_CACHE_PIXEL_LIMIT:
        return _denominator_guards_cached(oldh, oldw)
    return _denominator_guards_raw(oldh, oldw)


# Filter taps in (row, col) offsets into a padded array; order matches the
# generic conv3x3 accumulation order.
_DIAMOND_TAPS = ((0, 0), (0, 2), (2, 0), (2, 2))
_SQUARE_TAPS = ((0, 1), (1, 0), (1, 2), (2, 1))


def _band_height(w: int) -> int:
    # Keep a band's conv buffer around 4 MB so it stays cache-resident at
    # any grid width; kept even so every band starts on the seed lattice.
    rows = max(32, (1 << 22) // (8 * max(w, 1)))
    return rows - rows % 2


def _conv_band(padded: np.ndarray, taps, a: int, b: int, w: int) -> np.ndarray:
    """Rows [a, b) of the 0.25-weighted tap convolution over the padded grid."""
    (i0, j0) = taps[0]
    acc = padded[a + i0:b + i0, j0:j0 + w].copy()
    for i, j in taps[1:]:
        acc += padded[a + i:b + i, j:j + w]
    acc *= 0.25
    return acc


def one_ds(plasma: np.ndarray, e: float, noise, workers: int = 1) -> np.ndarray:
    """One diamond-square refinement level, grid (h, w) -> (2h-1, 2w-1).

    Input cells land on the even lattice jittered by ``e``-weighted noise;
    (odd, odd) cells get ``(1-e) * diamond-average + e * noise``; the rest get
    ``(1-e) * square-average + e * noise``.  Border averages cover in-bounds
    neighbors only (normalized convolution).  New-cell membership is decided
    by index parity, never by cell values, so the level stays affine in the
    input grid for fixed noise.

    The two convolution passes run over cache-sized row bands of one shared
    zero-padded canvas; banding (and ``workers`` > 1, which fans bands out to
    threads) never changes the arithmetic performed per cell, so results are
    bit-identical for any band size or worker count.
    """
    plasma = _validate_seed_grid(plasma)
    if not (0.0 <= e <= 1.0) or not math.isfinite(e):
        raise InvalidInputError(f"noise weight e must be in [0, 1], got {e}")
    oldh, oldw = plasma.shape
    h, w = 2 * oldh - 1, 2 * oldw - 1

    stage_jitter = _take_staged(noise, oldh * oldw)
    jitter = stage_jitter.reshape(oldh, oldw)
    stage_dia = _take_staged(noise, (oldh - 1) * (oldw - 1))
    dia_noise = stage_dia.reshape(oldh - 1, oldw - 1)
    n_square = h * w - oldh * oldw - (oldh - 1) * (oldw - 1)
    stage_sq = _take_staged(noise, n_square)
    # Row-major square draws alternate between the (even row, odd col) and
    # (odd row, even col) sublattices; consecutive row pairs hold exactly
    # w draws, so reshapes split the flat sequence without any scatter.
    pair_rows = oldh - 1
    evens = oldw - 1
    pairs = stage_sq[:pair_rows * w].reshape(pair_rows, w)
    stage_a = _pool_take((oldh - 1) * oldw)
    noise_a = stage_a.reshape(oldh - 1, oldw)
    np.copyto(noise_a, pairs[:, evens:])
    stage_b = _pool_take(oldh * (oldw - 1))
    noise_b = stage_b.reshape(oldh, oldw - 1)
    np.copyto(noise_b[:pair_rows], pairs[:, :evens])
    noise_b[pair_rows] = stage_sq[pair_rows * w:]
    d_guard, s_guard = _denominator_guards(oldh, oldw)

    jitter *= e
    jitter += plasma

    padded = np.zeros((h + 2, w + 2))
    canvas = padded[1:-1, 1:-1]
    height = _band_height(w)
    bands = [(a, min(a + height, h)) for a in range(0, h, height)]

    def scatter_band(span):
        a, b = span
        canvas[a:b:2, ::2] = jitter[a // 2:(b + 1) // 2, :]

    def diamond_band(span):
        a, b = span
        # Used diamond cells only read seed cells of rows [a, b].
        d = _conv_band(padded, _DIAMOND_TAPS, a, b, w)
        part = dia_noise[a // 2:b // 2, :]
        part *= e
        part += (1.0 - e) * (d[1::2, 1::2] / d_guard[a + 1:b:2, 1::2])
        canvas[a + 1:b:2, 1::2] = part

    def square_band(span):
        a, b = span
        # Used square cells only read seed and diamond cells of rows
        # [a - 1, b], all written by earlier stages.
        s = _conv_band(padded, _SQUARE_TAPS, a, b, w)
        part_a = noise_a[a // 2:b // 2, :]
        part_a *= e
        part_a += (1.0 - e) * (s[1::2, 0::2] / s_guard[a + 1:b:2, 0::2])
        canvas[a + 1:b:2, 0::2] = part_a
        part_b = noise_b[a // 2:(b + 1) // 2, :]
        part_b *= e
        part_b += (1.0 - e) * (s[0::2, 1::2] / s_guard[a:b:2, 1::2])
        canvas[a:b:2, 1::2] = part_b

    if workers > 1 and len(bands) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(scatter_band, bands))
            list(pool.map(diamond_band, bands))
            list(pool.map(square_band, bands))
    else:
        # Staggered band schedule: each stage trails its producer by one
        # band, so a canvas region is seeded, diamond-filled, and
        # square-filled while still cache-resident.
        count = len(bands)
        for k in range(count + 2):
            if k < count:
                scatter_band(bands[k])
            if 1 <= k <= count:
                diamond_band(bands[k - 1])
            if k >= 2:
                square_band(bands[k - 2])

    _pool_give(stage_jitter, stage_dia, stage_sq, stage_a, stage_b)
    return canvas


def ds(params: PlasmaParams, noise=None, workers: int = 1) -> np.ndarray:
    """Grow a plasma fractal of side ``2**(steps+1) + 1`` from a 3x3 seed.

    The noise weight starts at 1 and is multiplied by the roughness before
    every level.  Output is deterministic in (seed, steps, roughness); pass
    ``noise`` to drive the generation from an explicit scalar sequence
    instead of the seeded counter-based source.
    """
    if noise is None:
        noise = RandSource(params.seed, _PLASMA_STREAM)
    grid = noise.take(9).reshape(3, 3)
    e = 1.0
    for _ in range(params.steps):
        e *= params.roughness
        grid = one_ds(grid, e, noise, workers=workers)
    return grid


def _sparse_level(grid: np.ndarray, e: float, noise) -> np.ndarray:
    """Classical sparse-access refinement level (slice gathering, no
    convolutions); consumes noise in the same documented order."""
    oldh, oldw = grid.shape
    h, w = 2 * oldh - 1, 2 * oldw - 1
    jitter = noise.take(oldh * oldw).reshape(oldh, oldw)
    dia_noise = noise.take((oldh - 1) * (oldw - 1)).reshape(oldh - 1, oldw - 1)
    sq_mask = _square_cell_mask(h, w)
    sq_noise = noise.take(int(sq_mask.sum()))
    rnd_sq = np.zeros((h, w))
    rnd_sq[sq_mask] = sq_noise

    out = np.zeros((h, w))
    out[::2, ::2] = grid + jitter * e

    # Diamond: the four diagonal neighbors of an (odd, odd) cell are always
    # in bounds.
    davg = 0.25 * (out[:-2:2, :-2:2] + out[:-2:2, 2::2]
                   + out[2::2, :-2:2] + out[2::2, 2::2])
    out[1::2, 1::2] = (1.0 - e) * davg + e * dia_noise

    # Square sublattice on odd rows / even columns: vertical neighbors always
    # exist, horizontal ones clip at the first and last column.
    sum_a = out[:-2:2, ::2] + out[2::2, ::2]
    cnt_a = np.full(sum_a.shape, 2.0)
    sum_a[:, 1:] += out[1::2, 1:-1:2]
    cnt_a[:, 1:] += 1.0
    sum_a[:, :-1] += out[1::2, 1::2]
    cnt_a[:, :-1] += 1.0
    out[1::2, ::2] = (1.0 - e) * sum_a / cnt_a + e * rnd_sq[1::2, ::2]

    # Square sublattice on even rows / odd columns: mirror situation.
    sum_b = out[::2, :-2:2] + out[::2, 2::2]
    cnt_b = np.full(sum_b.shape, 2.0)
    sum_b[1:, :] += out[1::2, 1::2]
    cnt_b[1:, :] += 1.0
    sum_b[:-1, :] += out[1::2, 1::2]
    cnt_b[:-1, :] += 1.0
    out[::2, 1::2] = (1.0 - e) * sum_b / cnt_b + e * rnd_sq[::2, 1::2]
    return out


def ds_recursive(params: PlasmaParams, noise=None) -> np.ndarray:
    """Classical sparse-access diamond-square (the benchmark reference lane).

    Same blending rule, border handling, and noise order as :func:`ds`, but
    implemented by explicit neighbor gathering instead of convolutions.
    """
    if noise is None:
        noise = RandSource(params.seed, _PLASMA_STREAM)
    grid = noise.take(9).reshape(3, 3)
    e = 1.0
    for _ in range(params.steps):
        e *= params.roughness
        grid = _sparse_level(grid, e, noise)
    return grid


def steps_for_side(side: int) -> int:
    """Smallest step count whose output side covers ``side`` pixels."""
    if side < 1:
        raise InvalidInputError(f"side must be >= 1, got {side}")
    steps = 1
    while 2 ** (steps + 1) + 1 < side:
        steps += 1
    return steps


def normalize01(grid: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; constant grids map to all 0.5."""
    lo = float(grid.min())
    hi = float(grid.max())
    if hi - lo <= 0.0:
        return np.full_like(grid, 0.5)
    return (grid - lo) / (hi - lo)


def plasma_for_size(width: int, height: int, roughness: float, rng) -> np.ndarray:
    """Normalized plasma covering an arbitrary raster size.

    Runs the generator with the fewest steps whose square side covers
    max(width, height), crops the top-left window, and min-max normalizes
    the crop to [0, 1].
    """
    if width < 1 or height < 1:
        raise InvalidInputError(f"size must be >= 1, got {width}x{height}")
    steps = steps_for_side(max(width, height))
    grid = ds(PlasmaParams(steps=steps, roughness=roughness), noise=rng)
    return normalize01(grid[:height, :width])
