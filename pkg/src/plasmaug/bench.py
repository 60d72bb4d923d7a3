"""Benchmark harness for the plasma generator implementations.

Times the convolutional generator (single-threaded and tiled), and the
classical sparse-access generator, over a ladder of sides from the
``2**n + 1`` family.  Each (implementation, side) cell is warmed up once and
timed over several repeats; the reported time is the median, which is robust
on shared desks.  Results go to CSV, optionally with a log-log figure
rendered next to it.
"""

from __future__ import annotations

import csv
import ctypes
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidInputError
from .plasma import PlasmaParams, ds, ds_recursive

IMPLEMENTATIONS = ("conv", "recursive", "conv-parallel")

_allocator_tuned = False


def _tune_allocator() -> None:
    """Keep large freed buffers on the heap while timing.

    glibc hands blocks above its mmap/trim thresholds straight back to the
    kernel on free, so at large sides every repeat would re-fault tens of
    megabytes and the measurement would track the page allocator instead of
    the generator.  Raising both thresholds keeps repeat allocations warm;
    the process then holds its high-watermark footprint, which is acceptable
    for a benchmark run.  No-op off glibc.
    """
    global _allocator_tuned
    if _allocator_tuned:
        return
    _allocator_tuned = True
    try:
        libc = ctypes.CDLL("libc.so.6")
        libc.mallopt(-3, 256 * 1024 * 1024)  # M_MMAP_THRESHOLD
        libc.mallopt(-1, 256 * 1024 * 1024)  # M_TRIM_THRESHOLD
    except (OSError, AttributeError):
        pass


@dataclass(frozen=True)
class BenchRecord:
    impl: str
    side: int
    median_s: float
    pixels_per_s: float


def steps_for_exact_side(side: int) -> int:
    """Steps for an exact ``2**n + 1`` side; other sides are rejected."""
    n = side - 1
    if side < 5 or n & (n - 1) != 0:
        raise InvalidInputError(
            f"benchmark sides must be 2**n + 1 with n >= 2, got {side}")
    return int(math.log2(n)) - 1


def parse_sizes(spec: str) -> list[int]:
    """Parse "65..2049" (doubling ladder) or "65,129,257" (explicit list)."""
    spec = spec.strip()
    if ".." in spec:
        lo_s, hi_s = spec.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        steps_for_exact_side(lo)
        sides = []
        side = lo
        while side <= hi:
            sides.append(side)
            side = 2 * (side - 1) + 1
        if not sides:
            raise InvalidInputError(f"empty size range {spec!r}")
        return sides
    sides = [int(s) for s in spec.split(",") if s.strip()]
    for side in sides:
        steps_for_exact_side(side)
    return sides


def _runner(impl: str, workers: int):
    if impl == "conv":
        return lambda params: ds(params)
    if impl == "conv-parallel":
        return lambda params: ds(params, workers=workers)
    if impl == "recursive":
        return lambda params: ds_recursive(params)
    raise InvalidInputError(
        f"unknown implementation {impl!r}; choose from {IMPLEMENTATIONS}")


def run_benchmark(sides, impls, repeats: int = 5, seed: int = 1234,
                  workers: int = None, on_skip=None,
                  tune_allocator: bool = True) -> list[BenchRecord]:
    """Median-of-repeats timings; allocation failures skip the cell."""
    if repeats < 1:
        raise InvalidInputError(f"repeats must be >= 1, got {repeats}")
    if tune_allocator:
        _tune_allocator()
    if workers is None:
        workers = min(os.cpu_count() or 1, 8)
    records = []
    for impl in impls:
        run = _runner(impl, workers)
        for side in sides:
            params = PlasmaParams(steps=steps_for_exact_side(side),
                                  roughness=0.5, seed=seed)
            try:
                run(params)  # warm-up, not timed
                times = []
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    run(params)
                    times.append(time.perf_counter() - t0)
            except MemoryError:
                if on_skip is not None:
                    on_skip(impl, side)
                continue
            times.sort()
            median = times[len(times) // 2] if repeats % 2 else (
                0.5 * (times[repeats // 2 - 1] + times[repeats // 2]))
            records.append(BenchRecord(impl, side, median, side * side / median))
    return records


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["impl", "side", "median_s", "pixels_per_s"])
        for r in records:
            writer.writerow([r.impl, r.side, f"{r.median_s:.9g}",
                             f"{r.pixels_per_s:.9g}"])


def read_csv(path) -> list[BenchRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(BenchRecord(row["impl"], int(row["side"]),
                                       float(row["median_s"]),
                                       float(row["pixels_per_s"])))
    return records


def plot_records(records, path) -> None:
    """Log-log wall time versus side, one line per implementation."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    impls = sorted({r.impl for r in records})
    for impl in impls:
        rows = sorted((r.side, r.median_s) for r in records if r.impl == impl)
        ax.plot([s for s, _ in rows], [t for _, t in rows],
                marker="o", label=impl)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("side (pixels)")
    ax.set_ylabel("median wall time (s)")
    ax.set_title("Plasma generation benchmark")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)
