"""Deterministic tiling of the unordered-pair space {(i, j): i < j}.

All O(n^2) pair passes (sampling, expectation sums, calibration) walk the
upper triangle in fixed square tiles.  Tile indices are assigned in a fixed
row-major order over the tile grid, so any per-tile randomness or reduction
is independent of thread scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_BLOCK_SIZE = 1024


def iter_pair_tiles(n: int, block_size: int = DEFAULT_BLOCK_SIZE):
    """Yield (tile_index, (i0, i1), (j0, j1)) covering every pair i < j once."""
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    starts = list(range(0, n, block_size))
    t = 0
    for bi, i0 in enumerate(starts):
        i1 = min(i0 + block_size, n)
        for j0 in starts[bi:]:
            j1 = min(j0 + block_size, n)
            yield t, (i0, i1), (j0, j1)
            t += 1


def strict_upper_mask(rows: tuple, cols: tuple) -> np.ndarray | None:
    """Mask of entries with global column > global row, or None if all are.

    Off-diagonal tiles satisfy j > i everywhere; only tiles straddling the
    diagonal need masking.
    """
    (i0, i1), (j0, j1) = rows, cols
    if j0 >= i1:
        return None
    r = np.arange(i0, i1)[:, None]
    c = np.arange(j0, j1)[None, :]
    return c > r


def map_tiles(fn, tiles, threads: int = 1) -> list:
    """Apply fn to each tile, in tile order; threads never change results."""
    tiles = list(tiles)
    if threads <= 1:
        return [fn(t) for t in tiles]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tiles))
