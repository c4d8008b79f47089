"""Draw graphs from an (embedding, edge model) pair; exact expectations.

Every unordered pair (i, j) is an independent Bernoulli trial with the
model's probability.  Randomness is organized per pair tile: the generator
for a tile is seeded from (seed, sample_index, tile_index), so a sampled
graph is bit-identical no matter how tiles are scheduled across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import DEFAULT_BLOCK_SIZE, iter_pair_tiles, map_tiles, strict_upper_mask
from .graph import Graph, TriangleFoundationCurve, triangle_foundation_curve

_EXACT_TRIANGLE_GUARD = 500


@dataclass(frozen=True)
class SampleSpec:
    """How many graphs to draw and how to seed them.

    block_size is the side length of the square pair tiles that form the
    RNG/work units; changing it selects a different (equally valid) random
    stream, so it is part of the experiment configuration.
    """

    seed: int
    num_samples: int
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")


def _tile_rng(seed: int, sample_index: int, tile_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, sample_index, tile_index)))


def sample_graph(e, model, seed: int, sample_index: int, *,
                 block_size: int = DEFAULT_BLOCK_SIZE, threads: int = 1) -> Graph:
    """One Bernoulli draw over all pairs; deterministic in (seed, sample_index)."""
    n = e.n

    def work(tile):
        t, rows, cols = tile
        p = model.prob_block(e, np.arange(*rows), np.arange(*cols))
        mask = strict_upper_mask(rows, cols)
        if mask is not None:
            p = np.where(mask, p, 0.0)
        u = _tile_rng(seed, sample_index, t).random(p.shape)
        ii, jj = np.nonzero(u < p)
        return np.column_stack([ii + rows[0], jj + cols[0]])

    parts = map_tiles(work, iter_pair_tiles(n, block_size), threads)
    edges = np.concatenate(parts) if parts else np.empty((0, 2), np.int64)
    return Graph.from_edges(n, edges)


def _kahan_accumulate(total, comp, update):
    y = update - comp
    t = total + y
    comp[:] = (t - total) - y
    total[:] = t


def _pair_moment_pass(e, model, block_size: int, threads: int, power2: bool):
    """Per-vertex sums of p (and optionally p^2) over all pairs."""
    n = e.n

    def work(tile):
        _, rows, cols = tile
        p = model.prob_block(e, np.arange(*rows), np.arange(*cols))
        mask = strict_upper_mask(rows, cols)
        if mask is not None:
            p = np.where(mask, p, 0.0)
        out = [(rows, p.sum(axis=1)), (cols, p.sum(axis=0))]
        if power2:
            p2 = p * p
            out += [(rows, p2.sum(axis=1)), (cols, p2.sum(axis=0))]
        return out

    sums = np.zeros(n)
    comp = np.zeros(n)
    sums2 = np.zeros(n)
    comp2 = np.zeros(n)
    for part in map_tiles(work, iter_pair_tiles(n, block_size), threads):
        (r_rows, row_sum), (r_cols, col_sum) = part[0], part[1]
        upd = np.zeros(n)
        upd[np.arange(*r_rows)] += row_sum
        upd[np.arange(*r_cols)] += col_sum
        _kahan_accumulate(sums, comp, upd)
        if power2:
            upd2 = np.zeros(n)
            upd2[np.arange(*part[2][0])] += part[2][1]
            upd2[np.arange(*part[3][0])] += part[3][1]
            _kahan_accumulate(sums2, comp2, upd2)
    return sums, sums2


def expected_degrees(e, model, *, block_size: int = DEFAULT_BLOCK_SIZE,
                     threads: int = 1) -> np.ndarray:
    """Exact E[D_i] = sum_{j != i} p_ij for every vertex (O(n^2) pass)."""
    sums, _ = _pair_moment_pass(e, model, block_size, threads, power2=False)
    return sums


def expected_degree_second_moment(e, model, *, block_size: int = DEFAULT_BLOCK_SIZE,
                                  threads: int = 1):
    """Exact (E[D_i], E[D_i^2]) per vertex.

    For a sum of independent Bernoulli(p_ij) indicators,
    E[D^2] = Var + E[D]^2 = sum p(1-p) + (sum p)^2.
    """
    ed, sum_sq = _pair_moment_pass(e, model, block_size, threads, power2=True)
    return ed, ed - sum_sq + ed * ed


def expected_edges(e, model, *, block_size: int = DEFAULT_BLOCK_SIZE,
                   threads: int = 1) -> float:
    """Exact sum of all pair probabilities."""
    return float(math.fsum(expected_degrees(
        e, model, block_size=block_size, threads=threads)) / 2.0)


def expected_triangles_exact(e, model) -> float:
    """Exact expected triangle count sum_{i<j<k} p_ij p_jk p_ik.

    Edges are independent, so the expectation factorizes per pair.  Refuses
    to run above n=500; use sampling beyond that.
    """
    n = e.n
    if n > _EXACT_TRIANGLE_GUARD:
        raise ValueError(
            f"exact triangle expectation is O(n^3); refusing n={n} > "
            f"{_EXACT_TRIANGLE_GUARD} (sample instead)")
    if n < 3:
        return 0.0
    p = model.prob_block(e, np.arange(n), np.arange(n))
    p = np.asarray(p, dtype=np.float64).copy()
    np.fill_diagonal(p, 0.0)
    # symmetric with zero diagonal: trace(P^3) counts each triangle 6 times
    return float(np.trace(p @ p @ p) / 6.0)


@dataclass(frozen=True)
class SampleCurveSet:
    """Per-sample triangle-foundation curves on their union threshold grid."""

    thresholds: np.ndarray            # union of distinct degrees, ascending
    deltas: np.ndarray                # (num_samples, len(thresholds)), step-filled
    n_ref: int

    @property
    def max_curve(self) -> TriangleFoundationCurve:
        points = tuple((int(c), float(d)) for c, d in
                       zip(self.thresholds, self.deltas.max(axis=0)))
        return TriangleFoundationCurve(points, self.n_ref)

    @property
    def mean(self) -> np.ndarray:
        return self.deltas.mean(axis=0)

    @property
    def variance(self) -> np.ndarray:
        return self.deltas.var(axis=0)


def union_grid(curves) -> np.ndarray:
    """Sorted union of all thresholds appearing in the given curves."""
    values = sorted({int(c) for curve in curves for c, _ in curve.points})
    return np.array(values, dtype=np.int64)


def curves_on_grid(curves, grid) -> np.ndarray:
    """Step-interpolate each curve onto the grid; rows follow input order."""
    return np.array([[curve.value_at(int(c)) for c in grid] for curve in curves])


def curve_over_samples(e, model, spec: SampleSpec, n_ref: int, *,
                       threads: int = 1) -> SampleCurveSet:
    """Sample spec.num_samples graphs and collect their curves.

    Every curve is normalized by the original graph's n (n_ref), not by the
    sampled graph's vertex count.
    """
    curves = []
    for s in range(spec.num_samples):
        g = sample_graph(e, model, spec.seed, s,
                         block_size=spec.block_size, threads=threads)
        curves.append(triangle_foundation_curve(g, n_ref))
    grid = union_grid(curves)
    return SampleCurveSet(grid, curves_on_grid(curves, grid), n_ref)


def max_curve_over_samples(e, model, spec: SampleSpec, n_ref: int, *,
                           threads: int = 1) -> TriangleFoundationCurve:
    """Pointwise maximum of the per-sample curves on their union grid."""
    return curve_over_samples(e, model, spec, n_ref, threads=threads).max_curve
