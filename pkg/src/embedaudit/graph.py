"""Immutable undirected simple graphs and exact triangle-foundation statistics.

A triangle-foundation curve maps a degree threshold c to the number of
triangles whose three endpoints all have degree at most c, divided by a
reference vertex count.  The reference count is always the *full* graph's n,
even when the curve is read off an induced subgraph, so curves from different
samples of the same vertex set are directly comparable.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class EdgeListParseError(ValueError):
    """Malformed edge-list input (names the offending line)."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph over vertices 0..n-1 in CSR-like form.

    ``indices[indptr[v]:indptr[v+1]]`` is the sorted neighbor list of v.
    Each edge is stored once per endpoint, so ``indices`` has length 2m.
    Instances are immutable (arrays are marked read-only) and safe to share
    across threads.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indptr.shape != (self.n + 1,):
            raise ValueError(f"indptr must have length n+1={self.n + 1}")
        if indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("indptr endpoints inconsistent with indices")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("indptr must be non-decreasing")
        if indices.size and (indices.min() < 0 or indices.max() >= self.n):
            raise ValueError("neighbor index out of range")
        indptr.flags.writeable = False
        indices.flags.writeable = False
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return self.indices.size // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor list of v (read-only view)."""
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < nb.size and nb[k] == v)

    def edge_array(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def adjacency_matrix(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix (float64)."""
        a = np.zeros((self.n, self.n))
        e = self.edge_array()
        if e.size:
            a[e[:, 0], e[:, 1]] = 1.0
            a[e[:, 1], e[:, 0]] = 1.0
        return a

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build a Graph from an iterable/array of (u, v) pairs.

        Self-loops are discarded and duplicate edges collapsed; use
        :func:`load_edge_list` when drop counts matter.
        """
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                       dtype=np.int64)
        if e.size == 0:
            return cls(n, np.zeros(n + 1, dtype=np.int64),
                       np.empty(0, dtype=np.int64))
        e = e.reshape(-1, 2)
        if e.min() < 0 or e.max() >= n:
            raise ValueError("edge endpoint out of range")
        e = e[e[:, 0] != e[:, 1]]
        e = np.unique(np.sort(e, axis=1), axis=0)
        both = np.concatenate([e, e[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(both[:, 0], minlength=n), out=indptr[1:])
        return cls(n, indptr, both[:, 1].copy())


@dataclass(frozen=True)
class LoadedEdgeList:
    """Result of parsing an edge-list file.

    ``original_ids[k]`` is the vertex label in the input file that was
    relabeled to index k (labels are assigned in ascending order).
    """

    graph: Graph
    original_ids: np.ndarray
    dropped_self_loops: int
    dropped_duplicates: int

    @property
    def dropped(self) -> int:
        return self.dropped_self_loops + self.dropped_duplicates


def load_edge_list(path) -> LoadedEdgeList:
    """Parse a whitespace-separated "u v" edge list into a Graph.

    Lines starting with '#' and blank lines are ignored.  Vertex labels are
    arbitrary non-negative integers and get relabeled to a contiguous
    0..n-1 space.  Duplicate edges and self-loops are dropped (counted, not
    errors).  Malformed lines raise EdgeListParseError naming the line.
    """
    raw_edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise EdgeListParseError(
                    f"{path}: line {lineno}: expected 'u v', got {line!r}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise EdgeListParseError(
                    f"{path}: line {lineno}: non-integer token in {line!r}") from None
            if u < 0 or v < 0:
                raise EdgeListParseError(
                    f"{path}: line {lineno}: negative vertex id in {line!r}")
            raw_edges.append((u, v))

    if not raw_edges:
        empty = Graph(0, np.zeros(1, dtype=np.int64), np.empty(0, dtype=np.int64))
        return LoadedEdgeList(empty, np.empty(0, dtype=np.int64), 0, 0)

    arr = np.asarray(raw_edges, dtype=np.int64)
    labels = np.unique(arr)                     # ascending original ids
    relabeled = np.searchsorted(labels, arr)
    n = labels.size

    loops = relabeled[:, 0] == relabeled[:, 1]
    n_loops = int(loops.sum())
    kept = np.sort(relabeled[~loops], axis=1)
    uniq = np.unique(kept, axis=0) if kept.size else kept
    n_dups = kept.shape[0] - uniq.shape[0]

    return LoadedEdgeList(Graph.from_edges(n, uniq), labels, n_loops, n_dups)


def save_edge_list(g: Graph, path, header_lines=()) -> None:
    """Write g in the "u v" text format, one edge per line, u < v.

    ``header_lines`` are emitted first as '#' comments (provenance).
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for u, v in g.edge_array():
            fh.write(f"{u} {v}\n")


@dataclass(frozen=True)
class DegreeDistribution:
    """Histogram degree -> count; counts are real-valued for model output."""

    entries: dict

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def as_rows(self):
        """Sorted (degree, count) rows for CSV output."""
        return sorted(self.entries.items())


def degree_distribution(g: Graph) -> DegreeDistribution:
    """Exact histogram of observed degrees."""
    deg = g.degrees
    if deg.size == 0:
        return DegreeDistribution({})
    counts = np.bincount(deg)
    return DegreeDistribution({int(d): int(c) for d, c in enumerate(counts) if c > 0})


def expected_degree_distribution(expected_degrees: np.ndarray) -> DegreeDistribution:
    """Bin real-valued expected degrees on the same integer grid as observed
    degrees (nearest integer)."""
    vals = np.rint(np.asarray(expected_degrees, dtype=float)).astype(np.int64)
    counts = np.bincount(vals)
    return DegreeDistribution({int(d): float(c) for d, c in enumerate(counts) if c > 0})


@dataclass(frozen=True)
class TriangleFoundationCurve:
    """Step curve c -> (# triangles with max endpoint degree <= c) / n_ref.

    ``points`` holds one (c, delta) pair per distinct threshold, ascending in
    c; delta is non-decreasing.  Between thresholds the curve is constant
    (step interpolation); below the smallest threshold it is 0.
    """

    points: tuple
    n_ref: int

    def __post_init__(self):
        if self.n_ref < 1:
            raise ValueError("n_ref must be >= 1")

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([c for c, _ in self.points], dtype=np.int64)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for _, d in self.points])

    def value_at(self, c) -> float:
        """Step-interpolated delta at threshold c."""
        cs = [p[0] for p in self.points]
        k = bisect.bisect_right(cs, c)
        return 0.0 if k == 0 else self.points[k - 1][1]

    def total_triangles(self) -> int:
        if not self.points:
            return 0
        return int(round(self.points[-1][1] * self.n_ref))


def _triangle_counts_by_max_degree(g: Graph) -> np.ndarray:
    """counts[c] = number of triangles whose max endpoint degree equals c.

    Enumerates each triangle exactly once via degree-ordered forward
    adjacency (ties broken by vertex index).
    """
    deg = g.degrees
    counts = np.zeros(int(deg.max()) + 1 if deg.size else 1)
    # position in the (degree, index) order; forward = strictly later vertices
    order = np.lexsort((np.arange(g.n), deg))
    pos = np.empty(g.n, dtype=np.int64)
    pos[order] = np.arange(g.n)
    fwd = [g.neighbors(u)[pos[g.neighbors(u)] > pos[u]] for u in range(g.n)]
    for u in range(g.n):
        fu = fwd[u]
        if fu.size < 1:
            continue
        du = deg[u]
        for v in fu:
            common = np.intersect1d(fu, fwd[v], assume_unique=True)
            if common.size:
                md = np.maximum(max(du, deg[v]), deg[common])
                np.add.at(counts, md, 1)
    return counts


def triangle_foundation_curve(g: Graph, n_ref: int) -> TriangleFoundationCurve:
    """Exact triangle-foundation curve of g, normalized by n_ref.

    A triangle lies in the subgraph induced by the vertices of degree <= c
    exactly when all three of its endpoint degrees (in g) are <= c, so the
    curve is the cumulative count of triangles keyed by max endpoint degree.
    Thresholds are the distinct degrees observed in g.
    """
    if n_ref < 1:
        raise ValueError("n_ref must be >= 1")
    deg = g.degrees
    if deg.size == 0:
        return TriangleFoundationCurve((), n_ref)
    counts = _triangle_counts_by_max_degree(g)
    cum = np.cumsum(counts)
    cs = np.unique(deg)
    points = tuple((int(c), float(cum[c] / n_ref)) for c in cs)
    return TriangleFoundationCurve(points, n_ref)


def triangle_count(g: Graph) -> int:
    """Exact number of triangles in g."""
    return int(round(_triangle_counts_by_max_degree(g).sum()))
