"""Randomized numeric sweeps over the theory toolbox.

Each sweep hammers one inequality with seeded random instances and reports
the worst margin observed (amount by which the inequality held; negative
means a violation).  A violating instance is serialized as a counterexample
so failures are reproducible.  The sweeps drive the `verify-theory` CLI
subcommand and the acceptance suite.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import theory
from .embedding import Embedding
from .graph import Graph
from .models import TruncatedDot, build_softmax, fit_lrdp, fit_lrhp
from .sampling import expected_degree_second_moment, expected_degrees, expected_triangles_exact


@dataclass(frozen=True)
class PropertyResult:
    name: str
    description: str
    trials: int
    passed: bool
    worst_margin: float
    counterexample: dict | None = None

    def to_json(self) -> dict:
        return asdict(self)


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, tag)))


def _random_gnp(rng, n, p) -> Graph:
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return Graph.from_edges(n, np.argwhere(upper))


def _finish(name, description, trials, margins, counterexample) -> PropertyResult:
    worst = float(min(margins)) if margins else float("inf")
    return PropertyResult(name, description, trials, counterexample is None,
                          worst, counterexample)


def sweep_rank_lemma(seed: int, trials: int = 1000) -> PropertyResult:
    """Trace-squared bound never exceeds the numeric rank (1e-6 relative)."""
    rng = _rng(seed, 1)
    margins, counterexample = [], None
    for t in range(trials):
        n = int(rng.integers(1, 21))
        kind = t % 4
        if kind == 0:
            m = rng.normal(size=(n, n))
        elif kind == 1:
            r = int(rng.integers(1, n + 1))
            m = rng.normal(size=(n, r)) @ rng.normal(size=(r, n))
        elif kind == 2:
            r = int(rng.integers(1, n + 1))
            v = rng.normal(size=(n, r))
            m = v @ v.T
        else:
            d = rng.normal(size=n)
            d[rng.random(n) < 0.4] = 0.0
            m = np.diag(d)
        if np.sum(m * m) == 0.0:
            m = np.eye(n)
        bound = theory.rank_lemma_bound(m)
        rank = theory.numeric_rank(m)
        margin = rank * (1 + 1e-6) - bound
        margins.append(margin)
        if margin < 0 and counterexample is None:
            counterexample = {"matrix": m.tolist(), "bound": bound, "numeric_rank": rank}
    return _finish("rank_lemma_bound",
                   "trace^2/sum-of-squares never exceeds numeric rank",
                   trials, margins, counterexample)


def sweep_packing(seed: int, trials_per_dim: int = 100, max_dim: int = 6) -> PropertyResult:
    """Any 4d unit vectors in R^d contain a pair with dot >= 1/(4d)."""
    rng = _rng(seed, 2)
    margins, counterexample = [], None
    trials = 0
    for d in range(1, max_dim + 1):
        floor = 1.0 / (4 * d) - 1e-12
        for _ in range(trials_per_dim):
            trials += 1
            u = rng.normal(size=(4 * d, d))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            got = theory.packing_max_dot(u)
            margin = got - floor
            margins.append(margin)
            if margin < 0 and counterexample is None:
                counterexample = {"d": d, "vectors": u.tolist(), "max_dot": got}
    return _finish("packing_max_dot",
                   "4d unit vectors always contain a pair with dot >= 1/(4d)",
                   trials, margins, counterexample)


def sweep_independent_set(seed: int, trials: int = 100, n: int = 50) -> PropertyResult:
    """Greedy set is independent and meets the h/(max degree + 1) floor."""
    rng = _rng(seed, 3)
    margins, counterexample = [], None
    for _ in range(trials):
        g = _random_gnp(rng, n, float(rng.uniform(0.01, 0.5)))
        s = theory.greedy_independent_set(g)
        members = set(int(v) for v in s)
        independent = all(int(w) not in members
                          for v in members for w in g.neighbors(v))
        b = int(g.degrees.max()) if g.n else 0
        floor = theory.independent_set_floor(g.n, b)
        margin = (len(s) - floor) if independent else -1.0
        margins.append(margin)
        if margin < 0 and counterexample is None:
            counterexample = {"edges": g.edge_array().tolist(), "set": s.tolist(),
                              "floor": floor, "independent": independent}
    return _finish("greedy_independent_set",
                   "greedy set independent and of size >= ceil(h/(b+1))",
                   trials, margins, counterexample)


def sweep_negative_dot_mass(seed: int, trials: int = 1000) -> PropertyResult:
    """Ordered-pair negative dot mass never exceeds the positive mass."""
    rng = _rng(seed, 4)
    margins, counterexample = [], None
    for _ in range(trials):
        s = int(rng.integers(2, 30))
        d = int(rng.integers(1, 9))
        w = rng.normal(size=(s, d)) * float(rng.uniform(0.1, 10.0))
        neg, pos = theory.negative_dot_mass(w)
        margin = pos * (1 + 1e-12) + 1e-12 - neg
        margins.append(margin)
        if margin < 0 and counterexample is None:
            counterexample = {"vectors": w.tolist(), "neg": neg, "pos": pos}
    return _finish("negative_dot_mass",
                   "negative pairwise dot mass bounded by positive mass",
                   trials, margins, counterexample)


def sweep_degree_second_moment(seed: int, trials: int = 50) -> PropertyResult:
    """E[D^2] <= E[D] + E[D]^2 per vertex, for every model variant."""
    rng = _rng(seed, 5)
    margins, counterexample = [], None
    checks = 0
    for t in range(trials):
        n = int(rng.integers(10, 101))
        d = int(rng.integers(1, 7))
        e = Embedding.plain(rng.normal(size=(n, d)) * float(rng.uniform(0.1, 0.8)))
        g = _random_gnp(rng, n, 2.5 / n)
        fit_seed = int(rng.integers(0, 2 ** 32))
        models = {"tdp": TruncatedDot(),
                  "lrdp": fit_lrdp(e, g, seed=fit_seed)[0],
                  "lrhp": fit_lrhp(e, g, seed=fit_seed)[0],
                  "softmax": build_softmax(e, g)}
        for name, model in models.items():
            checks += 1
            ed, ed2 = expected_degree_second_moment(e, model)
            slack = ed + ed * ed - ed2
            margin = float(slack.min() + 1e-9 * (1.0 + np.abs(ed2).max()))
            margins.append(margin)
            if margin < 0 and counterexample is None:
                worst = int(np.argmin(slack))
                counterexample = {"trial": t, "model": name, "vertex": worst,
                                  "ed": float(ed[worst]), "ed2": float(ed2[worst])}
    return _finish("degree_second_moment",
                   "exact E[D^2] <= E[D] + E[D]^2 for every vertex and model",
                   checks, margins, counterexample)


def sweep_triangle_expectation_bound(seed: int, trials: int = 100) -> PropertyResult:
    """Expected triangles <= L^2 * sum_i E[D_i]^2 when all scores stay <= 1."""
    rng = _rng(seed, 6)
    tdp = TruncatedDot()
    margins, counterexample = [], None
    for t in range(trials):
        n = int(rng.integers(10, 61))
        d = int(rng.integers(1, 7))
        v = rng.normal(size=(n, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v *= rng.uniform(0.05, 1.0, size=(n, 1))
        e = Embedding.plain(v)
        l_sq = float(np.max(np.sum(v * v, axis=1)))
        ed = expected_degrees(e, tdp)
        tri = expected_triangles_exact(e, tdp)
        rhs = l_sq * float(np.sum(ed * ed))
        margin = rhs - tri + 1e-9 * (1.0 + rhs)
        margins.append(margin)
        if margin < 0 and counterexample is None:
            counterexample = {"trial": t, "vectors": v.tolist(),
                              "triangles": tri, "rhs": rhs}
    return _finish("triangle_expectation_bound",
                   "expected triangles bounded by score ceiling times sum of "
                   "squared expected degrees",
                   trials, margins, counterexample)


def sweep_core_certificate(seed: int, trials: int = 50) -> PropertyResult:
    """Certified bound never exceeds numeric rank (nor the dimension)."""
    rng = _rng(seed, 7)
    margins, counterexample = [], None
    for t in range(trials):
        n = int(rng.integers(20, 201))
        d = int(rng.integers(2, 9))
        v = rng.normal(size=(n, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v *= rng.uniform(0.3, 1.5, size=(n, 1))
        e = Embedding.plain(v)
        cert = theory.core_rank_certificate(e, c=float(n))
        if cert.emptied_at is not None:
            margins.append(float("inf"))
            continue
        gram = v[cert.core_indices] @ v[cert.core_indices].T
        rank = theory.numeric_rank(gram)
        margin = min(rank * (1 + 1e-6) - cert.bound, d + 1e-9 - cert.bound)
        margins.append(margin)
        if margin < 0 and counterexample is None:
            counterexample = {"trial": t, "bound": cert.bound, "rank": rank, "d": d}
    return _finish("core_rank_certificate",
                   "certificate bound below numeric rank and dimension of the core",
                   trials, margins, counterexample)


ALL_SWEEPS = (
    sweep_rank_lemma,
    sweep_packing,
    sweep_independent_set,
    sweep_negative_dot_mass,
    sweep_degree_second_moment,
    sweep_triangle_expectation_bound,
    sweep_core_certificate,
)


def run_all_sweeps(seed: int = 0) -> list[PropertyResult]:
    return [sweep(seed) for sweep in ALL_SWEEPS]


def sweep_report(results, seed: int) -> dict:
    return {
        "seed": seed,
        "all_passed": all(r.passed for r in results),
        "properties": [r.to_json() for r in results],
    }
