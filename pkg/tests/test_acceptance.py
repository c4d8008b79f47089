"""End-to-end acceptance checks for the audit pipeline.

One test per criterion, each asserting at its frozen tolerance and printing
a single pass line (visible under ``pytest -s`` or in captured output).
Criteria with randomized content run on frozen seeds so outcomes are
reproducible.
"""

import time

import numpy as np
import pytest

import oracles
from embedaudit.cli import AuditConfig, cmd_audit
from embedaudit.embedding import Embedding, spectral_embed
from embedaudit.graph import (
    Graph,
    save_edge_list,
    triangle_count,
    triangle_foundation_curve,
)
from embedaudit.models import TruncatedDot, build_softmax, fit_lrdp, fit_lrhp
from embedaudit.sampling import (
    SampleSpec,
    curve_over_samples,
    expected_degree_second_moment,
    expected_edges,
    expected_triangles_exact,
    sample_graph,
)
from embedaudit.theory import (
    ALPHA_CEILING,
    TheoremBoundParams,
    greedy_independent_set,
    independent_set_floor,
    negative_dot_mass,
    packing_max_dot,
    rank_lemma_bound,
    theorem_rank_lower_bound,
)

TDP = TruncatedDot()


def _ok(num, label):
    print(f"[ACCEPTANCE {num:2d}] {label}: PASS")


def _gnp_graph(rng, n, p):
    return Graph.from_edges(n, np.argwhere(np.triu(oracles.random_gnp(rng, n, p), 1)))


def test_01_triangle_curves_match_bruteforce_oracle():
    rng = np.random.default_rng(101)
    triples = oracles.all_triples(40)
    matrices = [oracles.random_gnp(rng, 40, 0.3) for _ in range(50)]
    t0 = time.perf_counter()
    for a in matrices:
        g = Graph.from_edges(40, np.argwhere(np.triu(a, 1)))
        curve = triangle_foundation_curve(g, n_ref=40)
        expected = oracles.brute_force_curve_vectorized(a, 40, triples)
        assert list(curve.points) == [tuple(p) for p in expected]
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"50-graph oracle sweep took {elapsed:.2f}s"
    _ok(1, "triangle curves equal O(n^3) oracle on 50 graphs in "
           f"{elapsed * 1000:.0f}ms")


def test_02_rank_lemma_sweep():
    rng = np.random.default_rng(202)
    for t in range(1000):
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
        bound = rank_lemma_bound(m)
        rank = oracles.numeric_rank_svd(m)
        assert bound <= rank * (1 + 1e-6), f"trial {t}: bound {bound} > rank {rank}"
    _ok(2, "rank bound below numeric rank on 1000 mixed-rank matrices")


def test_03_packing_lemma_sweep():
    rng = np.random.default_rng(303)
    for d in range(1, 7):
        floor = 1.0 / (4 * d) - 1e-12
        for t in range(100):
            u = rng.normal(size=(4 * d, d))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            got = packing_max_dot(u)
            assert got >= floor, f"d={d} trial {t}: {got} < {floor}"
    _ok(3, "4d unit vectors always contain a pair with dot >= 1/(4d), d=1..6")


def test_04_independent_set_floor():
    rng = np.random.default_rng(404)
    for t in range(100):
        g = _gnp_graph(rng, 50, float(rng.uniform(0.01, 0.5)))
        s = greedy_independent_set(g)
        members = set(int(v) for v in s)
        for v in members:
            assert not any(int(w) in members for w in g.neighbors(v)), \
                f"trial {t}: set not independent"
        b = int(g.degrees.max())
        assert len(s) >= independent_set_floor(50, b), f"trial {t}: floor missed"
    _ok(4, "greedy independent sets verified and above h/(b+1) on 100 graphs")


def test_05_negative_dot_mass_sweep():
    rng = np.random.default_rng(505)
    for t in range(1000):
        s = int(rng.integers(2, 30))
        d = int(rng.integers(1, 9))
        w = rng.normal(size=(s, d)) * float(rng.uniform(0.1, 10.0))
        neg, pos = negative_dot_mass(w)
        assert neg <= pos * (1 + 1e-12) + 1e-12, f"trial {t}: {neg} > {pos}"
    _ok(5, "negative pairwise dot mass bounded by positive mass on 1000 sets")


def test_06_degree_second_moment_every_model():
    rng = np.random.default_rng(606)
    for t in range(50):
        n = int(rng.integers(10, 101))
        d = int(rng.integers(1, 7))
        e = Embedding.plain(rng.normal(size=(n, d)) * float(rng.uniform(0.1, 0.8)))
        g = _gnp_graph(rng, n, 2.5 / n)
        fit_seed = int(rng.integers(0, 2 ** 32))
        models = [TDP, fit_lrdp(e, g, seed=fit_seed)[0],
                  fit_lrhp(e, g, seed=fit_seed)[0], build_softmax(e, g)]
        for model in models:
            ed, ed2 = expected_degree_second_moment(e, model)
            assert np.all(ed2 <= ed + ed * ed + 1e-9 * (1 + np.abs(ed2))), \
                f"trial {t}, model {model.variant}"
    _ok(6, "exact E[D^2] <= E[D] + E[D]^2 on 50 embeddings x 4 models")


def test_07_sampler_calibration():
    # one pair at p = 0.5, 10^4 draws
    e2 = Embedding.plain(np.array([[1.0, 0.0], [0.5, 0.0]]))
    hits = sum(sample_graph(e2, TDP, seed=707, sample_index=s).m
               for s in range(10_000))
    freq = hits / 10_000
    assert 0.485 <= freq <= 0.515, f"pair frequency {freq}"

    # exact expected triangles vs Monte Carlo mean, 3 sigma, n=30 instances
    rng = np.random.default_rng(717)
    for t in range(3):
        e = Embedding.plain(rng.normal(size=(30, 3)) * 0.45)
        exact = expected_triangles_exact(e, TDP)
        draws = 3000
        counts = np.array([triangle_count(sample_graph(e, TDP, seed=718 + t,
                                                       sample_index=s))
                           for s in range(draws)], dtype=float)
        sigma_of_mean = counts.std(ddof=1) / np.sqrt(draws)
        assert abs(counts.mean() - exact) <= 3.0 * sigma_of_mean, \
            f"instance {t}: mean {counts.mean()} vs exact {exact}"
    _ok(7, f"pair frequency {freq:.4f} in [0.485, 0.515]; "
           "triangle MC within 3 sigma on 3 instances")


def test_08_full_rank_reconstruction(tmp_path):
    rng = np.random.default_rng(808)
    cases = [_gnp_graph(rng, 200, 0.04),
             _gnp_graph(rng, 60, 0.2),
             Graph.from_edges(12, [(3 * t + a, 3 * t + b) for t in range(4)
                                   for a, b in ((0, 1), (1, 2), (0, 2))])]
    for g in cases:
        e = spectral_embed(g, g.n)
        for s in range(3):
            sampled = sample_graph(e, TDP, seed=809, sample_index=s)
            assert np.array_equal(sampled.edge_array(), g.edge_array()), \
                f"n={g.n}: d=n TDP sample differs from input"

    # audit curve equals the original curve at d = n
    g = cases[1]
    gpath = tmp_path / "g.txt"
    save_edge_list(g, gpath)
    out = tmp_path / "out"
    cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(out), dim=g.n,
                          models=("tdp",), num_samples=5, seed=810))
    assert (out / "curve_tdp.csv").read_bytes() == \
        (out / "curve_original.csv").read_bytes()
    _ok(8, "d=n TDP sampling reproduces inputs exactly (n up to 200); "
           "audit curve equals original")


def test_09_model_calibration_exact_sums():
    rng = np.random.default_rng(909)
    instances = []
    for n, p, d in [(300, 0.05, 16), (120, 0.15, 12)]:
        g = _gnp_graph(rng, n, p)
        instances.append((spectral_embed(g, d), g))
    g = _gnp_graph(rng, 200, 0.06)
    instances.append((Embedding.plain(rng.normal(size=(200, 8)) * 0.25), g))
    g = _gnp_graph(rng, 2000, 0.004)
    instances.append((Embedding.plain(rng.normal(size=(2000, 6)) * 0.15), g))

    for e, g in instances:
        for name, fit in [("lrdp", fit_lrdp), ("lrhp", fit_lrhp)]:
            model, report = fit(e, g, seed=910)
            assert report.converged, f"{name} did not converge on n={g.n}"
            achieved = expected_edges(e, model)
            assert abs(achieved - g.m) <= 1e-3 * g.m, \
                f"{name} n={g.n}: sum p = {achieved} vs m = {g.m}"
        sm = build_softmax(e, g)
        achieved = expected_edges(e, sm)
        assert abs(achieved - g.m) <= 1e-3 * g.m, \
            f"softmax n={g.n}: sum p = {achieved} vs m = {g.m}"
    _ok(9, "LRDP/LRHP/softmax match expected edge counts within 1e-3 relative")


def _headline_graph(seed):
    """1000 disjoint triangles (n=3000) plus a G(n, 1/n) noise layer."""
    rng = np.random.default_rng(seed)
    n = 3000
    tri = [(3 * t + a, 3 * t + b) for t in range(1000)
           for a, b in ((0, 1), (1, 2), (0, 2))]
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < 1.0 / n
    edges = np.concatenate([np.array(tri), np.column_stack([iu[mask], ju[mask]])])
    return Graph.from_edges(n, edges)


def test_10_headline_low_degree_triangle_gap():
    # Thresholds frozen from a pilot run: the construction caps the original
    # delta at 1/3 (1000 triangles over n=3000) and Poisson(1) noise degrees
    # leave ~0.26 of that at c=4, so the floor is 0.2; the model ceiling 0.1
    # and the 10x gap hold with orders of magnitude to spare (pilot observed
    # ~0.00033 against 0.26).
    t0 = time.perf_counter()
    g = _headline_graph(2024)
    assert g.n == 3000
    original = triangle_foundation_curve(g, g.n)
    orig_delta = original.value_at(4)
    assert orig_delta >= 0.2, f"original delta(4) = {orig_delta}"

    e = spectral_embed(g, 100)
    spec = SampleSpec(seed=2025, num_samples=100)
    model_max = curve_over_samples(e, TDP, spec, n_ref=g.n).max_curve
    model_delta = model_max.value_at(4)
    assert model_delta <= 0.1, f"model max delta(4) = {model_delta}"
    assert orig_delta >= 10.0 * model_delta, \
        f"gap below 10x: {orig_delta} vs {model_delta}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0, f"headline experiment took {elapsed:.0f}s"
    gap = float("inf") if model_delta == 0 else orig_delta / model_delta
    _ok(10, f"low-degree delta gap {gap:.0f}x (original {orig_delta:.3f}, "
            f"model max {model_delta:.5f}) in {elapsed:.0f}s")


def test_11_theorem_bound_matches_high_precision():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 60
    rng = np.random.default_rng(1111)
    for t in range(20):
        n = int(rng.integers(8, 10 ** 8))
        c = float(rng.uniform(4.001, 100.0))
        delta = float(rng.uniform(1e-4, 50.0))
        alpha = ALPHA_CEILING * float(rng.uniform(1e-4, 1.0))
        got = theorem_rank_lower_bound(TheoremBoundParams(n, c, delta, alpha))
        lg = mp.log(n, 2)
        exact = min(mp.mpf(n),
                    mp.mpf(alpha) * mp.mpf(delta) ** 4 / mp.mpf(c) ** 9 * n / lg ** 2)
        rel = abs(got - float(exact)) / float(exact)
        assert rel <= 1e-12, f"point {t}: relative error {rel}"
    _ok(11, "closed-form bound matches 60-digit evaluation to 12 significant "
            "digits on 20 points")


def test_12_audit_byte_determinism_across_threads(tmp_path):
    rng = np.random.default_rng(1212)
    g = _gnp_graph(rng, 60, 0.12)
    gpath = tmp_path / "g.txt"
    save_edge_list(g, gpath)
    outputs = []
    for threads, sub in [(1, "t1"), (4, "t4")]:
        out = tmp_path / sub
        cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                              dim=10, num_samples=6, seed=1213, threads=threads))
        outputs.append(out)
    a, b = outputs
    names = sorted(p.name for p in a.glob("*.csv"))
    assert len(names) >= 10          # 5 curves + 5 degree distributions
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), \
            f"{name} differs across thread counts"
    _ok(12, f"{len(names)} CSVs byte-identical between 1-thread and 4-thread runs")
