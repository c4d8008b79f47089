import json

import numpy as np
import pytest

import oracles
from embedaudit import cli
from embedaudit.cli import AuditConfig, AuditStageError, cmd_audit, cmd_ranksweep, cmd_verify
from embedaudit.embedding import load_embedding
from embedaudit.graph import Graph, load_edge_list, save_edge_list, triangle_foundation_curve


def write_k4(tmp_path):
    p = tmp_path / "k4.txt"
    p.write_text("".join(f"{i} {j}\n" for i in range(4) for j in range(i + 1, 4)))
    return p


def write_random_graph(tmp_path, n=40, p=0.15, seed=5):
    rng = np.random.default_rng(seed)
    g = Graph.from_edges(n, np.argwhere(np.triu(oracles.random_gnp(rng, n, p), 1)))
    path = tmp_path / "g.txt"
    save_edge_list(g, path)
    # isolated vertices cannot survive the edge-list format; use the graph
    # exactly as a consumer of the file would see it
    return path, load_edge_list(path).graph


def write_triangle_pack(tmp_path, count=10):
    edges = [(3 * t + a, 3 * t + b) for t in range(count)
             for a, b in ((0, 1), (1, 2), (0, 2))]
    path = tmp_path / "tri.txt"
    path.write_text("".join(f"{u} {v}\n" for u, v in edges))
    return path


# ------------------------------------------------------------------ audit

def test_audit_k4_full_rank_tdp(tmp_path):
    out = tmp_path / "out"
    config = AuditConfig(graph_path=str(write_k4(tmp_path)), output_dir=str(out),
                         dim=4, models=("tdp",), num_samples=10, seed=1)
    report = cmd_audit(config)
    original = dict(_read_curve(out / "curve_original.csv"))
    model = dict(_read_curve(out / "curve_tdp.csv"))
    assert original[3] == 1.0          # 4 triangles / 4 vertices at degree 3
    assert model[3] == 1.0             # exact reconstruction at d = n
    assert report.metadata["triangles"] == 4
    assert (out / "report.json").exists()
    for name in report.files.values():
        assert (out / name).exists()


def _read_curve(path):
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "c,delta"
    return [(int(r.split(",")[0]), float(r.split(",")[1])) for r in rows[1:]]


def test_audit_deterministic_across_threads(tmp_path):
    gpath, _ = write_random_graph(tmp_path)
    outs = []
    for threads, name in [(1, "a"), (3, "b")]:
        out = tmp_path / name
        cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                              dim=8, num_samples=6, seed=9, threads=threads))
        outs.append(out)
    a, b = outs
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_audit_report_contents(tmp_path):
    gpath, g = write_random_graph(tmp_path)
    out = tmp_path / "out"
    report = cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                                   dim=6, num_samples=4, seed=3))
    doc = json.loads((out / "report.json").read_text())
    assert doc["n"] == g.n and doc["m"] == g.m
    assert set(doc["fit_reports"]) == {"lrdp", "lrhp"}
    for rep in doc["fit_reports"].values():
        assert rep["converged"]
    assert "softmax_clamped_pairs" in doc
    assert doc["seed"] == 3


def test_audit_original_curve_matches_standalone(tmp_path):
    gpath, g = write_random_graph(tmp_path, n=30, p=0.25, seed=11)
    out = tmp_path / "out"
    cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                          dim=5, models=("tdp",), num_samples=3, seed=2))
    standalone = triangle_foundation_curve(g, g.n)
    written = _read_curve(out / "curve_original.csv")
    for c, delta in written:
        assert delta == pytest.approx(standalone.value_at(c), abs=1e-12)
    # every native threshold appears in the union grid
    cs = {c for c, _ in written}
    assert {c for c, _ in standalone.points} <= cs


def test_audit_stage_error_on_missing_graph(tmp_path):
    out = tmp_path / "out"
    config = AuditConfig(graph_path=str(tmp_path / "nope.txt"),
                         output_dir=str(out), dim=2, num_samples=1)
    with pytest.raises(AuditStageError) as err:
        cmd_audit(config)
    assert err.value.stage == "load"
    assert not list(out.glob("*"))     # no partial outputs


def test_audit_stage_error_on_bad_dim_cleans_up(tmp_path):
    gpath, _ = write_random_graph(tmp_path)
    out = tmp_path / "out"
    with pytest.raises(AuditStageError) as err:
        cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                              dim=1000, num_samples=1))
    assert err.value.stage == "embed"
    assert not list(out.glob("*"))


def test_audit_with_external_embedding(tmp_path):
    gpath, g = write_random_graph(tmp_path, n=20, p=0.3, seed=21)
    epath = tmp_path / "ext.txt"
    rng = np.random.default_rng(0)
    from embedaudit.embedding import Embedding, save_embedding
    save_embedding(Embedding.plain(rng.normal(size=(g.n, 4)) * 0.3), epath)
    out = tmp_path / "out"
    report = cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                                   dim=99, models=("lrdp", "softmax"),
                                   num_samples=3, seed=5,
                                   external_embedding_path=str(epath)))
    assert report.metadata["embedding_kind"] == "plain"
    assert report.metadata["embedding_dim"] == 4
    assert (out / "curve_lrdp.csv").exists()
    assert not (out / "curve_tdp.csv").exists()


def test_audit_rejects_mismatched_external_embedding(tmp_path):
    gpath, _ = write_random_graph(tmp_path, n=20)
    from embedaudit.embedding import Embedding, save_embedding
    epath = tmp_path / "ext.txt"
    save_embedding(Embedding.plain(np.zeros((7, 2))), epath)
    with pytest.raises(AuditStageError) as err:
        cmd_audit(AuditConfig(graph_path=str(gpath), output_dir=str(tmp_path / "o"),
                              external_embedding_path=str(epath), num_samples=1))
    assert err.value.stage == "embed"


def test_audit_config_validation():
    with pytest.raises(ValueError):
        AuditConfig(graph_path="g", output_dir="o", models=())
    with pytest.raises(ValueError):
        AuditConfig(graph_path="g", output_dir="o", models=("euclid",))
    with pytest.raises(ValueError):
        AuditConfig(graph_path="g", output_dir="o", num_samples=0)


# -------------------------------------------------------------- ranksweep

def test_ranksweep_full_rank_equals_original(tmp_path):
    gpath = write_k4(tmp_path)
    out = tmp_path / "out"
    cmd_ranksweep(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                              models=("tdp",), num_samples=5, seed=2,
                              rank_sweep_list=(4,)))
    assert (out / "curve_rank4.csv").read_bytes() == \
        (out / "curve_original.csv").read_bytes()


def test_ranksweep_rank1_starves_low_degree_triangles(tmp_path):
    gpath = write_triangle_pack(tmp_path, count=10)
    out = tmp_path / "out"
    cmd_ranksweep(AuditConfig(graph_path=str(gpath), output_dir=str(out),
                              models=("tdp",), num_samples=10, seed=4,
                              rank_sweep_list=(1, 30)))
    original = dict(_read_curve(out / "curve_original.csv"))
    rank1 = dict(_read_curve(out / "curve_rank1.csv"))
    rank_n = dict(_read_curve(out / "curve_rank30.csv"))
    assert original[2] == pytest.approx(1 / 3)
    assert rank1[2] < original[2] / 2
    assert rank_n[2] == original[2]


def test_ranksweep_rejects_out_of_range_rank(tmp_path):
    gpath = write_k4(tmp_path)
    with pytest.raises(AuditStageError):
        cmd_ranksweep(AuditConfig(graph_path=str(gpath),
                                  output_dir=str(tmp_path / "o"),
                                  num_samples=1, rank_sweep_list=(9,)))


# ----------------------------------------------------------------- verify

def test_verify_all_properties_pass(tmp_path):
    out = tmp_path / "verify.json"
    report = cmd_verify(seed=1, out_path=out)
    assert report["all_passed"]
    assert len(report["properties"]) >= 5
    assert json.loads(out.read_text())["all_passed"]
    for prop in report["properties"]:
        assert prop["trials"] > 0
        assert prop["counterexample"] is None


def test_verify_detects_injected_rank_lemma_fault(monkeypatch):
    from embedaudit import theory, verify

    def swapped(m):
        a = np.asarray(m, dtype=float)
        denom = float(np.trace(a)) ** 2
        return float(np.sum(a * a)) / denom if denom else 0.0

    monkeypatch.setattr(theory, "rank_lemma_bound", swapped)
    result = verify.sweep_rank_lemma(seed=1, trials=50)
    assert not result.passed
    assert result.counterexample is not None
    assert "matrix" in result.counterexample


def test_verify_cli_exit_codes(tmp_path, capsys, monkeypatch):
    assert cli.main(["verify-theory", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert "all 7 properties passed" in out

    from embedaudit import theory
    monkeypatch.setattr(theory, "rank_lemma_bound", lambda m: 1e9)
    assert cli.main(["verify-theory", "--seed", "2"]) == 1


# ------------------------------------------------------- small subcommands

def test_embed_sample_curve_round_trip(tmp_path, capsys):
    gpath, g = write_random_graph(tmp_path, n=25, p=0.25, seed=31)
    epath = tmp_path / "emb.txt"
    assert cli.main(["embed", "--graph", str(gpath), "--dim", "25",
                     "--out", str(epath)]) == 0
    e = load_embedding(epath)
    assert e.n == 25 and e.d == 25

    spath = tmp_path / "sample.txt"
    assert cli.main(["sample", "--embedding", str(epath), "--model", "tdp",
                     "--seed", "3", "--out", str(spath)]) == 0
    text = spath.read_text()
    assert text.startswith("#")
    assert "digest=" in text
    sampled = load_edge_list(spath).graph
    # full-rank TDP reproduces the input graph exactly
    assert np.array_equal(sampled.edge_array(), g.edge_array())

    cpath = tmp_path / "curve.csv"
    assert cli.main(["curve", "--graph", str(gpath), "--out", str(cpath)]) == 0
    rows = _read_curve(cpath)
    native = triangle_foundation_curve(g, g.n)
    assert rows == [(c, d) for c, d in native.points]


def test_sample_fitted_model_requires_graph(tmp_path):
    gpath, _ = write_random_graph(tmp_path, n=15, p=0.3, seed=41)
    epath = tmp_path / "emb.txt"
    cli.main(["embed", "--graph", str(gpath), "--dim", "5", "--out", str(epath)])
    with pytest.raises(SystemExit):
        cli.main(["sample", "--embedding", str(epath), "--model", "softmax",
                  "--seed", "1", "--out", str(tmp_path / "s.txt")])
    assert cli.main(["sample", "--embedding", str(epath), "--model", "softmax",
                     "--graph", str(gpath), "--seed", "1",
                     "--out", str(tmp_path / "s.txt")]) == 0


def test_cli_audit_argument_parsing(tmp_path):
    gpath = write_k4(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["audit", "--graph", str(gpath), "--dim", "4",
                     "--models", "tdp,softmax", "--samples", "3",
                     "--seed", "11", "--out", str(out)]) == 0
    assert (out / "curve_tdp.csv").exists()
    assert (out / "curve_softmax.csv").exists()
    assert not (out / "curve_lrdp.csv").exists()
