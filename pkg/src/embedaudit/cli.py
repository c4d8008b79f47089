"""Command-line driver: end-to-end audits, rank sweeps, theory checks.

Subcommands
-----------
audit         load a graph, embed it (or ingest external vectors), fit the
              requested edge models, sample graphs, and write plot-ready
              CSVs plus a JSON report
ranksweep     audit the truncated-dot-product model across embedding ranks
verify-theory run all randomized theory sweeps and emit a pass/fail report
embed         compute and save a spectral embedding
sample        draw one graph from an embedding + model and save its edges
curve         triangle-foundation curve of a graph as CSV

All CSV output is byte-deterministic for a fixed configuration; the thread
count only changes scheduling, never results.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .blocks import DEFAULT_BLOCK_SIZE
from .embedding import Embedding, load_embedding, save_embedding, spectral_embed
from .graph import (
    Graph,
    degree_distribution,
    expected_degree_distribution,
    load_edge_list,
    save_edge_list,
    triangle_count,
    triangle_foundation_curve,
)
from .models import (
    TruncatedDot,
    build_softmax,
    edge_probability,
    fit_lrdp,
    fit_lrhp,
    model_digest,
    model_to_json,
    softmax_clamp_count,
)
from .sampling import SampleSpec, curve_over_samples, expected_degrees, sample_graph, union_grid
from .verify import run_all_sweeps, sweep_report

MODEL_NAMES = ("tdp", "lrdp", "lrhp", "softmax")


class AuditStageError(RuntimeError):
    """A pipeline stage failed; partial outputs have been removed."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class AuditConfig:
    graph_path: str
    output_dir: str
    dim: int = 100
    models: tuple = MODEL_NAMES
    num_samples: int = 100
    seed: int = 0
    external_embedding_path: str | None = None
    rank_sweep_list: tuple | None = None
    negative_ratio: int = 10
    threads: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if not self.models:
            raise ValueError("select at least one model")
        bad = [m for m in self.models if m not in MODEL_NAMES]
        if bad:
            raise ValueError(f"unknown models: {bad}")
        if self.negative_ratio < 1:
            raise ValueError("negative_ratio must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_json(self) -> dict:
        return {
            "graph_path": str(self.graph_path),
            "output_dir": str(self.output_dir),
            "dim": self.dim,
            "models": list(self.models),
            "num_samples": self.num_samples,
            "seed": self.seed,
            "external_embedding_path": (str(self.external_embedding_path)
                                        if self.external_embedding_path else None),
            "rank_sweep_list": list(self.rank_sweep_list) if self.rank_sweep_list else None,
            "negative_ratio": self.negative_ratio,
            "threads": self.threads,
            "block_size": self.block_size,
        }


@dataclass(frozen=True)
class AuditReport:
    files: dict
    fit_reports: dict
    metadata: dict

    def to_json(self) -> dict:
        return {"files": self.files, "fit_reports": self.fit_reports,
                **self.metadata}


def _model_sample_seed(seed: int, model_name: str) -> int:
    """Independent 64-bit sampling seed per (run seed, model)."""
    tag = MODEL_NAMES.index(model_name)
    return int(np.random.SeedSequence((seed, 1000 + tag)).generate_state(1, np.uint64)[0])


def _write_curve_csv(path: Path, grid, values) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("c,delta\n")
        for c, v in zip(grid, values):
            fh.write(f"{int(c)},{v:.15g}\n")


def _write_degdist_csv(path: Path, dist) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("degree,count\n")
        for degree, count in dist.as_rows():
            if isinstance(count, int) or float(count).is_integer():
                fh.write(f"{degree},{int(count)}\n")
            else:
                fh.write(f"{degree},{count:.15g}\n")


class _OutputTracker:
    """Records files written by a run so failures can clean them up."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.written.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.written:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _fit_models(e, g, config):
    """Build every requested model; returns (models, fit_reports, extras)."""
    models, reports, extras = {}, {}, {}
    for name in config.models:
        if name == "tdp":
            models[name] = TruncatedDot()
        elif name == "lrdp":
            models[name], rep = fit_lrdp(e, g, config.negative_ratio, config.seed)
            reports[name] = rep
        elif name == "lrhp":
            models[name], rep = fit_lrhp(e, g, config.negative_ratio, config.seed)
            reports[name] = rep
        elif name == "softmax":
            models[name] = build_softmax(e, g, config.block_size)
            extras["softmax_clamped_pairs"] = softmax_clamp_count(
                models[name], e, config.block_size)
    return models, reports, extras


def cmd_audit(config: AuditConfig) -> AuditReport:
    """Full audit pipeline; deterministic for a fixed config."""
    t_start = time.perf_counter()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracker = _OutputTracker(out_dir)
    stage = "load"
    try:
        loaded = load_edge_list(config.graph_path)
        g = loaded.graph

        stage = "embed"
        if config.external_embedding_path:
            e = load_embedding(config.external_embedding_path)
            if e.n != g.n:
                raise ValueError(
                    f"embedding has n={e.n}, graph has n={g.n}")
        else:
            if config.dim > g.n:
                raise ValueError(f"dim={config.dim} exceeds n={g.n}")
            e = spectral_embed(g, config.dim)

        stage = "fit"
        models, fit_reports, extras = _fit_models(e, g, config)

        stage = "sample"
        curve_sets = {}
        for name, model in models.items():
            spec = SampleSpec(seed=_model_sample_seed(config.seed, name),
                              num_samples=config.num_samples,
                              block_size=config.block_size)
            curve_sets[name] = curve_over_samples(e, model, spec, n_ref=g.n,
                                                  threads=config.threads)

        stage = "curves"
        original = triangle_foundation_curve(g, g.n)
        grid = union_grid([original] + [cs.max_curve for cs in curve_sets.values()])
        files = {}
        curve_rows = {"original": [original.value_at(int(c)) for c in grid]}
        delta_std = {}
        for name, cs in curve_sets.items():
            max_curve = cs.max_curve
            curve_rows[name] = [max_curve.value_at(int(c)) for c in grid]
            delta_std[name] = float(np.sqrt(cs.variance.max())) if cs.variance.size else 0.0

        stage = "degrees"
        observed = degree_distribution(g)
        expected_dists = {name: expected_degree_distribution(
            expected_degrees(e, model, block_size=config.block_size,
                             threads=config.threads))
            for name, model in models.items()}

        stage = "write"
        p = tracker.path("curve_original.csv")
        _write_curve_csv(p, grid, curve_rows["original"])
        files["curve_original"] = p.name
        for name in models:
            p = tracker.path(f"curve_{name}.csv")
            _write_curve_csv(p, grid, curve_rows[name])
            files[f"curve_{name}"] = p.name
        p = tracker.path("degdist_observed.csv")
        _write_degdist_csv(p, observed)
        files["degdist_observed"] = p.name
        for name, dist in expected_dists.items():
            p = tracker.path(f"degdist_expected_{name}.csv")
            _write_degdist_csv(p, dist)
            files[f"degdist_expected_{name}"] = p.name

        metadata = {
            "config": config.to_json(),
            "n": g.n,
            "m": g.m,
            "triangles": original.total_triangles(),
            "dropped_self_loops": loaded.dropped_self_loops,
            "dropped_duplicates": loaded.dropped_duplicates,
            "embedding_kind": e.kind,
            "embedding_dim": e.d,
            "models": {name: model_to_json(m) if name != "softmax" else
                       {"variant": "softmax", "digest": model_digest(m)}
                       for name, m in models.items()},
            "max_delta_std_per_model": delta_std,
            **extras,
            "versions": {"embedaudit": __version__,
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "seed": config.seed,
            "wall_time_s": round(time.perf_counter() - t_start, 3),
        }
        report = AuditReport(files, {k: vars(r) for k, r in fit_reports.items()},
                             metadata)
        p = tracker.path("report.json")
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return report
    except Exception as exc:
        tracker.cleanup()
        raise AuditStageError(stage, exc) from exc


def cmd_ranksweep(config: AuditConfig) -> AuditReport:
    """Truncated-dot-product curves across embedding ranks."""
    if not config.rank_sweep_list:
        raise ValueError("ranksweep needs a non-empty rank list")
    t_start = time.perf_counter()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracker = _OutputTracker(out_dir)
    stage = "load"
    try:
        loaded = load_edge_list(config.graph_path)
        g = loaded.graph
        bad = [d for d in config.rank_sweep_list if not 1 <= d <= g.n]
        if bad:
            raise ValueError(f"ranks out of range for n={g.n}: {bad}")

        curves = {}
        for d in config.rank_sweep_list:
            stage = f"embed[d={d}]"
            e = spectral_embed(g, d)
            stage = f"sample[d={d}]"
            spec = SampleSpec(seed=_model_sample_seed(config.seed, "tdp"),
                              num_samples=config.num_samples,
                              block_size=config.block_size)
            curves[d] = curve_over_samples(e, TruncatedDot(), spec, n_ref=g.n,
                                           threads=config.threads).max_curve

        stage = "curves"
        original = triangle_foundation_curve(g, g.n)
        grid = union_grid([original] + list(curves.values()))

        stage = "write"
        files = {}
        p = tracker.path("curve_original.csv")
        _write_curve_csv(p, grid, [original.value_at(int(c)) for c in grid])
        files["curve_original"] = p.name
        for d, curve in curves.items():
            p = tracker.path(f"curve_rank{d}.csv")
            _write_curve_csv(p, grid, [curve.value_at(int(c)) for c in grid])
            files[f"curve_rank{d}"] = p.name

        metadata = {
            "config": config.to_json(),
            "n": g.n,
            "m": g.m,
            "triangles": original.total_triangles(),
            "ranks": list(config.rank_sweep_list),
            "versions": {"embedaudit": __version__,
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "seed": config.seed,
            "wall_time_s": round(time.perf_counter() - t_start, 3),
        }
        report = AuditReport(files, {}, metadata)
        p = tracker.path("report.json")
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return report
    except Exception as exc:
        tracker.cleanup()
        raise AuditStageError(stage, exc) from exc


def cmd_verify(seed: int = 0, out_path=None) -> dict:
    """Run every theory sweep; report per-property trials and worst margins."""
    results = run_all_sweeps(seed)
    report = sweep_report(results, seed)
    doc = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(doc + "\n", encoding="utf-8")
    return report


# --------------------------------------------------------------- arguments

def _add_common_audit_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge-list file to audit")
    p.add_argument("--dim", type=int, default=100, help="embedding dimension")
    p.add_argument("--samples", type=int, default=100, help="graphs to sample per model")
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--negative-ratio", type=int, default=10,
                   help="sampled non-edges per edge during logistic fitting")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for pair passes (never changes results)")
    p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE,
                   help="pair-tile side length (part of the RNG configuration)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedaudit",
        description="Audit how well dot-product embeddings reproduce "
                    "low-degree triangle structure.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="full audit against one graph")
    _add_common_audit_args(p)
    p.add_argument("--models", default="tdp,lrdp,lrhp,softmax",
                   help="comma-separated subset of tdp,lrdp,lrhp,softmax")
    p.add_argument("--embedding", default=None,
                   help="ingest an externally produced embedding file "
                        "instead of computing the spectral one")

    p = sub.add_parser("ranksweep", help="TDP curves across embedding ranks")
    _add_common_audit_args(p)
    p.add_argument("--ranks", required=True,
                   help="comma-separated embedding ranks, e.g. 10,50,100")

    p = sub.add_parser("verify-theory", help="run all theory property sweeps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the JSON report here")

    p = sub.add_parser("embed", help="compute and save a spectral embedding")
    p.add_argument("--graph", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--out", required=True, help="embedding file to write")

    p = sub.add_parser("sample", help="draw one graph from embedding + model")
    p.add_argument("--embedding", required=True)
    p.add_argument("--model", default="tdp", choices=MODEL_NAMES)
    p.add_argument("--graph", default=None,
                   help="graph to fit against (required for lrdp/lrhp/softmax)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-index", type=int, default=0)
    p.add_argument("--negative-ratio", type=int, default=10)
    p.add_argument("--out", required=True, help="edge-list file to write")

    p = sub.add_parser("curve", help="triangle-foundation curve of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    return parser


def _run_audit(args) -> int:
    config = AuditConfig(
        graph_path=args.graph, output_dir=args.out, dim=args.dim,
        models=tuple(m.strip() for m in args.models.split(",") if m.strip()),
        num_samples=args.samples, seed=args.seed,
        external_embedding_path=args.embedding,
        negative_ratio=args.negative_ratio, threads=args.threads,
        block_size=args.block_size)
    report = cmd_audit(config)
    print(f"audit complete: n={report.metadata['n']} m={report.metadata['m']} "
          f"triangles={report.metadata['triangles']}; wrote "
          f"{len(report.files) + 1} files to {args.out}")
    return 0


def _run_ranksweep(args) -> int:
    ranks = tuple(int(r) for r in args.ranks.split(",") if r.strip())
    config = AuditConfig(
        graph_path=args.graph, output_dir=args.out, dim=args.dim,
        models=("tdp",), num_samples=args.samples, seed=args.seed,
        rank_sweep_list=ranks, negative_ratio=args.negative_ratio,
        threads=args.threads, block_size=args.block_size)
    report = cmd_ranksweep(config)
    print(f"ranksweep complete over ranks {list(ranks)}; wrote "
          f"{len(report.files) + 1} files to {args.out}")
    return 0


def _run_verify(args) -> int:
    report = cmd_verify(args.seed, args.out)
    for prop in report["properties"]:
        status = "pass" if prop["passed"] else "FAIL"
        print(f"{status}  {prop['name']}: trials={prop['trials']} "
              f"worst_margin={prop['worst_margin']:.6g}")
    if not report["all_passed"]:
        print("verify-theory: FAILURE (see counterexamples in the report)")
        return 1
    print(f"verify-theory: all {len(report['properties'])} properties passed")
    return 0


def _run_embed(args) -> int:
    g = load_edge_list(args.graph).graph
    e = spectral_embed(g, args.dim)
    save_embedding(e, args.out)
    print(f"wrote {e.kind} embedding n={e.n} d={e.d} to {args.out}")
    return 0


def _run_sample(args) -> int:
    e = load_embedding(args.embedding)
    if args.model == "tdp":
        model = TruncatedDot()
    else:
        if not args.graph:
            raise SystemExit(f"--graph is required to fit the {args.model} model")
        g = load_edge_list(args.graph).graph
        if args.model == "lrdp":
            model, _ = fit_lrdp(e, g, args.negative_ratio, args.seed)
        elif args.model == "lrhp":
            model, _ = fit_lrhp(e, g, args.negative_ratio, args.seed)
        else:
            model = build_softmax(e, g)
    sampled = sample_graph(e, model, args.seed, args.sample_index)
    save_edge_list(sampled, args.out, header_lines=[
        f"sampled by embedaudit {__version__}",
        f"seed={args.seed} sample_index={args.sample_index}",
        f"model={args.model} digest={model_digest(model)}",
    ])
    print(f"wrote sampled graph n={sampled.n} m={sampled.m} to {args.out}")
    return 0


def _run_curve(args) -> int:
    g = load_edge_list(args.graph).graph
    curve = triangle_foundation_curve(g, g.n)
    if args.out:
        _write_curve_csv(Path(args.out), curve.thresholds, curve.deltas)
        print(f"wrote {len(curve.points)} curve points to {args.out}")
    else:
        sys.stdout.write("c,delta\n")
        for c, v in curve.points:
            sys.stdout.write(f"{c},{v:.15g}\n")
    return 0


_DISPATCH = {
    "audit": _run_audit,
    "ranksweep": _run_ranksweep,
    "verify-theory": _run_verify,
    "embed": _run_embed,
    "sample": _run_sample,
    "curve": _run_curve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _DISPATCH[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
