"""Edge-probability models over pair scores.

Four variants map the score of a vertex pair to an edge probability:

* truncated dot product: clamp the score to [0, 1];
* logistic regression on the dot product (one slope, one intercept);
* logistic regression on the coordinatewise (Hadamard) product features;
* degree-scaled softmax: per-vertex exponential weights normalized so each
  vertex's expected degree matches its observed degree, then symmetrized.

The logistic models are fitted by weighted maximum likelihood on all edges
plus importance-weighted subsampled non-edges, then their intercept is
recalibrated by bisection so the exact sum of pair probabilities matches the
observed edge count.  All models are immutable and evaluate pure, symmetric
probabilities in [0, 1].
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .blocks import DEFAULT_BLOCK_SIZE, iter_pair_tiles, strict_upper_mask
from .embedding import Embedding
from .graph import Graph

# pair-logit vectors up to this many entries are materialized once during
# intercept calibration instead of being recomputed per bisection step
_CALIBRATION_CACHE_LIMIT = 20_000_000


def tdp_probability(score: float) -> float:
    """Truncated dot product: clamp a finite score to [0, 1]."""
    if not np.isfinite(score):
        raise ValueError(f"score must be finite, got {score}")
    return float(min(1.0, max(0.0, score)))


@dataclass(frozen=True)
class TruncatedDot:
    """p = max(0, min(score, 1))."""

    variant = "tdp"

    def prob_block(self, e: Embedding, rows, cols) -> np.ndarray:
        return np.clip(e.score_block(rows, cols), 0.0, 1.0)


@dataclass(frozen=True)
class LogisticDot:
    """p = ceiling * sigmoid(slope * score + intercept).

    Stored in slope/intercept form so a zero slope can still carry a
    calibrated constant probability; the midpoint offset x0 (score at which
    p = ceiling/2) is recoverable whenever the slope is nonzero.
    """

    slope: float
    intercept: float
    ceiling: float = 1.0

    variant = "lrdp"

    def __post_init__(self):
        if not 0.0 < self.ceiling <= 1.0:
            raise ValueError("ceiling must be in (0, 1]")

    @property
    def x0(self) -> float:
        return -self.intercept / self.slope if self.slope != 0 else float("nan")

    def prob_block(self, e: Embedding, rows, cols) -> np.ndarray:
        z = self.slope * e.score_block(rows, cols) + self.intercept
        return self.ceiling * expit(z)


@dataclass(frozen=True)
class LogisticHadamard:
    """p = sigmoid(w . (v_i ⊙ v_j) + b).

    For spectral embeddings coordinate r of the pair feature is
    lambda_r psi_i[r] psi_j[r], so unit weights recover the pair score.
    """

    weights: np.ndarray
    intercept: float

    variant = "lrhp"

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite 1-d array")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def _effective_weights(self, e: Embedding) -> np.ndarray:
        if e.kind == "spectral":
            return self.weights * e.eigenvalues
        return self.weights

    def prob_block(self, e: Embedding, rows, cols) -> np.ndarray:
        lw = self._effective_weights(e)
        z = (e.vectors[rows] * lw) @ e.vectors[cols].T + self.intercept
        return expit(z)


@dataclass(frozen=True)
class DegreeSoftmax:
    """Directed intensity q_ij = s_i exp(score_ij) with s_i chosen so that
    sum_{j != i} q_ij equals vertex i's observed degree; the symmetric edge
    probability is min(1, (q_ij + q_ji) / 2).

    ``log_scale[i]`` is log s_i (-inf for isolated vertices).
    """

    log_scale: np.ndarray

    variant = "softmax"

    def __post_init__(self):
        ls = np.ascontiguousarray(self.log_scale, dtype=np.float64)
        if ls.ndim != 1 or np.any(np.isnan(ls)) or np.any(ls == np.inf):
            raise ValueError("log_scale must be 1-d and bounded above")
        ls.flags.writeable = False
        object.__setattr__(self, "log_scale", ls)

    @property
    def scale(self) -> np.ndarray:
        """Per-vertex proportionality constants s_i >= 0."""
        with np.errstate(over="raise"):
            return np.exp(self.log_scale)

    def intensity_block(self, e: Embedding, rows, cols) -> np.ndarray:
        """Directed q values for the block; diagonal entries are meaningless."""
        s = e.score_block(rows, cols)
        return np.exp(self.log_scale[np.asarray(rows)][:, None] + s)

    def prob_block(self, e: Embedding, rows, cols) -> np.ndarray:
        s = e.score_block(rows, cols)
        q_ij = np.exp(self.log_scale[np.asarray(rows)][:, None] + s)
        q_ji = np.exp(self.log_scale[np.asarray(cols)][None, :] + s)
        return np.minimum(1.0, 0.5 * (q_ij + q_ji))


EDGE_MODEL_VARIANTS = ("tdp", "lrdp", "lrhp", "softmax")


def edge_probability(model, e: Embedding, i: int, j: int) -> float:
    """Probability of the pair (i, j) under the model; self-pairs rejected."""
    if i == j:
        raise ValueError("self-pairs are excluded from every edge model")
    if not (0 <= i < e.n and 0 <= j < e.n):
        raise IndexError(f"vertex index out of range: ({i}, {j})")
    return float(model.prob_block(e, np.array([i]), np.array([j]))[0, 0])


@dataclass(frozen=True)
class FitReport:
    target_edges: float
    achieved_expected_edges: float
    iterations: int
    converged: bool


def build_softmax(e: Embedding, g: Graph,
                  block_size: int = DEFAULT_BLOCK_SIZE) -> DegreeSoftmax:
    """Degree-calibrated softmax model for e against g's degree sequence.

    Normalizers are computed with max-subtraction (logsumexp) so large
    scores cannot overflow.  Isolated vertices get a zero intensity row.
    """
    if e.n != g.n:
        raise ValueError("embedding and graph must agree on n")
    n = e.n
    deg = g.degrees.astype(np.float64)
    log_z = np.empty(n)
    for i0 in range(0, n, block_size):
        i1 = min(i0 + block_size, n)
        s = e.score_block(np.arange(i0, i1), np.arange(n))
        for r, i in enumerate(range(i0, i1)):
            s[r, i] = -np.inf          # exclude the self-pair from the normalizer
        log_z[i0:i1] = logsumexp(s, axis=1)
    with np.errstate(divide="ignore"):
        log_scale = np.where(deg > 0, np.log(np.maximum(deg, 1e-300)) - log_z, -np.inf)
    return DegreeSoftmax(log_scale)


def softmax_clamp_count(model: DegreeSoftmax, e: Embedding,
                        block_size: int = DEFAULT_BLOCK_SIZE) -> int:
    """Number of unordered pairs whose symmetrized intensity was clamped at 1."""
    count = 0
    for _, (i0, i1), (j0, j1) in iter_pair_tiles(e.n, block_size):
        rows, cols = np.arange(i0, i1), np.arange(j0, j1)
        s = e.score_block(rows, cols)
        raw = 0.5 * (np.exp(model.log_scale[rows][:, None] + s)
                     + np.exp(model.log_scale[cols][None, :] + s))
        mask = strict_upper_mask((i0, i1), (j0, j1))
        over = raw > 1.0
        count += int(over.sum() if mask is None else (over & mask).sum())
    return count


# ------------------------------------------------------------------ fitting

def _sample_nonedges(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample (with replacement) of `count` non-edge pairs i < j."""
    n = g.n
    n_pairs = n * (n - 1) // 2
    n_non = n_pairs - g.m
    if count == 0 or n_non == 0:
        return np.empty((0, 2), dtype=np.int64)

    if n <= 1500:
        a = g.adjacency_matrix().astype(bool)
        iu, ju = np.triu_indices(n, k=1)
        keep = ~a[iu, ju]
        pool_i, pool_j = iu[keep], ju[keep]
        pick = rng.integers(0, pool_i.size, size=count)
        return np.column_stack([pool_i[pick], pool_j[pick]])

    e = g.edge_array()
    edge_keys = np.sort(e[:, 0] * n + e[:, 1]) if e.size else np.empty(0, np.int64)
    chunks, need = [], count
    for _ in range(1000):
        if need <= 0:
            break
        b = max(4 * need, 256)
        i = rng.integers(0, n, size=b)
        j = rng.integers(0, n, size=b)
        ok = i != j
        u, v = np.minimum(i, j)[ok], np.maximum(i, j)[ok]
        keys = u * n + v
        pos = np.searchsorted(edge_keys, keys)
        pos_c = np.minimum(pos, max(edge_keys.size - 1, 0))
        is_edge = (pos < edge_keys.size) & (edge_keys[pos_c] == keys) if edge_keys.size else np.zeros(keys.size, bool)
        u, v = u[~is_edge], v[~is_edge]
        take = min(need, u.size)
        chunks.append(np.column_stack([u[:take], v[:take]]))
        need -= take
    if need > 0:
        raise RuntimeError("non-edge rejection sampling failed to fill the quota")
    return np.concatenate(chunks)


def _weighted_logistic(x: np.ndarray, y: np.ndarray, w: np.ndarray,
                       max_iter: int = 100, grad_tol: float = 1e-8):
    """Damped-Newton weighted logistic MLE; returns (coef, intercept, iters).

    Exactly-constant feature columns are excluded (their coefficient stays
    0) so degenerate inputs reduce to an intercept-only fit.
    """
    npts, nfeat = x.shape
    active = np.array([np.ptp(x[:, c]) > 0 for c in range(nfeat)]) if npts else np.zeros(nfeat, bool)
    xa = x[:, active]
    design = np.column_stack([xa, np.ones(npts)])
    beta = np.zeros(design.shape[1])
    scale = max(1.0, float(w.sum()))

    def nll(b):
        z = design @ b
        return float(np.sum(w * (np.logaddexp(0.0, z) - y * z)))

    current = nll(beta)
    iters = 0
    for iters in range(1, max_iter + 1):
        z = design @ beta
        p = expit(z)
        grad = design.T @ (w * (p - y))
        if np.max(np.abs(grad)) <= grad_tol * scale:
            iters -= 1
            break
        curv = w * p * (1.0 - p) + 1e-12
        hess = design.T @ (design * curv[:, None])
        hess[np.diag_indices_from(hess)] += 1e-10 * (1.0 + np.trace(hess))
        step = np.linalg.solve(hess, grad)
        # backtrack until the objective stops increasing
        t = 1.0
        for _ in range(50):
            candidate = beta - t * step
            value = nll(candidate)
            if value <= current + 1e-12:
                beta, current = candidate, value
                break
            t *= 0.5
        else:
            break

    coef = np.zeros(nfeat)
    coef[active] = beta[:-1]
    return coef, float(beta[-1]), iters


def _calibrate_intercept(sum_p, m_target: float, n_pairs: int,
                         tol_rel: float = 1e-3, max_iter: int = 200):
    """Shift delta such that sum_p(delta) matches m_target.

    sum_p must be strictly increasing in delta (a sum of sigmoids is), which
    makes bisection valid.  Returns (delta, evals, converged, achieved).
    """
    tol = tol_rel * m_target if m_target > 0 else 1e-9
    evals = 0

    def f(d):
        nonlocal evals
        evals += 1
        return sum_p(d)

    achieved = f(0.0)
    if abs(achieved - m_target) <= tol:
        return 0.0, evals, True, achieved

    lo, hi = -1.0, 1.0
    f_lo, f_hi = f(lo), f(hi)
    while f_lo > m_target and lo > -800.0:
        lo *= 2.0
        f_lo = f(lo)
    while f_hi < m_target and hi < 800.0:
        hi *= 2.0
        f_hi = f(hi)

    best_d, best_f = (lo, f_lo) if abs(f_lo - m_target) < abs(f_hi - m_target) else (hi, f_hi)
    if abs(best_f - m_target) <= tol:
        return best_d, evals, True, best_f

    delta, achieved, converged = best_d, best_f, False
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid - m_target) < abs(achieved - m_target):
            delta, achieved = mid, f_mid
        if abs(f_mid - m_target) <= tol:
            converged = True
            break
        if f_mid < m_target:
            lo = mid
        else:
            hi = mid
    return delta, evals, converged, achieved


def _make_pair_logit_sum(e: Embedding, logit_block, block_size: int):
    """Return sum_p(delta) = sum over pairs i<j of sigmoid(z_ij + delta)."""
    n_pairs = e.n * (e.n - 1) // 2

    def collect():
        for _, rows, cols in iter_pair_tiles(e.n, block_size):
            z = logit_block(np.arange(*rows), np.arange(*cols))
            mask = strict_upper_mask(rows, cols)
            yield z.ravel() if mask is None else z[mask]

    if n_pairs <= _CALIBRATION_CACHE_LIMIT:
        cached = np.concatenate(list(collect())) if n_pairs else np.empty(0)

        def sum_p(delta):
            return float(expit(cached + delta).sum())
    else:
        def sum_p(delta):
            return float(sum(expit(z + delta).sum() for z in collect()))

    return sum_p


def _fit_logistic_model(e, g, negative_ratio, seed, features, logit_block, build):
    if e.n != g.n:
        raise ValueError("embedding and graph must agree on n")
    if negative_ratio < 1:
        raise ValueError("negative_ratio must be >= 1")
    n, m = g.n, g.m
    n_pairs = n * (n - 1) // 2
    n_non = n_pairs - m

    rng = np.random.default_rng(seed)
    pos = g.edge_array()
    neg = _sample_nonedges(g, negative_ratio * m, rng)
    pairs = np.concatenate([pos, neg]) if neg.size else pos
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    # subsampled non-edges stand in for all of them: weight them such that
    # the weighted likelihood is unbiased for the full pair set
    w_neg = n_non / len(neg) if len(neg) else 0.0
    w = np.concatenate([np.ones(len(pos)), np.full(len(neg), w_neg)])

    if len(pairs):
        coef, intercept, newton_iters = _weighted_logistic(features(pairs), y, w)
    else:
        coef = np.zeros(features(np.empty((0, 2), np.int64)).shape[1])
        intercept, newton_iters = 0.0, 0

    sum_p = _make_pair_logit_sum(e, lambda r, c: logit_block(coef, intercept, r, c),
                                 DEFAULT_BLOCK_SIZE)
    delta, evals, converged, achieved = _calibrate_intercept(sum_p, float(m), n_pairs)
    model = build(coef, intercept + delta)
    return model, FitReport(float(m), achieved, newton_iters + evals, converged)


def fit_lrdp(e: Embedding, g: Graph, negative_ratio: int = 10,
             seed: int = 0) -> tuple[LogisticDot, FitReport]:
    """Logistic regression on the pair score, edge-count calibrated.

    Positives are all m edges; negatives are negative_ratio * m uniformly
    sampled non-edges carrying importance weight (#non-edges)/(#sampled).
    After the MLE fit the intercept is shifted by bisection until the exact
    sum of all pair probabilities matches m within relative 1e-3.
    """
    def features(pairs):
        if pairs.size == 0:
            return np.empty((0, 1))
        s = np.einsum("ij,ij->i", e.vectors[pairs[:, 0]] * (e.eigenvalues if e.kind == "spectral" else 1.0),
                      e.vectors[pairs[:, 1]])
        return s[:, None]

    def logit_block(coef, intercept, rows, cols):
        return coef[0] * e.score_block(rows, cols) + intercept

    def build(coef, intercept):
        return LogisticDot(float(coef[0]), float(intercept))

    return _fit_logistic_model(e, g, negative_ratio, seed, features, logit_block, build)


def fit_lrhp(e: Embedding, g: Graph, negative_ratio: int = 10,
             seed: int = 0) -> tuple[LogisticHadamard, FitReport]:
    """Logistic regression on Hadamard-product features, edge-count calibrated.

    Same sampling, weighting, and calibration scheme as fit_lrdp; one weight
    per embedding coordinate instead of a single slope.
    """
    def features(pairs):
        if pairs.size == 0:
            return np.empty((0, e.d))
        f = e.vectors[pairs[:, 0]] * e.vectors[pairs[:, 1]]
        if e.kind == "spectral":
            f = f * e.eigenvalues
        return f

    def logit_block(coef, intercept, rows, cols):
        lw = coef * e.eigenvalues if e.kind == "spectral" else coef
        return (e.vectors[rows] * lw) @ e.vectors[cols].T + intercept

    def build(coef, intercept):
        return LogisticHadamard(coef, float(intercept))

    return _fit_logistic_model(e, g, negative_ratio, seed, features, logit_block, build)


# -------------------------------------------------------------- serialization

def model_to_json(model) -> dict:
    """JSON-safe parameter document (see README for the schema)."""
    if isinstance(model, TruncatedDot):
        return {"variant": "tdp"}
    if isinstance(model, LogisticDot):
        return {"variant": "lrdp", "slope": model.slope,
                "intercept": model.intercept, "ceiling": model.ceiling}
    if isinstance(model, LogisticHadamard):
        return {"variant": "lrhp", "weights": model.weights.tolist(),
                "intercept": model.intercept}
    if isinstance(model, DegreeSoftmax):
        return {"variant": "softmax", "scale": model.scale.tolist()}
    raise TypeError(f"not an edge model: {model!r}")


def model_from_json(doc: dict):
    variant = doc.get("variant")
    if variant == "tdp":
        return TruncatedDot()
    if variant == "lrdp":
        return LogisticDot(doc["slope"], doc["intercept"], doc.get("ceiling", 1.0))
    if variant == "lrhp":
        return LogisticHadamard(np.asarray(doc["weights"], dtype=float), doc["intercept"])
    if variant == "softmax":
        scale = np.asarray(doc["scale"], dtype=float)
        if np.any(scale < 0):
            raise ValueError("softmax scale entries must be >= 0")
        with np.errstate(divide="ignore"):
            return DegreeSoftmax(np.where(scale > 0, np.log(np.maximum(scale, 1e-300)), -np.inf))
    raise ValueError(f"unknown model variant {variant!r}")


def model_digest(model) -> str:
    """Stable sha256 digest of the serialized model, for provenance headers."""
    doc = json.dumps(model_to_json(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()
