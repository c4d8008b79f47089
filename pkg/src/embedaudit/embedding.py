"""Vertex embeddings and the pair score they induce.

Two kinds are supported.  A *spectral* embedding holds eigenvectors of the
adjacency matrix (rows) together with their eigenvalues, and the pair score
is the indefinite form sum_r lambda_r psi_i[r] psi_j[r], i.e. an entry of
the rank-d reconstruction of the adjacency matrix.  A *plain* embedding is
any real vector per vertex and the pair score is the ordinary dot product.
Negative eigenvalues keep their sign; eigenpairs are selected by magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .graph import Graph

SPECTRAL = "spectral"
PLAIN = "plain"

_ORTHO_TOL = 1e-8
_RESIDUAL_TOL = 1e-6
_DENSE_CUTOFF = 2000


class EigensolverError(RuntimeError):
    """Eigensolver failed to converge to the requested residual."""


class EmbeddingFormatError(ValueError):
    """Malformed embedding file."""


@dataclass(frozen=True)
class Embedding:
    """Per-vertex vectors; immutable and safe to share across threads."""

    kind: str
    vectors: np.ndarray          # (n, d), row i is vertex i's vector
    eigenvalues: np.ndarray | None = None   # (d,), spectral only

    def __post_init__(self):
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("vectors must be finite")
        if self.kind == SPECTRAL:
            ev = np.ascontiguousarray(self.eigenvalues, dtype=np.float64)
            if ev.shape != (vectors.shape[1],):
                raise ValueError("eigenvalues must match dimension")
            mags = np.abs(ev)
            if np.any(mags[:-1] < mags[1:] - 1e-12):
                raise ValueError("eigenvalues must be sorted by descending magnitude")
            gram = vectors.T @ vectors
            if np.max(np.abs(gram - np.eye(vectors.shape[1]))) > _ORTHO_TOL:
                raise ValueError("spectral columns must be orthonormal")
            ev.flags.writeable = False
            object.__setattr__(self, "eigenvalues", ev)
        elif self.kind == PLAIN:
            if self.eigenvalues is not None:
                raise ValueError("plain embeddings carry no eigenvalues")
        else:
            raise ValueError(f"unknown embedding kind {self.kind!r}")
        vectors.flags.writeable = False
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def plain(cls, vectors) -> "Embedding":
        return cls(PLAIN, np.asarray(vectors, dtype=np.float64))

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def score(self, i: int, j: int) -> float:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"vertex index out of range: ({i}, {j})")
        vi, vj = self.vectors[i], self.vectors[j]
        if self.kind == SPECTRAL:
            return float(np.dot(vi * self.eigenvalues, vj))
        return float(np.dot(vi, vj))

    def score_block(self, rows, cols) -> np.ndarray:
        """Pair scores for the index block rows x cols."""
        left = self.vectors[rows]
        if self.kind == SPECTRAL:
            left = left * self.eigenvalues
        return left @ self.vectors[cols].T

    def take(self, indices) -> "Embedding":
        """Plain sub-embedding on a subset of vertices."""
        if self.kind != PLAIN:
            # row restriction breaks spectral column orthonormality
            raise ValueError("take() is only supported for plain embeddings")
        return Embedding(PLAIN, self.vectors[np.asarray(indices)])


def pair_score(e: Embedding, i: int, j: int) -> float:
    """Score of the vertex pair (i, j); symmetric in its arguments."""
    return e.score(i, j)


def _canonical_order(values: np.ndarray) -> np.ndarray:
    """Indices sorting by descending |value|, positive first on ties."""
    return np.lexsort((-values, -np.abs(values)))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = vectors.copy()
    for c in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, c])))
        if out[k, c] < 0:
            out[:, c] = -out[:, c]
    return out


def spectral_embed(g: Graph, d: int, *, dense_cutoff: int = _DENSE_CUTOFF,
                   maxiter: int | None = None) -> Embedding:
    """Eigenpairs of the adjacency matrix for the d largest-|lambda| values.

    Uses a dense symmetric solver for n <= dense_cutoff (and whenever d is
    too close to n for a restarted iterative solver), ARPACK otherwise.
    Residuals ||A psi - lambda psi|| are checked against 1e-6 ||A||; failure
    to meet them raises EigensolverError rather than silently truncating.
    """
    n = g.n
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= d <= n, got d={d}, n={n}")

    if n <= dense_cutoff or d > n - 2:
        a = g.adjacency_matrix()
        w, u = np.linalg.eigh(a)
        order = _canonical_order(w)[:d]
        vals, vecs = w[order], u[:, order]
        norm_a = float(np.abs(w).max()) if n else 0.0
    else:
        a = scipy.sparse.csr_matrix(
            (np.ones(g.indices.size), g.indices, g.indptr), shape=(n, n))
        v0 = np.full(n, 1.0 / np.sqrt(n))
        try:
            w, u = scipy.sparse.linalg.eigsh(
                a, k=d, which="LM", v0=v0, tol=1e-10,
                maxiter=maxiter if maxiter is not None else n * 100)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise EigensolverError(
                f"ARPACK did not converge for n={n}, d={d}: {exc}") from exc
        order = _canonical_order(w)
        vals, vecs = w[order], u[:, order]
        norm_a = float(np.abs(vals).max())
        residuals = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
        if norm_a > 0 and np.any(residuals > _RESIDUAL_TOL * norm_a):
            raise EigensolverError(
                f"eigenpair residual {residuals.max():.3e} exceeds "
                f"{_RESIDUAL_TOL:.0e} * ||A|| = {_RESIDUAL_TOL * norm_a:.3e}")

    return Embedding(SPECTRAL, _fix_signs(vecs), vals)


def reconstruction(e: Embedding) -> np.ndarray:
    """Full score matrix (the rank-d adjacency reconstruction for spectral)."""
    return e.score_block(np.arange(e.n), np.arange(e.n))


# ------------------------------------------------------------------ files
#
# Text format:
#   # optional comment lines (before the header only)
#   n d {spectral|plain}
#   lambda: l_1 ... l_d          (spectral only)
#   vertex_id f_1 ... f_d        (one row per vertex, any order)

def save_embedding(e: Embedding, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{e.n} {e.d} {e.kind}\n")
        if e.kind == SPECTRAL:
            fh.write("lambda: " + " ".join(f"{v:.17g}" for v in e.eigenvalues) + "\n")
        for i in range(e.n):
            row = " ".join(f"{v:.17g}" for v in e.vectors[i])
            fh.write(f"{i} {row}\n")


def _parse_floats(tokens, count, where):
    if len(tokens) != count:
        raise EmbeddingFormatError(
            f"{where}: expected {count} values, got {len(tokens)}")
    try:
        vals = np.array([float(t) for t in tokens])
    except ValueError:
        raise EmbeddingFormatError(f"{where}: non-numeric value") from None
    if not np.all(np.isfinite(vals)):
        raise EmbeddingFormatError(f"{where}: non-finite value")
    return vals


def load_embedding(path) -> Embedding:
    """Load an embedding file; inverse of save_embedding to 1e-12."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    k = 0
    while k < len(lines) and (not lines[k].strip() or lines[k].lstrip().startswith("#")):
        k += 1
    if k >= len(lines):
        raise EmbeddingFormatError(f"{path}: missing header")
    header = lines[k].split()
    if len(header) != 3 or header[2] not in (SPECTRAL, PLAIN):
        raise EmbeddingFormatError(
            f"{path}: header must be 'n d spectral|plain', got {lines[k]!r}")
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError:
        raise EmbeddingFormatError(f"{path}: non-integer n or d in header") from None
    if n < 0 or d < 1:
        raise EmbeddingFormatError(f"{path}: invalid sizes n={n}, d={d}")
    kind = header[2]
    k += 1

    eigenvalues = None
    if kind == SPECTRAL:
        if k >= len(lines) or not lines[k].startswith("lambda:"):
            raise EmbeddingFormatError(f"{path}: spectral file needs a lambda line")
        eigenvalues = _parse_floats(lines[k].split()[1:], d, f"{path}: lambda line")
        k += 1

    vectors = np.full((n, d), np.nan)
    seen = np.zeros(n, dtype=bool)
    for lineno in range(k, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        tokens = line.split()
        where = f"{path}: line {lineno + 1}"
        try:
            vid = int(tokens[0])
        except ValueError:
            raise EmbeddingFormatError(f"{where}: non-integer vertex id") from None
        if not 0 <= vid < n:
            raise EmbeddingFormatError(f"{where}: vertex id {vid} out of range")
        if seen[vid]:
            raise EmbeddingFormatError(f"{where}: duplicate vertex id {vid}")
        vectors[vid] = _parse_floats(tokens[1:], d, where)
        seen[vid] = True
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise EmbeddingFormatError(f"{path}: missing vertex id {missing}")

    return Embedding(kind, vectors, eigenvalues)
