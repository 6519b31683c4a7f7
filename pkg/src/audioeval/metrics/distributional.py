"""Set-level metrics over precomputed embedding matrices.

The engine never computes embeddings itself: both sides of a comparison are
ingested from a plain text format (header ``#versa-emb v1 dim=<D>``, then one
``<id>\\t<floats>`` row per item) so any embedding model can feed it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import MetricInputError

EMBEDDING_HEADER_PREFIX = "#versa-emb v1 dim="
COV_RIDGE = 1e-6
EIG_CLAMP = -1e-8
VAR_FLOOR = 1e-8


@dataclass(eq=False)
class EmbeddingSet:
    ids: list[str]
    matrix: np.ndarray  # (N, D)

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] < 1 or self.matrix.shape[1] < 1:
            raise MetricInputError("embedding matrix must be (N>=1, D>=1)")
        if len(self.ids) != self.matrix.shape[0]:
            raise MetricInputError("id count does not match row count")
        if len(set(self.ids)) != len(self.ids):
            raise MetricInputError("duplicate embedding ids")
        if not np.all(np.isfinite(self.matrix)):
            raise MetricInputError("embedding matrix contains non-finite values")

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(eq=False)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Read an embedding file, checking dimension and finiteness per row."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(EMBEDDING_HEADER_PREFIX):
            raise MetricInputError(
                f"{path}:1: expected header '{EMBEDDING_HEADER_PREFIX}<D>', got {header!r}"
            )
        try:
            dim = int(header[len(EMBEDDING_HEADER_PREFIX):])
        except ValueError:
            raise MetricInputError(f"{path}:1: bad dimension in header {header!r}") from None
        if dim < 1:
            raise MetricInputError(f"{path}:1: dimension must be >= 1")
        ids: list[str] = []
        rows: list[np.ndarray] = []
        seen: set[str] = set()
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise MetricInputError(f"{path}:{lineno}: expected '<id>\\t<values>'")
            utt_id, payload = line.split("\t", 1)
            if utt_id in seen:
                raise MetricInputError(f"{path}:{lineno}: duplicate id {utt_id!r}")
            seen.add(utt_id)
            try:
                vec = np.array([float(v) for v in payload.split()], dtype=np.float64)
            except ValueError:
                raise MetricInputError(f"{path}:{lineno}: non-numeric value") from None
            if len(vec) != dim:
                raise MetricInputError(
                    f"{path}:{lineno}: expected {dim} values, got {len(vec)}"
                )
            if not np.all(np.isfinite(vec)):
                raise MetricInputError(f"{path}:{lineno}: non-finite value")
            ids.append(utt_id)
            rows.append(vec)
    if not rows:
        raise MetricInputError(f"{path}: no embedding rows")
    return EmbeddingSet(ids=ids, matrix=np.stack(rows))


def save_embeddings(path: str | Path, emb: EmbeddingSet) -> None:
    lines = [f"{EMBEDDING_HEADER_PREFIX}{emb.dim}"]
    for utt_id, row in zip(emb.ids, emb.matrix):
        lines.append(utt_id + "\t" + " ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def fit_gaussian(s: EmbeddingSet) -> GaussianStats:
    """Sample mean and ridge-stabilized unbiased covariance of a set."""
    if len(s) < 2:
        raise MetricInputError(f"need at least 2 embeddings to fit, got {len(s)}")
    mean = s.matrix.mean(axis=0)
    centered = s.matrix - mean
    cov = centered.T @ centered / (len(s) - 1)
    ridge = COV_RIDGE * np.trace(cov) / s.dim
    cov[np.diag_indices(s.dim)] += ridge
    return GaussianStats(mean=mean, cov=cov)


def _require_same_dim(a: EmbeddingSet, b: EmbeddingSet) -> None:
    if a.dim != b.dim:
        raise MetricInputError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    if vals.min() < EIG_CLAMP * max(1.0, abs(vals.max())):
        raise MetricInputError("covariance far from positive semi-definite")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Squared 2-Wasserstein distance between two Gaussian fits."""
    diff = a.mean - b.mean
    sqrt_a = _psd_sqrt(a.cov)
    inner = sqrt_a @ b.cov @ sqrt_a
    inner = (inner + inner.T) / 2.0
    vals = np.linalg.eigvalsh(inner)
    vals = np.clip(vals, 0.0, None)
    trace_term = float(np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.sqrt(vals).sum())
    value = float(diff @ diff) + trace_term
    return max(value, 0.0)


def fad(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Distance between the Gaussian fits of two embedding sets (lower better)."""
    _require_same_dim(a, b)
    return frechet_distance(fit_gaussian(a), fit_gaussian(b))


def _poly_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return (x @ y.T / d + 1.0) ** 3


def kid(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Unbiased squared maximum mean discrepancy with a cubic polynomial kernel.

    The unbiased estimator drops the kernel diagonal, so values near zero can
    come out slightly negative on matched sets.
    """
    _require_same_dim(a, b)
    if len(a) < 2 or len(b) < 2:
        raise MetricInputError("kid needs at least 2 embeddings per set")
    kaa = _poly_kernel(a.matrix, a.matrix)
    kbb = _poly_kernel(b.matrix, b.matrix)
    kab = _poly_kernel(a.matrix, b.matrix)
    n, m = len(a), len(b)
    term_a = (kaa.sum() - np.trace(kaa)) / (n * (n - 1))
    term_b = (kbb.sum() - np.trace(kbb)) / (m * (m - 1))
    return float(term_a + term_b - 2.0 * kab.mean())


def kld_gaussian(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """KL divergence KL(a || b) between diagonal Gaussian fits of the sets."""
    _require_same_dim(a, b)
    if len(a) < 2 or len(b) < 2:
        raise MetricInputError("kld needs at least 2 embeddings per set")
    mu_a = a.matrix.mean(axis=0)
    mu_b = b.matrix.mean(axis=0)
    var_a = np.maximum(a.matrix.var(axis=0, ddof=1), VAR_FLOOR)
    var_b = np.maximum(b.matrix.var(axis=0, ddof=1), VAR_FLOOR)
    terms = 0.5 * np.log(var_b / var_a) + (var_a + (mu_a - mu_b) ** 2) / (2.0 * var_b) - 0.5
    return float(max(terms.sum(), 0.0))


def _pairwise_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    sq = (
        (x**2).sum(axis=1)[:, None]
        + (y**2).sum(axis=1)[None, :]
        - 2.0 * (x @ y.T)
    )
    return np.sqrt(np.clip(sq, 0.0, None))


def _knn_radii(real: np.ndarray, k: int) -> np.ndarray:
    """Distance from each real point to its k-th nearest other real point."""
    dists = _pairwise_distances(real, real)
    np.fill_diagonal(dists, np.inf)
    return np.sort(dists, axis=1)[:, k - 1]


def density(fake: EmbeddingSet, real: EmbeddingSet, k: int = 5) -> float:
    """Mean count of real neighborhoods containing each fake point, over k."""
    _require_same_dim(fake, real)
    if len(real) <= k:
        raise MetricInputError(f"density needs more than k={k} real embeddings")
    radii = _knn_radii(real.matrix, k)
    dists = _pairwise_distances(fake.matrix, real.matrix)
    inside = dists <= radii[None, :]
    return float(inside.sum() / (k * len(fake)))


def coverage(fake: EmbeddingSet, real: EmbeddingSet, k: int = 5) -> float:
    """Fraction of real points whose k-NN ball contains at least one fake point."""
    _require_same_dim(fake, real)
    if len(real) <= k:
        raise MetricInputError(f"coverage needs more than k={k} real embeddings")
    radii = _knn_radii(real.matrix, k)
    dists = _pairwise_distances(fake.matrix, real.matrix)
    covered = (dists <= radii[None, :]).any(axis=0)
    return float(covered.mean())
