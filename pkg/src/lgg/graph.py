"""Latent geometry graph construction.

The pipeline has four steps, each a pure function over immutable inputs:

1. dense pairwise similarity (cosine or RBF kernel),
2. k-nearest-neighbor thresholding (row-wise, self excluded, ties broken
   toward the smaller column index),
3. optional symmetrization (edge kept if either direction was a neighbor;
   weight is the max of the two directed weights),
4. optional degree normalization ``D_r^{-1/2} A D_c^{-1/2}`` using
   separate row/column degree diagonals, which reduces to the symmetric
   ``D^{-1/2} A D^{-1/2}`` when A is symmetric.

Dense n x n similarities are fine at the intended scale (n ~ 500); there
is deliberately no approximate-neighbor indexing here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_embeddings

KERNELS = ("cosine", "rbf")


@dataclass(frozen=True)
class GraphConfig:
    """Knobs for one graph build: kernel, k, and the three optional steps.

    ``gamma=None`` selects the median heuristic for the RBF bandwidth:
    gamma = 1 / (2 * median of pairwise squared distances), falling back
    to 1.0 when the median is zero.
    """

    kernel: str = "cosine"
    k: int = 10
    binarize: bool = False
    symmetrize: bool = True
    normalize: bool = False
    gamma: float | None = None

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class SparseGraph:
    """Weighted adjacency over n vertices, no self-loops, weights >= 0.

    ``symmetric`` records whether construction guarantees A == A^T; the
    Laplacian is only defined for graphs carrying that guarantee.
    """

    adjacency: sp.csr_matrix
    symmetric: bool

    def __post_init__(self):
        A = self.adjacency
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got {A.shape}")
        if A.diagonal().any() or sp.csr_matrix(
            (np.ones_like(A.data), A.indices, A.indptr), shape=A.shape
        ).diagonal().any():
            raise ValueError("self-loops are not allowed")
        if A.data.size and (not np.all(np.isfinite(A.data)) or A.data.min() < 0):
            raise ValueError("edge weights must be finite and >= 0")
        if self.symmetric and (A != A.T).nnz != 0:
            raise ValueError("symmetric flag set but adjacency is not symmetric")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        """Per-vertex row sums (the diagonal of D)."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stored directed edges as (rows, cols, weights), sorted by (i, j)."""
        A = self.adjacency.tocoo()
        return A.row.astype(np.int64), A.col.astype(np.int64), A.data

    def row_counts(self) -> np.ndarray:
        """Number of stored edges per row."""
        return np.diff(self.adjacency.indptr)


def _as_csr(rows, cols, data, n) -> sp.csr_matrix:
    A = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    A.sort_indices()
    return A


# ---------------------------------------------------------------------------
# Similarity kernels
# ---------------------------------------------------------------------------

def cosine_similarity(X) -> np.ndarray:
    """Dense cosine similarity matrix; symmetric with unit diagonal.

    Rows with zero norm make the similarity undefined and are rejected.
    """
    X = check_embeddings(X)
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(
            f"row {int(zero[0])} has zero norm; cosine similarity undefined"
        )
    U = X / norms[:, None]
    S = np.clip(U @ U.T, -1.0, 1.0)
    np.fill_diagonal(S, 1.0)
    return S


def median_heuristic_gamma(X) -> float:
    """gamma = 1 / (2 * median pairwise squared distance), 1.0 if degenerate."""
    X = check_embeddings(X)
    if X.shape[0] < 2:
        return 1.0
    d2 = cdist(X, X, metric="sqeuclidean")
    iu = np.triu_indices(X.shape[0], k=1)
    m = float(np.median(d2[iu]))
    return 1.0 if m == 0.0 else 1.0 / (2.0 * m)


def rbf_similarity(X, gamma: float | None = None) -> np.ndarray:
    """Dense RBF similarity exp(-gamma * ||x_i - x_j||^2), entries in (0, 1]."""
    X = check_embeddings(X)
    if gamma is None:
        gamma = median_heuristic_gamma(X)
    elif gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    d2 = cdist(X, X, metric="sqeuclidean")
    S = np.exp(-gamma * d2)
    np.fill_diagonal(S, 1.0)
    return S


# ---------------------------------------------------------------------------
# Graph construction steps
# ---------------------------------------------------------------------------

def knn_threshold(S, k: int, binarize: bool = False) -> SparseGraph:
    """Keep each row's k largest off-diagonal similarities as directed edges.

    Ties break toward the smaller column index, so identical inputs give
    bit-identical edge lists. Kept weights are the similarity values
    (clamped at 0, see note) or 1 when ``binarize`` is set; every row ends
    up with exactly min(k, n-1) stored edges.

    Note: a negative cosine similarity among the kept neighbors would
    violate the nonnegative-weight invariant, so such weights are clamped
    to 0 while the edge itself stays stored.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"similarity matrix must be square, got {S.shape}")
    n = S.shape[0]
    if n < 2:
        raise ValueError("graph needs at least 2 vertices (no neighbors exist)")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    k_eff = min(k, n - 1)
    masked = S.copy()
    np.fill_diagonal(masked, -np.inf)
    # stable argsort of the negated row = descending similarity, smaller
    # column index first among ties
    neighbor_cols = np.argsort(-masked, axis=1, kind="stable")[:, :k_eff]
    rows = np.repeat(np.arange(n), k_eff)
    cols = neighbor_cols.ravel()
    if binarize:
        data = np.ones(rows.shape[0], dtype=np.float64)
    else:
        data = np.maximum(S[rows, cols], 0.0)
    return SparseGraph(adjacency=_as_csr(rows, cols, data, n), symmetric=False)


def symmetrize(G: SparseGraph) -> SparseGraph:
    """Union the directed edges: w_ij = w_ji = max of the available weights."""
    A = G.adjacency.maximum(G.adjacency.T).tocsr()
    A.sort_indices()
    return SparseGraph(adjacency=A, symmetric=True)


def degree_normalize(G: SparseGraph) -> SparseGraph:
    """Scale A to D_r^{-1/2} A D_c^{-1/2}; zero-degree vertices stay isolated.

    A symmetric input uses one degree vector on both sides, and each edge's
    scale factor is computed before touching the weight, so the two stored
    copies of an undirected edge stay bit-identical.
    """
    A = G.adjacency.tocoo()
    r = np.asarray(G.adjacency.sum(axis=1)).ravel()
    c = r if G.symmetric else np.asarray(G.adjacency.sum(axis=0)).ravel()
    r_inv = np.where(r > 0, 1.0 / np.sqrt(np.where(r > 0, r, 1.0)), 0.0)
    c_inv = np.where(c > 0, 1.0 / np.sqrt(np.where(c > 0, c, 1.0)), 0.0)
    data = A.data * (r_inv[A.row] * c_inv[A.col])
    return SparseGraph(
        adjacency=_as_csr(A.row, A.col, data, G.n), symmetric=G.symmetric
    )


def combinatorial_laplacian(G: SparseGraph) -> sp.csr_matrix:
    """L = D - A for a symmetric graph; every row of L sums to 0."""
    if not G.symmetric:
        raise ValueError(
            "combinatorial Laplacian requires a symmetric graph; "
            "symmetrize first or use the edge-sum label variation"
        )
    return (sp.diags(G.degrees) - G.adjacency).tocsr()


def build_lgg(X, config: GraphConfig) -> SparseGraph:
    """Build a latent geometry graph from embeddings, honoring all flags."""
    X = check_embeddings(X)
    if config.kernel == "cosine":
        S = cosine_similarity(X)
    else:
        S = rbf_similarity(X, config.gamma)
    G = knn_threshold(S, config.k, config.binarize)
    if config.symmetrize:
        G = symmetrize(G)
    if config.normalize:
        G = degree_normalize(G)
    return G


# ---------------------------------------------------------------------------
# Graph JSON dump
# ---------------------------------------------------------------------------

def graph_to_dict(G: SparseGraph) -> dict:
    rows, cols, data = G.edge_arrays()
    return {
        "n": G.n,
        "symmetric": bool(G.symmetric),
        "edges": [[int(i), int(j), float(w)] for i, j, w in zip(rows, cols, data)],
    }


def save_graph(G: SparseGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(G)), encoding="utf-8")


def load_graph(path) -> SparseGraph:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    n = int(doc["n"])
    edges = doc["edges"]
    rows = np.array([e[0] for e in edges], dtype=np.int64)
    cols = np.array([e[1] for e in edges], dtype=np.int64)
    data = np.array([e[2] for e in edges], dtype=np.float64)
    return SparseGraph(
        adjacency=_as_csr(rows, cols, data, n), symmetric=bool(doc["symmetric"])
    )


# ---------------------------------------------------------------------------
# Estimator wrapper
# ---------------------------------------------------------------------------

class LatentGraphBuilder(BaseEstimator, TransformerMixin):
    """Stateless transformer from an embedding matrix to a k-NN graph.

    ``transform`` returns the sparse adjacency (CSR), so the builder drops
    into sklearn pipelines; ``build`` returns the richer
    :class:`SparseGraph` carrying the symmetry flag.
    """

    def __init__(
        self,
        kernel: str = "cosine",
        k: int = 10,
        binarize: bool = False,
        symmetrize: bool = True,
        normalize: bool = False,
        gamma: float | None = None,
    ):
        self.kernel = kernel
        self.k = k
        self.binarize = binarize
        self.symmetrize = symmetrize
        self.normalize = normalize
        self.gamma = gamma

    def _config(self) -> GraphConfig:
        return GraphConfig(
            kernel=self.kernel,
            k=self.k,
            binarize=self.binarize,
            symmetrize=self.symmetrize,
            normalize=self.normalize,
            gamma=self.gamma,
        )

    def fit(self, X, y=None):
        self._config()
        X = check_embeddings(X)
        self.n_features_in_ = X.shape[1]
        return self

    def build(self, X) -> SparseGraph:
        return build_lgg(X, self._config())

    def transform(self, X) -> sp.csr_matrix:
        return self.build(X).adjacency
