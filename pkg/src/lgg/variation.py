"""Label variation over a latent geometry graph.

For a graph with adjacency A and a row-stochastic label matrix Y, the
label variation is

    sigma = (1/2) * sum_{stored edges (i, j)} w_ij * ||Y_i - Y_j||^2

which equals tr(Y^T L Y) with L = D - A when A is symmetric (each
undirected edge is stored twice, once per direction). The normalized
variant divides by the total edge weight W = (1/2) * sum w_ij, putting
the score on a shared [0, 2] scale: 0 when every edge joins identically
labeled vertices, 2 when every edge joins disjoint hard labels. An empty
graph (W = 0) has normalized variation 0 by convention.
"""

from __future__ import annotations

import numpy as np

from .graph import SparseGraph
from .validation import check_label_matrix


def _variation_terms(G: SparseGraph, Y: np.ndarray) -> tuple[float, float]:
    """Return (sigma, W) computed over the stored directed edges."""
    A = G.adjacency.tocoo()
    if Y.shape[0] != G.n:
        raise ValueError(
            f"label matrix has {Y.shape[0]} rows but graph has {G.n} vertices"
        )
    if A.data.size == 0:
        return 0.0, 0.0
    diff = Y[A.row] - Y[A.col]
    sq = np.einsum("ij,ij->i", diff, diff)
    sigma = 0.5 * float(np.dot(A.data, sq))
    weight = 0.5 * float(A.data.sum())
    return sigma, weight


def label_variation(G: SparseGraph, Y) -> float:
    """Unnormalized variation sigma = (1/2) sum w_ij ||Y_i - Y_j||^2."""
    Y = check_label_matrix(Y)
    sigma, _ = _variation_terms(G, Y)
    return sigma


def total_edge_weight(G: SparseGraph) -> float:
    """W = (1/2) * sum of stored directed edge weights."""
    return 0.5 * float(G.adjacency.data.sum())


def normalized_label_variation(G: SparseGraph, Y) -> float:
    """sigma / W, in [0, 2]; defined as 0 for a graph with no edge weight."""
    Y = check_label_matrix(Y)
    sigma, weight = _variation_terms(G, Y)
    if weight == 0.0:
        return 0.0
    return sigma / weight
