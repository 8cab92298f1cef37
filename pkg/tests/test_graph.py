"""Similarity kernels, k-NN thresholding, symmetrization, normalization,
Laplacians, and the composed graph builder."""

import json
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lgg.graph import (
    GraphConfig,
    LatentGraphBuilder,
    SparseGraph,
    build_lgg,
    combinatorial_laplacian,
    cosine_similarity,
    degree_normalize,
    graph_to_dict,
    knn_threshold,
    load_graph,
    median_heuristic_gamma,
    rbf_similarity,
    save_graph,
    symmetrize,
)


def edge_dict(G):
    i, j, w = G.edge_arrays()
    return {(int(a), int(b)): float(c) for a, b, c in zip(i, j, w)}


def graph_from_edges(n, edges, symmetric=False):
    if edges:
        i, j, w = zip(*edges)
    else:
        i, j, w = (), (), ()
    A = sp.csr_matrix(
        (np.array(w, dtype=np.float64), (np.array(i, dtype=np.int64), np.array(j, dtype=np.int64))),
        shape=(n, n),
    )
    return SparseGraph(adjacency=A, symmetric=symmetric)


def random_embeddings(rng, n, d):
    return rng.normal(size=(n, d))


class TestCosine:
    def test_identical_vectors(self):
        S = cosine_similarity([[1.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(S, [[1, 1], [1, 1]])

    def test_orthogonal_vectors(self):
        S = cosine_similarity([[1.0, 0.0], [0.0, 1.0]])
        assert S[0, 1] == 0.0 and S[1, 0] == 0.0

    def test_hand_value_inv_sqrt2(self):
        S = cosine_similarity([[1.0, 0.0], [1.0, 1.0]])
        assert abs(S[0, 1] - 1 / math.sqrt(2)) < 1e-12

    def test_zero_row_rejected_naming_row(self):
        with pytest.raises(ValueError, match="row 1"):
            cosine_similarity([[1.0, 0.0], [0.0, 0.0]])

    def test_symmetric_unit_diagonal_bounded(self):
        rng = np.random.default_rng(0)
        X = random_embeddings(rng, 40, 7)
        S = cosine_similarity(X)
        np.testing.assert_allclose(S, S.T, atol=1e-12)
        np.testing.assert_allclose(np.diag(S), 1.0)
        assert S.min() >= -1.0 and S.max() <= 1.0


class TestRbf:
    def test_zero_distance_is_one(self):
        S = rbf_similarity([[2.0, 3.0], [2.0, 3.0]], gamma=0.7)
        np.testing.assert_allclose(S, 1.0)

    def test_unit_distance_unit_gamma(self):
        S = rbf_similarity([[0.0], [1.0]], gamma=1.0)
        assert abs(S[0, 1] - math.exp(-1)) < 1e-12

    def test_median_heuristic_three_points(self):
        """Squared distances {1,4,1} have median 1, so gamma = 0.5."""
        X = [[0.0], [1.0], [2.0]]
        assert median_heuristic_gamma(X) == 0.5
        S = rbf_similarity(X)
        assert abs(S[0, 1] - math.exp(-0.5)) < 1e-12

    def test_degenerate_median_falls_back_to_one(self):
        assert median_heuristic_gamma([[1.0], [1.0], [1.0]]) == 1.0

    def test_nonpositive_gamma_rejected(self):
        with pytest.raises(ValueError, match="gamma"):
            rbf_similarity([[0.0], [1.0]], gamma=0.0)

    def test_symmetric_unit_diagonal_in_unit_interval(self):
        rng = np.random.default_rng(1)
        S = rbf_similarity(random_embeddings(rng, 30, 4))
        np.testing.assert_allclose(S, S.T, atol=1e-12)
        np.testing.assert_allclose(np.diag(S), 1.0)
        assert S.min() > 0.0 and S.max() <= 1.0


class TestKnnThreshold:
    S3 = np.array([[1.0, 0.9, 0.2], [0.9, 1.0, 0.5], [0.2, 0.5, 1.0]])

    def test_k1_picks_row_argmax(self):
        G = knn_threshold(self.S3, k=1)
        assert not G.symmetric
        assert edge_dict(G) == {(0, 1): 0.9, (1, 0): 0.9, (2, 1): 0.5}

    def test_k1_binarize_same_edges_unit_weight(self):
        G = knn_threshold(self.S3, k=1, binarize=True)
        assert edge_dict(G) == {(0, 1): 1.0, (1, 0): 1.0, (2, 1): 1.0}

    def test_k_at_least_n_minus_1_keeps_everything(self):
        G = knn_threshold(self.S3, k=5)
        expect = {
            (i, j): self.S3[i, j] for i in range(3) for j in range(3) if i != j
        }
        assert edge_dict(G) == expect

    def test_tie_breaks_toward_smaller_column(self):
        S = np.array([[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]])
        G = knn_threshold(S, k=1)
        assert set(edge_dict(G)) == {(0, 1), (1, 0), (2, 0)}

    def test_negative_similarities_clamped_to_zero(self):
        S = np.array([[1.0, -0.2], [-0.2, 1.0]])
        G = knn_threshold(S, k=1)
        i, j, w = G.edge_arrays()
        assert list(w) == [0.0, 0.0]
        assert G.row_counts().tolist() == [1, 1]

    def test_single_vertex_rejected(self):
        with pytest.raises(ValueError, match="2"):
            knn_threshold(np.ones((1, 1)), k=1)

    def test_row_counts_exact(self):
        rng = np.random.default_rng(2)
        S = cosine_similarity(random_embeddings(rng, 23, 6))
        for k in (1, 5, 22, 40):
            G = knn_threshold(S, k=k)
            assert (G.row_counts() == min(k, 22)).all()
            ii, jj, _ = G.edge_arrays()
            assert not np.any(ii == jj)


class TestSymmetrize:
    def test_union_rule(self):
        G = graph_from_edges(3, [(0, 1, 0.9), (2, 1, 0.5)])
        H = symmetrize(G)
        assert H.symmetric
        assert edge_dict(H) == {
            (0, 1): 0.9, (1, 0): 0.9, (1, 2): 0.5, (2, 1): 0.5,
        }

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        S = rbf_similarity(random_embeddings(rng, 15, 3))
        G = symmetrize(knn_threshold(S, k=3))
        H = symmetrize(G)
        assert (G.adjacency != H.adjacency).nnz == 0

    def test_max_rule_on_conflicting_weights(self):
        G = graph_from_edges(2, [(0, 1, 0.3), (1, 0, 0.7)])
        H = symmetrize(G)
        assert edge_dict(H) == {(0, 1): 0.7, (1, 0): 0.7}


class TestDegreeNormalize:
    def test_single_symmetric_edge_becomes_one(self):
        for w in (0.25, 1.0, 7.5):
            G = graph_from_edges(2, [(0, 1, w), (1, 0, w)], symmetric=True)
            H = degree_normalize(G)
            np.testing.assert_allclose(
                H.adjacency.toarray(), [[0, 1], [1, 0]], atol=1e-15
            )

    def test_regular_graph_gets_inverse_degree(self):
        """A binary triangle is 2-regular, so every weight becomes 1/2."""
        edges = [(i, j, 1.0) for i in range(3) for j in range(3) if i != j]
        H = degree_normalize(graph_from_edges(3, edges, symmetric=True))
        i, j, w = H.edge_arrays()
        np.testing.assert_allclose(w, 0.5)

    def test_isolated_vertex_stays_isolated(self):
        G = graph_from_edges(3, [(0, 1, 2.0), (1, 0, 2.0)], symmetric=True)
        H = degree_normalize(G)
        A = H.adjacency.toarray()
        assert np.isfinite(A).all()
        assert A[2].sum() == 0.0 and A[:, 2].sum() == 0.0

    def test_asymmetric_uses_row_and_column_sums(self):
        """Row sums (4,6,0) and column sums (0,2,8) give
        2/sqrt(4*2), 2/sqrt(4*8) and 6/sqrt(6*8)."""
        G = graph_from_edges(3, [(0, 1, 2.0), (0, 2, 2.0), (1, 2, 6.0)])
        H = degree_normalize(G)
        d = edge_dict(H)
        assert abs(d[(0, 1)] - 1 / math.sqrt(2)) < 1e-12
        assert abs(d[(0, 2)] - 1 / math.sqrt(8)) < 1e-12
        assert abs(d[(1, 2)] - math.sqrt(3) / 2) < 1e-12

    def test_symmetric_output_stays_exactly_symmetric(self):
        rng = np.random.default_rng(4)
        S = rbf_similarity(random_embeddings(rng, 31, 5))
        G = symmetrize(knn_threshold(S, k=4))
        H = degree_normalize(G)
        assert H.symmetric
        assert (H.adjacency != H.adjacency.T).nnz == 0

    def test_spectral_radius_at_most_one(self):
        rng = np.random.default_rng(5)
        for n, k, trial in ((10, 2, 0), (30, 5, 1), (50, 7, 2)):
            S = rbf_similarity(random_embeddings(rng, n, 4))
            H = degree_normalize(symmetrize(knn_threshold(S, k=k)))
            eigs = np.linalg.eigvalsh(H.adjacency.toarray())
            assert np.abs(eigs).max() <= 1 + 1e-9


class TestLaplacian:
    def test_two_vertex_edge(self):
        G = graph_from_edges(2, [(0, 1, 0.6), (1, 0, 0.6)], symmetric=True)
        L = combinatorial_laplacian(G).toarray()
        np.testing.assert_allclose(L, [[0.6, -0.6], [-0.6, 0.6]])

    def test_edgeless_graph_is_zero(self):
        G = graph_from_edges(4, [], symmetric=True)
        assert combinatorial_laplacian(G).nnz == 0

    def test_unit_triangle(self):
        edges = [(i, j, 1.0) for i in range(3) for j in range(3) if i != j]
        L = combinatorial_laplacian(
            graph_from_edges(3, edges, symmetric=True)
        ).toarray()
        np.testing.assert_allclose(L, 2 * np.eye(3) - (1 - np.eye(3)))

    def test_asymmetric_input_rejected(self):
        G = graph_from_edges(2, [(0, 1, 1.0)])
        with pytest.raises(ValueError, match="symmetr"):
            combinatorial_laplacian(G)

    def test_row_sums_and_psd(self):
        rng = np.random.default_rng(6)
        S = cosine_similarity(random_embeddings(rng, 40, 6))
        G = symmetrize(knn_threshold(S, k=6))
        L = combinatorial_laplacian(G)
        rows = np.asarray(L.sum(axis=1)).ravel()
        assert np.abs(rows).max() <= 1e-12
        for _ in range(100):
            x = rng.normal(size=40)
            assert x @ (L @ x) >= -1e-12


class TestGraphConfig:
    def test_bad_kernel_rejected(self):
        with pytest.raises(ValueError, match="kernel"):
            GraphConfig(kernel="linear")

    def test_bad_k_rejected(self):
        with pytest.raises(ValueError, match="k"):
            GraphConfig(k=0)

    def test_bad_gamma_rejected(self):
        with pytest.raises(ValueError, match="gamma"):
            GraphConfig(kernel="rbf", gamma=-1.0)


class TestBuildLgg:
    def test_vacuous_threshold_gives_dense_graph(self):
        rng = np.random.default_rng(7)
        X = random_embeddings(rng, 6, 3)
        cfg = GraphConfig(kernel="cosine", k=5, symmetrize=False)
        G = build_lgg(X, cfg)
        S = np.maximum(cosine_similarity(X), 0.0)
        np.fill_diagonal(S, 0.0)
        np.testing.assert_allclose(G.adjacency.toarray(), S, atol=1e-15)

    def test_vpm_shape_three_point_trace(self):
        """RBF similarities on {0,1,3} give median sqdist 4. Each row keeps
        its single nearest neighbor as a unit edge (0->1, 1->0, 2->1); the
        column sums are then (1,2,0), so normalized weights come out
        1/sqrt(2), 1, 1/sqrt(2)."""
        X = np.array([[0.0], [1.0], [3.0]])
        cfg = GraphConfig(
            kernel="rbf", k=1, binarize=True, symmetrize=False, normalize=True
        )
        G = build_lgg(X, cfg)
        assert not G.symmetric
        d = edge_dict(G)
        r2 = 1 / math.sqrt(2)
        assert set(d) == {(0, 1), (1, 0), (2, 1)}
        assert abs(d[(0, 1)] - r2) < 1e-12
        assert abs(d[(1, 0)] - 1.0) < 1e-12
        assert abs(d[(2, 1)] - r2) < 1e-12

    def test_vr_shape_on_ten_points_is_symmetrized_full_graph(self):
        # positive-orthant points keep every similarity strictly positive,
        # so no edge is clamped away and the graph stays complete
        rng = np.random.default_rng(8)
        X = np.abs(random_embeddings(rng, 10, 4)) + 0.1
        cfg = GraphConfig(kernel="cosine", k=20, symmetrize=True)
        G = build_lgg(X, cfg)
        assert G.symmetric
        assert (G.row_counts() == 9).all()

    def test_pure_function_bit_identical(self):
        rng = np.random.default_rng(9)
        X = random_embeddings(rng, 25, 5)
        cfg = GraphConfig(kernel="rbf", k=3, symmetrize=True, normalize=True)
        a, b = build_lgg(X, cfg), build_lgg(X, cfg)
        ia, ja, wa = a.edge_arrays()
        ib, jb, wb = b.edge_arrays()
        assert (ia == ib).all() and (ja == jb).all()
        assert wa.tobytes() == wb.tobytes()


class TestGraphJson:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        X = random_embeddings(rng, 12, 3)
        G = build_lgg(X, GraphConfig(kernel="rbf", k=2, symmetrize=True))
        p = tmp_path / "g.json"
        save_graph(G, p)
        H = load_graph(p)
        assert H.symmetric == G.symmetric
        assert (G.adjacency != H.adjacency).nnz == 0

    def test_edges_sorted_by_pair(self, tmp_path):
        G = graph_from_edges(3, [(2, 1, 0.5), (0, 1, 0.9), (1, 0, 0.9)])
        doc = graph_to_dict(G)
        assert doc["n"] == 3
        assert doc["edges"] == [[0, 1, 0.9], [1, 0, 0.9], [2, 1, 0.5]]
        p = tmp_path / "g.json"
        save_graph(G, p)
        assert json.loads(p.read_text())["edges"] == doc["edges"]


class TestSparseGraphValidation:
    def test_self_loop_rejected(self):
        A = sp.csr_matrix(np.array([[0.5, 0.0], [0.0, 0.0]]))
        with pytest.raises(ValueError, match="self-loop"):
            SparseGraph(adjacency=A, symmetric=False)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError, match="negative|>= 0"):
            graph_from_edges(2, [(0, 1, -0.1)])

    def test_symmetric_flag_must_be_true(self):
        with pytest.raises(ValueError, match="symmetric"):
            graph_from_edges(2, [(0, 1, 1.0)], symmetric=True)


class TestEstimatorWrapper:
    def test_transform_matches_build_lgg(self):
        rng = np.random.default_rng(11)
        X = random_embeddings(rng, 14, 4)
        builder = LatentGraphBuilder(kernel="rbf", k=2, normalize=True)
        A = builder.fit(X).transform(X)
        G = builder.build(X)
        H = build_lgg(
            X, GraphConfig(kernel="rbf", k=2, symmetrize=True, normalize=True)
        )
        assert (A != H.adjacency).nnz == 0
        assert G.symmetric == H.symmetric

    def test_get_params_round_trip(self):
        builder = LatentGraphBuilder(k=7, binarize=True)
        params = builder.get_params()
        assert params["k"] == 7 and params["binarize"] is True
        clone = LatentGraphBuilder(**params)
        assert clone.get_params() == params


@settings(deadline=None, max_examples=40)
@given(
    X=arrays(
        np.float64,
        st.tuples(st.integers(3, 12), st.integers(1, 4)),
        elements=st.floats(-5, 5, allow_nan=False),
    ),
    k=st.integers(1, 6),
)
def test_property_knn_row_counts_and_no_self_loops(X, k):
    S = rbf_similarity(X)
    G = knn_threshold(S, k=k)
    n = X.shape[0]
    assert (G.row_counts() == min(k, n - 1)).all()
    i, j, w = G.edge_arrays()
    assert not np.any(i == j)
    assert (w >= 0).all()


@settings(deadline=None, max_examples=30)
@given(
    X=arrays(
        np.float64,
        st.tuples(st.integers(3, 10), st.integers(1, 3)),
        elements=st.floats(-3, 3, allow_nan=False),
    ),
    k=st.integers(1, 4),
)
def test_property_symmetrized_laplacian_psd(X, k):
    G = symmetrize(knn_threshold(rbf_similarity(X), k=k))
    L = combinatorial_laplacian(G).toarray()
    eigs = np.linalg.eigvalsh(L)
    assert eigs.min() >= -1e-10
