import itertools
import json

import numpy as np
import pytest

from robust_scatter.checks import random_chordal_pattern, random_sparse_factor
from robust_scatter.errors import (
    DimensionMismatch,
    InvalidBandwidth,
    InvalidPermutation,
    InvalidSize,
    NonChordalPattern,
)
from robust_scatter.graphs import (
    SparsityPattern,
    banded_pattern,
    find_perfect_elimination_order,
    grid_pattern,
    inverse_permutation,
    is_chordal,
    is_g_sparse,
    is_perfect_elimination_order,
    maximum_cardinality_search,
    permute_pattern,
    require_perfect_order,
)
from robust_scatter.spd import cholesky

# 1-based pairs (i, j) with i > j that are *not* neighbours on the 3x3 lattice
GRID_NON_EDGES = [
    (3, 1), (5, 1), (6, 1), (7, 1), (8, 1), (9, 1), (4, 2), (6, 2), (7, 2), (8, 2), (9, 2),
    (4, 3), (5, 3), (7, 3), (8, 3), (9, 3), (6, 4), (8, 4), (9, 4), (7, 5), (9, 5),
    (7, 6), (8, 6), (9, 7),
]


def _cycle(p):
    return SparsityPattern(p, frozenset((i, (i + 1) % p) for i in range(p)))


class TestSparsityPattern:
    def test_edges_normalized(self):
        G = SparsityPattern(3, {(2, 0), (1, 0)})
        assert G.edges == {(0, 2), (0, 1)}
        assert G.has_edge(2, 0)
        assert G.neighbors(0) == {1, 2}

    @pytest.mark.parametrize("edges", [{(0, 0)}, {(0, 3)}, {(-1, 1)}])
    def test_invalid_edges(self, edges):
        with pytest.raises(ValueError):
            SparsityPattern(3, edges)

    def test_zero_vertices(self):
        with pytest.raises(InvalidSize):
            SparsityPattern(0)

    def test_masks(self):
        G = SparsityPattern(3, {(0, 2)})
        expected = np.array([[1, 0, 1], [0, 1, 0], [1, 0, 1]], dtype=bool)
        np.testing.assert_array_equal(G.mask(), expected)
        np.testing.assert_array_equal(G.lower_mask(), np.tril(expected))
        assert [list(J) for J in G.later_neighbors()] == [[2], [], []]

    def test_adjacency_copy_is_writable(self):
        G = SparsityPattern(2, {(0, 1)})
        A = G.adjacency()
        A[0, 0] = True
        assert not G.adjacency()[0, 0]

    def test_json_round_trip_is_one_based(self):
        G = banded_pattern(4, 2)
        obj = G.to_json_dict()
        assert obj == {"p": 4, "edges": [[1, 2], [2, 3], [3, 4]]}
        assert SparsityPattern.loads(G.dumps()) == G
        assert json.loads(G.dumps()) == obj

    @pytest.mark.parametrize("obj", [
        {"p": 3, "edges": [[0, 1]]},
        {"p": 3, "edges": [[1, 4]]},
        {"p": 3, "edges": [[1, 2, 3]]},
        {"p": 3, "edges": [], "extra": 1},
    ])
    def test_json_rejects(self, obj):
        with pytest.raises(ValueError):
            SparsityPattern.from_json_dict(obj)

    def test_hashable_and_equal(self):
        assert banded_pattern(5, 3) == SparsityPattern(5, banded_pattern(5, 3).edges)
        assert len({banded_pattern(5, 3), banded_pattern(5, 3)}) == 1


class TestBuilders:
    @pytest.mark.parametrize("p,d,count", [(5, 1, 0), (5, 2, 4), (5, 3, 7), (5, 5, 10)])
    def test_band_edge_count(self, p, d, count):
        assert len(banded_pattern(p, d).edges) == count

    def test_band_definition(self):
        G = banded_pattern(10, 4)
        for i, j in itertools.combinations(range(10), 2):
            assert G.has_edge(i, j) == (abs(i - j) < 4)

    @pytest.mark.parametrize("d", [0, 6])
    def test_band_invalid(self, d):
        with pytest.raises(InvalidBandwidth):
            banded_pattern(5, d)

    def test_grid_degree(self):
        G = grid_pattern(3, 4)
        degree = G.adjacency().sum(axis=1)
        assert G.p == 12 and len(G.edges) == 17
        assert sorted(degree.tolist()) == [2] * 4 + [3] * 6 + [4] * 2

    def test_grid_complement_matches_listed_pairs(self):
        listed = {(j - 1, i - 1) for i, j in GRID_NON_EDGES}
        assert grid_pattern(3, 3).complement_edges() == listed

    @pytest.mark.parametrize("shape", [(1, 3), (3, 1), (0, 0)])
    def test_grid_invalid(self, shape):
        with pytest.raises(InvalidSize):
            grid_pattern(*shape)


class TestChordality:
    @pytest.mark.parametrize("p", range(1, 9))
    def test_banded_natural_order(self, p):
        for d in range(1, p + 1):
            assert find_perfect_elimination_order(banded_pattern(p, d)) == list(range(p))

    @pytest.mark.parametrize("G", [_cycle(4), _cycle(5), grid_pattern(2, 2), grid_pattern(3, 3), grid_pattern(2, 3)])
    def test_non_chordal(self, G):
        assert not is_chordal(G)
        assert find_perfect_elimination_order(G) is None
        with pytest.raises(NonChordalPattern):
            require_perfect_order(G)

    def test_triangulated_cycle_is_chordal(self):
        G = SparsityPattern(4, _cycle(4).edges | {(0, 2)})
        order = find_perfect_elimination_order(G)
        assert order is not None and is_perfect_elimination_order(G, order)

    def test_natural_order_rejected_when_imperfect(self):
        # path 1 - 0 - 2: vertex 0 first has non-adjacent later neighbours 1 and 2
        G = SparsityPattern(3, {(0, 1), (0, 2)})
        assert not is_perfect_elimination_order(G, [0, 1, 2])
        order = find_perfect_elimination_order(G)
        assert order != [0, 1, 2]
        assert is_perfect_elimination_order(G, order)

    def test_mcs_ties_lowest_index(self):
        assert maximum_cardinality_search(SparsityPattern.empty(4)) == [0, 1, 2, 3]
        assert maximum_cardinality_search(SparsityPattern(3, {(0, 2)})) == [0, 2, 1]

    def test_invalid_permutation(self):
        with pytest.raises(InvalidPermutation):
            is_perfect_elimination_order(banded_pattern(3, 2), [0, 0, 1])

    @pytest.mark.parametrize("seed", range(5))
    def test_random_relabelled_chordal(self, seed):
        rng = np.random.default_rng(seed)
        G = random_chordal_pattern(9, rng)
        H = permute_pattern(G, list(rng.permutation(9)))
        order = find_perfect_elimination_order(H)
        assert is_perfect_elimination_order(H, order)


class TestPermutation:
    def test_matches_matrix_permutation(self):
        rng = np.random.default_rng(0)
        G = random_chordal_pattern(6, rng)
        order = list(rng.permutation(6))
        M = np.where(G.mask(), 1.0, 0.0)
        H = permute_pattern(G, order)
        np.testing.assert_array_equal(H.mask(), M[np.ix_(order, order)] > 0)

    def test_inverse(self):
        order = [2, 0, 3, 1]
        inv = inverse_permutation(order)
        assert [order[k] for k in inv] == [0, 1, 2, 3]


class TestGSparse:
    def test_tolerance(self):
        G = banded_pattern(3, 2)
        M = np.eye(3)
        M[0, 2] = M[2, 0] = 1e-10
        assert is_g_sparse(M, G)
        M[0, 2] = M[2, 0] = 1e-8
        assert not is_g_sparse(M, G)

    def test_shape(self):
        with pytest.raises(DimensionMismatch):
            is_g_sparse(np.eye(2), banded_pattern(3, 2))


class TestFillFreeFactorization:
    """G-sparse SPD matrices on a perfectly ordered chordal pattern have G-sparse factors."""

    @pytest.mark.parametrize("p", range(3, 13))
    def test_factor_and_product(self, p):
        rng = np.random.default_rng(100 + p)
        for _ in range(20):
            G = random_chordal_pattern(p, rng)
            C = random_sparse_factor(G, rng)
            K = C @ C.T
            assert is_g_sparse(K, G, tol=1e-12)
            L = cholesky(K)
            assert is_g_sparse(np.tril(L, -1) + np.tril(L, -1).T, G, tol=1e-12)
            np.testing.assert_allclose(L, C * np.sign(np.diag(C)), atol=1e-10)

    def test_non_chordal_fills_in(self):
        G = _cycle(4)
        K = np.eye(4) + 0.3 * G.adjacency()
        L = cholesky(K)
        assert not is_g_sparse(np.tril(L, -1) + np.tril(L, -1).T, G)
