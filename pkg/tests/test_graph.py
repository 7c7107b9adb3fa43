"""Tree network construction and spectral identities.

Expected eigenvalues are frozen from the eigendecomposition oracle
(numpy.linalg.eigvalsh on the degree-minus-adjacency matrix), computed
independently of the functions under test.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treeswarm.errors import BadIndex, EdgeTooLong, NonPositiveWeight, NotATree
from treeswarm.graph import (
    algebraic_connectivity,
    build_tree,
    check_gradient_energy_bound,
    edge_laplacian,
    incidence_matrix,
    spectral_constants,
    unweighted_laplacian,
    weighted_laplacian,
)
from treeswarm.potential import PotentialParams

P2 = build_tree(2, [(1, 2)])
P3 = build_tree(3, [(1, 2), (2, 3)])
STAR4 = build_tree(4, [(1, 2), (1, 3), (1, 4)])


def random_tree(rng, n):
    """Random tree by attaching each vertex to a random earlier one."""
    edges = [(int(rng.integers(1, v)), v) for v in range(2, n + 1)]
    return build_tree(n, edges)


def degree_minus_adjacency(tree):
    n = tree.n_vertices
    lap = np.zeros((n, n))
    for a, b in tree.edges:
        lap[a - 1, a - 1] += 1
        lap[b - 1, b - 1] += 1
        lap[a - 1, b - 1] -= 1
        lap[b - 1, a - 1] -= 1
    return lap


class TestBuildTree:
    def test_smallest_tree(self):
        assert P2.neighbor_map[1] == (2,)
        assert P2.neighbor_map[2] == (1,)

    def test_chain(self):
        assert P3.edges == ((1, 2), (2, 3))
        assert P3.neighbor_map[2] == (1, 3)

    def test_cycle_rejected(self):
        with pytest.raises(NotATree):
            build_tree(3, [(1, 2), (2, 3), (1, 3)])

    def test_disconnected_rejected(self):
        with pytest.raises(NotATree):
            build_tree(4, [(1, 2), (1, 2), (3, 4)])

    def test_wrong_edge_count(self):
        with pytest.raises(NotATree):
            build_tree(4, [(1, 2), (2, 3)])

    def test_bad_vertex(self):
        with pytest.raises(BadIndex):
            build_tree(3, [(1, 2), (2, 5)])

    def test_neighbor_map_symmetric(self):
        rng = np.random.default_rng(3)
        for n in range(2, 9):
            tree = random_tree(rng, n)
            for i, nbrs in tree.neighbor_map.items():
                for j in nbrs:
                    assert i in tree.neighbor_map[j]


class TestIncidence:
    def test_single_edge(self):
        d = incidence_matrix(P2)
        assert d.shape == (2, 1)
        np.testing.assert_array_equal(d[:, 0], [-1.0, 1.0])

    def test_p3_lower_tail_orientation(self):
        np.testing.assert_array_equal(
            incidence_matrix(P3), [[-1, 0], [1, -1], [0, 1]]
        )

    def test_column_sums_zero(self):
        rng = np.random.default_rng(5)
        for n in range(2, 9):
            d = incidence_matrix(random_tree(rng, n))
            np.testing.assert_allclose(d.sum(axis=0), 0.0)


class TestLaplacians:
    def test_p2(self):
        np.testing.assert_array_equal(unweighted_laplacian(P2), [[1, -1], [-1, 1]])

    def test_p3_matches_degree_minus_adjacency(self):
        np.testing.assert_array_equal(
            unweighted_laplacian(P3), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]]
        )

    def test_rank_deficiency_one(self):
        rng = np.random.default_rng(7)
        for n in range(2, 9):
            lap = unweighted_laplacian(random_tree(rng, n))
            assert np.linalg.matrix_rank(lap) == n - 1

    def test_connectivity_eigenvalues(self):
        # frozen from the eigendecomposition oracle: P3 spectrum {0,1,3},
        # star-4 spectrum {0,1,1,4}, P2 spectrum {0,2}
        assert algebraic_connectivity(P3) == pytest.approx(1.0, abs=1e-12)
        assert algebraic_connectivity(STAR4) == pytest.approx(1.0, abs=1e-12)
        assert algebraic_connectivity(P2) == pytest.approx(2.0, abs=1e-12)

    def test_edge_laplacian_small_cases(self):
        np.testing.assert_array_equal(edge_laplacian(P2), [[2.0]])
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvalsh(edge_laplacian(P3))), [1.0, 3.0], atol=1e-9
        )
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvalsh(edge_laplacian(STAR4))), [1, 1, 4], atol=1e-9
        )

    def test_weighted_unit_weights_equal_unweighted(self):
        w = np.ones(P3.n_edges)
        np.testing.assert_allclose(weighted_laplacian(P3, w), unweighted_laplacian(P3))

    def test_weighted_scaling(self):
        np.testing.assert_allclose(weighted_laplacian(P2, [3.0]), [[3, -3], [-3, 3]])

    def test_nonpositive_weight(self):
        with pytest.raises(NonPositiveWeight):
            weighted_laplacian(P3, [1.0, 0.0])


class TestSpectralIdentities:
    def test_nonzero_spectra_match(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            tree = random_tree(rng, int(rng.integers(2, 9)))
            full = np.sort(np.linalg.eigvalsh(unweighted_laplacian(tree)))[1:]
            edge = np.sort(np.linalg.eigvalsh(edge_laplacian(tree)))
            np.testing.assert_allclose(full, edge, rtol=1e-9, atol=1e-9)

    def test_decomposition_identity(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            tree = random_tree(rng, int(rng.integers(2, 9)))
            w = rng.uniform(0.1, 5.0, tree.n_edges)
            d = incidence_matrix(tree)
            np.testing.assert_allclose(
                weighted_laplacian(tree, w), d @ np.diag(w) @ d.T, atol=1e-12
            )

    def test_lambda_ordering(self):
        rng = np.random.default_rng(17)
        for _ in range(50)        :
            tree = random_tree(rng, int(rng.integers(2, 9)))
            spec = spectral_constants(tree)
            assert 0.0 < spec.lambda_L <= spec.lambda_L_max
            assert spec.lambda_L == pytest.approx(algebraic_connectivity(tree), rel=1e-12)

    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=60, deadline=None)
    def test_laplacian_psd_rows_sum_zero(self, n, seed):
        tree = random_tree(np.random.default_rng(seed), n)
        lap = unweighted_laplacian(tree)
        np.testing.assert_allclose(lap, lap.T)
        np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(lap)) >= -1e-9


class TestGradientEnergyBound:
    params = PotentialParams(P=2.0, Q=0.8, r=1.0, epsilon=0.2)

    def test_coincident_swarm(self):
        lhs, rhs, holds = check_gradient_energy_bound(np.zeros((3, 2)), P3, self.params)
        assert lhs == 0.0 and rhs == 0.0 and holds

    def test_edge_too_long(self):
        pos = np.array([[0.0, 0.0], [1.0, 0.0], [1.5, 0.0]])
        with pytest.raises(EdgeTooLong):
            check_gradient_energy_bound(pos, P3, self.params)

    @pytest.mark.parametrize("topology", ["p3", "star4", "random"])
    def test_random_admissible_configs(self, topology):
        rng = np.random.default_rng(hash(topology) % 2**32)
        if topology == "p3":
            tree = P3
        elif topology == "star4":
            tree = STAR4
        else:
            tree = random_tree(rng, 6)
        hits = 0
        while hits < 10_000:
            pos = rng.uniform(-0.4, 0.4, (tree.n_vertices, 2))
            tails, heads = tree.edge_arrays()
            if np.any(np.linalg.norm(pos[heads] - pos[tails], axis=1) >= self.params.r):
                continue
            hits += 1
            lhs, rhs, holds = check_gradient_energy_bound(pos, tree, self.params)
            assert holds, (lhs, rhs)
