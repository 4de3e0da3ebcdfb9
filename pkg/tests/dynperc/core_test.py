import numpy as np
from parameterized import parameterized
from unittest import TestCase

from dynperc import core
from dynperc.core import (BasisObservable, BitValue, ConstantObservable, LinearCombination,
                          ProductMeasure, RootClusterSize, TableObservable, build_lattice,
                          lattice_from_descriptor)
from dynperc.errors import InvalidParameterError, LengthMismatchError

from .test_lattice_vectors import BAD_LATTICE_TEST_VECTOR, LATTICE_TEST_VECTOR


class TestLattice(TestCase):
    """
        Test lattice construction and the torus coordinate codec
    """

    @parameterized.expand(LATTICE_TEST_VECTOR)
    def test_build(self, test_name, test_data):
        lattice = lattice_from_descriptor(test_data["descriptor"])
        self.assertEqual(lattice.vertex_count, test_data["vertex_count"])
        self.assertEqual(lattice.edge_count, test_data["edge_count"])
        self.assertEqual(lattice.root, test_data["root"])
        if test_data["edges"] is not None:
            self.assertEqual(lattice.edges.tolist(), test_data["edges"])
        rebuilt = lattice_from_descriptor(lattice.descriptor())
        self.assertEqual(rebuilt.edges.tolist(), lattice.edges.tolist())
        self.assertEqual(rebuilt.root, lattice.root)

    @parameterized.expand(BAD_LATTICE_TEST_VECTOR)
    def test_build_rejects(self, test_name, descriptor):
        with self.assertRaises(InvalidParameterError):
            lattice_from_descriptor(descriptor)

    def test_edges_read_only(self):
        lattice = build_lattice(core.KIND_TREE, {'depth': 2})
        with self.assertRaises(ValueError):
            lattice.edges[0, 0] = 5

    def test_torus_coordinates(self):
        lattice = build_lattice(core.KIND_TORUS, {'d': 2, 'L': 3})
        self.assertEqual(lattice.coords(lattice.root), (0, 0))
        self.assertEqual(lattice.vertex_id((0, 0)), 4)
        self.assertEqual(lattice.vertex_id((-1, -1)), 0)
        # wraps around the torus
        self.assertEqual(lattice.vertex_id((2, 2)), 0)
        self.assertEqual(lattice.sup_norm(0), 1)
        for vertex in range(lattice.vertex_count):
            self.assertEqual(lattice.vertex_id(lattice.coords(vertex)), vertex)

    def test_torus_edge_ids(self):
        lattice = build_lattice(core.KIND_TORUS, {'d': 2, 'L': 3})
        self.assertEqual(lattice.origin_edge(0), 8)
        self.assertEqual(lattice.origin_edge(1), 9)
        self.assertEqual(lattice.edges[8].tolist(), [4, 7])
        self.assertEqual(lattice.edges[9].tolist(), [4, 5])
        self.assertEqual(sorted(lattice.degree(v) for v in range(9)), [4] * 9)

    def test_incident_sorted_by_neighbor(self):
        lattice = build_lattice(core.KIND_TORUS, {'d': 2, 'L': 4})
        for vertex in range(lattice.vertex_count):
            neighbors = [n for _, n in lattice.incident(vertex)]
            self.assertEqual(neighbors, sorted(neighbors))

    def test_coords_need_torus(self):
        lattice = build_lattice(core.KIND_TREE, {'depth': 1})
        with self.assertRaises(InvalidParameterError):
            lattice.coords(0)

    def test_incidence_matrix(self):
        lattice = build_lattice(core.KIND_TREE, {'depth': 2})
        incidence = lattice.edge_incidence().toarray()
        self.assertEqual(incidence.shape, (6, 7))
        self.assertTrue(np.all(incidence.sum(axis=1) == 2))


class TestMeasureAndSubsets(TestCase):
    """
        Test the product measure, subset codec and configuration enumeration
    """

    def test_measure_domain(self):
        for p in (0.0, 1.0, -0.1, 1.5):
            with self.assertRaises(InvalidParameterError):
                ProductMeasure(p)
        self.assertAlmostEqual(ProductMeasure(0.2).nu, 2.0)
        self.assertAlmostEqual(ProductMeasure(0.2).bit_probability(1), 0.2)
        self.assertAlmostEqual(ProductMeasure(0.2).bit_probability(-1), 0.8)

    def test_probabilities_sum_to_one(self):
        measure = ProductMeasure(0.3)
        probs = measure.probabilities(core.enumerate_configs(5))
        self.assertAlmostEqual(probs.sum(), 1.0, places=12)

    def test_enumeration_order(self):
        configs = core.enumerate_configs(2)
        self.assertEqual(configs.tolist(), [[-1, -1], [1, -1], [-1, 1], [1, 1]])
        self.assertEqual(core.config_index(core.enumerate_configs(3)).tolist(), list(range(8)))

    def test_subsets(self):
        self.assertEqual(core.make_subset([0, 2], 3), (0, 2))
        with self.assertRaises(InvalidParameterError):
            core.make_subset([2, 1], 3)
        with self.assertRaises(InvalidParameterError):
            core.make_subset([0, 3], 3)
        self.assertEqual(core.subset_to_mask((0, 2)), 5)
        self.assertEqual(core.mask_to_subset(5), (0, 2))
        self.assertEqual(core.popcount([0, 1, 7, 8]).tolist(), [0, 1, 3, 1])

    def test_validate_config(self):
        with self.assertRaises(LengthMismatchError):
            core.validate_config(3, [1, -1])
        with self.assertRaises(InvalidParameterError):
            core.validate_config(2, [1, 0])

    def test_sample_configs(self):
        rng = np.random.default_rng(5)
        configs = core.sample_configs(ProductMeasure(0.3), 4, 20000, rng)
        self.assertEqual(configs.shape, (20000, 4))
        self.assertTrue(set(np.unique(configs).tolist()) <= {-1, 1})
        self.assertAlmostEqual(float(np.mean(configs > 0)), 0.3, delta=0.01)


class TestClusterSize(TestCase):
    """
        Test the root cluster size
    """

    def setUp(self):
        self.lattice = build_lattice(core.KIND_TREE, {'depth': 2})

    def test_extremes(self):
        self.assertEqual(core.cluster_size_at_root(self.lattice, np.ones(6, dtype=np.int8)), 7)
        self.assertEqual(core.cluster_size_at_root(self.lattice, -np.ones(6, dtype=np.int8)), 1)

    def test_needs_path_from_root(self):
        config = -np.ones(6, dtype=np.int8)
        config[2] = 1
        self.assertEqual(core.cluster_size_at_root(self.lattice, config), 1)
        config[0] = 1
        self.assertEqual(core.cluster_size_at_root(self.lattice, config), 3)

    def test_batch_matches_single(self):
        configs = core.enumerate_configs(6)
        batch = core.cluster_sizes(self.lattice, configs)
        single = [core.cluster_size_at_root(self.lattice, x) for x in configs]
        self.assertEqual(batch.tolist(), single)

    @parameterized.expand([
        ["tree_depth_2", core.KIND_TREE, {'depth': 2}],
        ["tree_depth_3", core.KIND_TREE, {'depth': 3}],
        ["torus_d2_L3", core.KIND_TORUS, {'d': 2, 'L': 3}],
    ])
    def test_monotone_in_open_edges(self, test_name, kind, params):
        lattice = build_lattice(kind, params)
        if lattice.edge_count <= 14:
            configs = core.enumerate_configs(lattice.edge_count)
        else:
            configs = core.sample_configs(ProductMeasure(0.5), lattice.edge_count, 500, np.random.default_rng(3))
        sizes = core.cluster_sizes(lattice, configs)
        for bit in range(lattice.edge_count):
            opened = configs.copy()
            opened[:, bit] = 1
            self.assertTrue(np.all(core.cluster_sizes(lattice, opened) >= sizes))

    @parameterized.expand([
        ["depth_1", 1],
        ["depth_2", 2],
        ["depth_3", 3],
        ["depth_4", 4],
    ])
    def test_tree_degree_sum(self, test_name, depth):
        lattice = build_lattice(core.KIND_TREE, {'depth': depth})
        self.assertEqual(lattice.vertex_count, lattice.edge_count + 1)
        self.assertEqual(sum(lattice.degree(v) for v in range(lattice.vertex_count)), 2 * lattice.edge_count)
        self.assertEqual(lattice.degree(lattice.root), 2)

    def test_torus_wraps(self):
        lattice = build_lattice(core.KIND_TORUS, {'d': 2, 'L': 3})
        self.assertEqual(core.cluster_size_at_root(lattice, np.ones(18, dtype=np.int8)), 9)
        observable = RootClusterSize(lattice)
        self.assertEqual(observable(np.ones(18, dtype=np.int8)), 9.0)


class TestBasis(TestCase):
    """
        Test the biased Fourier basis and the observable wrappers
    """

    @parameterized.expand([
        ['p_{}_bits_{}'.format(p, n), p, n] for p in (0.2, 0.5, 0.8) for n in range(1, 7)
    ])
    def test_orthonormal(self, test_name, p, num_bits):
        measure = ProductMeasure(p)
        configs = core.enumerate_configs(num_bits)
        probs = measure.probabilities(configs)
        psi = np.array([core.basis_values(core.mask_to_subset(mask), configs, measure)
                        for mask in range(2 ** num_bits)])
        gram = (psi * probs) @ psi.T
        np.testing.assert_allclose(gram, np.eye(2 ** num_bits), atol=1e-10)

    def test_empty_subset_is_one(self):
        measure = ProductMeasure(0.7)
        self.assertEqual(core.basis_eval((), [1, -1], measure), 1.0)

    def test_single_bit_values(self):
        measure = ProductMeasure(0.2)
        self.assertAlmostEqual(core.basis_eval([0], [1], measure), 2.0)
        self.assertAlmostEqual(core.basis_eval([0], [-1], measure), -0.5)

    def test_observables(self):
        measure = ProductMeasure(0.5)
        configs = core.enumerate_configs(2)
        self.assertEqual(BitValue(1).values(configs).tolist(), [-1.0, -1.0, 1.0, 1.0])
        self.assertEqual(ConstantObservable(3).values(configs).tolist(), [3.0] * 4)
        combo = LinearCombination([(2.0, BitValue(0)), (1.0, ConstantObservable(1))])
        self.assertEqual(combo.values(configs).tolist(), [-1.0, 3.0, -1.0, 3.0])
        np.testing.assert_allclose(BasisObservable([0, 1], measure).values(configs), [1.0, -1.0, -1.0, 1.0])
        table = TableObservable([0.0, 1.0, 2.0, 3.0])
        self.assertEqual(table.values(configs[::-1]).tolist(), [3.0, 2.0, 1.0, 0.0])
        self.assertEqual(table([1, 1]), 3.0)
        fn = core.FunctionObservable(lambda x: x.sum())
        self.assertEqual(fn.values(configs).tolist(), [-2.0, 0.0, 0.0, 2.0])
