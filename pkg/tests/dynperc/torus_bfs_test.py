import numpy as np
from parameterized import parameterized
from unittest import TestCase

from dynperc import core, query, torus_bfs
from dynperc.core import ProductMeasure, build_lattice
from dynperc.errors import InvalidParameterError, RadiusOutOfRangeError
from dynperc.torus_bfs import TorusBfsPlan
from utils.seeding import replica_rng


def _torus(d, side):
    return build_lattice(core.KIND_TORUS, {'d': d, 'L': side})


class TestCubeGeometry(TestCase):
    """
        Test the cube around the origin
    """

    def test_small_cube(self):
        lattice = _torus(2, 4)
        geometry = torus_bfs.cube_geometry(lattice, 1)
        self.assertEqual(int(geometry.inside.sum()), 9)
        self.assertEqual(len(geometry.boundary), 8)
        self.assertEqual(len(geometry.cube_edges), 12)
        self.assertNotIn(lattice.root, geometry.boundary)
        for edge_id in geometry.cube_edges:
            u, v = lattice.edges[edge_id]
            self.assertTrue(geometry.inside[u] and geometry.inside[v])

    @parameterized.expand([
        ["radius_zero", 4, 0],
        ["radius_half_side", 4, 2],
        ["radius_too_big", 8, 5],
    ])
    def test_radius_range(self, test_name, side, radius):
        with self.assertRaises(RadiusOutOfRangeError):
            torus_bfs.cube_geometry(_torus(2, side), radius)

    def test_needs_torus(self):
        tree = build_lattice(core.KIND_TREE, {'depth': 2})
        with self.assertRaises(InvalidParameterError):
            torus_bfs.check_radius(tree, 1)
        with self.assertRaises(InvalidParameterError):
            TorusBfsPlan(tree)

    def test_radius_cap(self):
        self.assertEqual(torus_bfs.radius_cap(8, 0.5), 2)
        self.assertEqual(torus_bfs.radius_cap(16, 0.5), 4)
        self.assertEqual(torus_bfs.radius_cap(32, 0.5), 5)
        self.assertEqual(torus_bfs.radius_cap(4, 0.1), 1)


class TestTorusQuery(TestCase):
    """
        Test the two-stage querier
    """

    def setUp(self):
        self.lattice = _torus(2, 4)

    def test_all_closed(self):
        result = torus_bfs.torus_query(self.lattice, 1, -np.ones(32, dtype=np.int8))
        self.assertEqual(len(result.queried), 12)
        self.assertEqual(set(result.queried), set(torus_bfs.cube_geometry(self.lattice, 1).cube_edges))
        self.assertFalse(result.connected)
        self.assertIsNone(result.cluster_size)
        self.assertEqual(result.stage_two, [])

    def test_all_open(self):
        result = torus_bfs.torus_query(self.lattice, 1, np.ones(32, dtype=np.int8))
        self.assertEqual(sorted(result.queried), list(range(32)))
        self.assertTrue(result.connected)
        self.assertEqual(result.cluster_size, 16)
        self.assertEqual(result.queried, result.stage_one + result.stage_two)

    def test_descending_order(self):
        closed = -np.ones(32, dtype=np.int8)
        ascending = torus_bfs.torus_query(self.lattice, 1, closed)
        descending = torus_bfs.torus_query(self.lattice, 1, closed, descending=True)
        self.assertEqual(set(ascending.queried), set(descending.queried))

    def test_fuzz(self):
        lattice = _torus(2, 8)
        plan = TorusBfsPlan(lattice, kappa=0.5)
        rng = replica_rng(21)
        for _ in range(100):
            radius = plan.sample_record(rng)
            config = np.where(rng.random(lattice.edge_count) < 0.5, 1, -1).astype(np.int8)
            result = plan.query(radius, config)
            self.assertEqual(len(result.queried), len(set(result.queried)))
            self.assertEqual(plan.reveal(radius, config.copy()), result.queried)
            if result.connected:
                self.assertEqual(result.cluster_size, core.cluster_size_at_root(lattice, config))
            hidden = np.setdiff1d(np.arange(lattice.edge_count), result.queried)
            flipped = config.copy()
            flipped[hidden] *= -1
            self.assertEqual(plan.reveal(radius, flipped), result.queried)


class TestTorusPlan(TestCase):
    """
        Test the randomized torus plan
    """

    def test_support(self):
        plan = TorusBfsPlan(_torus(2, 8), kappa=0.5)
        self.assertEqual(plan.cap, 2)
        support = plan.support()
        self.assertEqual([r for r, _ in support], [1, 2])
        self.assertAlmostEqual(sum(q for _, q in support), 1.0)
        self.assertEqual(sorted(plan.geometries), [1, 2])

    def test_explicit_cap(self):
        plan = TorusBfsPlan(_torus(2, 8), cap=3)
        self.assertEqual(plan.cap, 3)
        with self.assertRaises(RadiusOutOfRangeError):
            TorusBfsPlan(_torus(2, 8), cap=4)

    def test_exact_on_small_torus(self):
        lattice = _torus(1, 5)
        plan = TorusBfsPlan(lattice, cap=2)
        f = core.RootClusterSize(lattice)
        report = query.predictability(plan, ProductMeasure(0.5), lattice, f)
        self.assertGreater(report.delta, 0.0)
        self.assertLessEqual(report.delta, 1.0)
        self.assertGreaterEqual(report.epsilon, 0.0)
        self.assertLess(report.epsilon, 1.0)

    def test_revealment_shrinks_with_side(self):
        measure = ProductMeasure(0.5)
        small = _torus(2, 8)
        large = _torus(2, 32)
        d_small = query.revealment(TorusBfsPlan(small, kappa=0.5), measure, small, mode=query.MODE_MC,
                                   runs=2000, seed=1).delta
        d_large = query.revealment(TorusBfsPlan(large, kappa=0.5), measure, large, mode=query.MODE_MC,
                                   runs=2000, seed=2).delta
        self.assertGreater(d_small, d_large)
