import math

import numpy as np
from parameterized import parameterized
from unittest import TestCase

from dynperc import core, dynamics, spectral
from dynperc.core import BitValue, ProductMeasure, RootClusterSize, build_lattice
from dynperc.dynamics import ChainState
from dynperc.errors import InvalidParameterError
from utils.seeding import replica_rng

SIGMAS = 3.0
CELL_SIGMAS = 4.0


def _frequency_bound(prob, samples, sigmas):
    return sigmas * math.sqrt(prob * (1.0 - prob) / samples) + 1e-9


class TestSteps(TestCase):
    """
        Test single heat-bath steps and the noise operator
    """

    def setUp(self):
        self.lattice = build_lattice(core.KIND_TREE, {'depth': 2})
        self.measure = ProductMeasure(0.4)

    def test_start_chain(self):
        state = dynamics.start_chain(self.measure, self.lattice, replica_rng(1))
        self.assertEqual(state.step, 0)
        self.assertEqual(state.config.shape, (6,))

    def test_step_changes_at_most_one_bit(self):
        state = dynamics.start_chain(self.measure, self.lattice, replica_rng(2))
        for _ in range(200):
            nxt = dynamics.step_discrete(state, self.measure)
            self.assertLessEqual(int(np.count_nonzero(nxt.config != state.config)), 1)
            self.assertEqual(nxt.step, state.step + 1)
            state = nxt

    @parameterized.expand([
        ["p_0_2", 0.2],
        ["p_0_5", 0.5],
        ["p_0_9", 0.9],
    ])
    def test_single_bit_stationary(self, test_name, p):
        measure = ProductMeasure(p)
        np.testing.assert_allclose(np.array([1.0 - p, p]) @ dynamics.transition_matrix(1, p), [1.0 - p, p])
        rng = replica_rng(21)
        samples = 20000
        opened = 0
        for _ in range(samples):
            start = ChainState(config=core.sample_configs(measure, 1, 1, rng)[0], step=0, rng=rng)
            opened += int(dynamics.step_discrete(start, measure).config[0] > 0)
        self.assertAlmostEqual(opened / samples, p, delta=_frequency_bound(p, samples, SIGMAS))

    @parameterized.expand([
        ["from_closed", [-1, -1]],
        ["from_mixed", [1, -1]],
        ["from_open", [1, 1]],
    ])
    def test_two_bit_transitions(self, test_name, start):
        measure = ProductMeasure(0.5)
        start = np.array(start, dtype=np.int8)
        exact = dynamics.transition_matrix(2, 0.5)[int(core.config_index(start[None, :])[0])]
        self.assertEqual(sorted(exact.tolist()), [0.0, 0.25, 0.25, 0.5])
        rng = replica_rng(22)
        samples = 20000
        counts = np.zeros(4)
        for _ in range(samples):
            nxt = dynamics.step_discrete(ChainState(config=start, step=0, rng=rng), measure)
            counts[int(core.config_index(nxt.config[None, :])[0])] += 1
        for cell in range(4):
            bound = _frequency_bound(exact[cell], samples, CELL_SIGMAS)
            self.assertAlmostEqual(counts[cell] / samples, exact[cell], delta=bound)

    def test_noise_extremes(self):
        rng = replica_rng(3)
        config = np.ones(6, dtype=np.int8)
        np.testing.assert_array_equal(dynamics.noise_perturb(config, 0.0, self.measure, rng), config)
        batch = dynamics.noise_perturb_batch(np.ones((20000, 6), dtype=np.int8), 1.0, self.measure, rng)
        self.assertAlmostEqual(float(np.mean(batch > 0)), 0.4, delta=0.01)
        for epsilon in (-0.1, 1.1):
            with self.assertRaises(InvalidParameterError):
                dynamics.noise_perturb(config, epsilon, self.measure, rng)

    def test_noise_keeps_measure(self):
        rng = replica_rng(4)
        configs = core.sample_configs(self.measure, 6, 50000, rng)
        perturbed = dynamics.noise_perturb_batch(configs, 0.3, self.measure, rng)
        self.assertAlmostEqual(float(np.mean(perturbed > 0)), 0.4, delta=0.01)

    def test_epsilon_for_time(self):
        self.assertEqual(dynamics.epsilon_for_time(0.0), 0.0)
        self.assertAlmostEqual(dynamics.epsilon_for_time(1.0), 1.0 - math.exp(-1.0))
        self.assertAlmostEqual(dynamics.epsilon_for_time(1e-12), 1e-12, places=20)
        with self.assertRaises(InvalidParameterError):
            dynamics.epsilon_for_time(-1.0)


class TestSeries(TestCase):
    """
        Test stationary series generation
    """

    def setUp(self):
        self.lattice = build_lattice(core.KIND_TREE, {'depth': 2})
        self.measure = ProductMeasure(0.5)

    def test_reproducible(self):
        f = RootClusterSize(self.lattice)
        first = dynamics.run_observable_series(self.lattice, self.measure, f, 5000, seed=11)
        second = dynamics.run_observable_series(self.lattice, self.measure, f, 5000, seed=11)
        np.testing.assert_array_equal(first.values, second.values)
        other = dynamics.run_observable_series(self.lattice, self.measure, f, 5000, seed=12)
        self.assertFalse(np.array_equal(first.values, other.values))

    def test_header(self):
        series = dynamics.run_observable_series(self.lattice, self.measure, BitValue(0), 100, seed=1)
        self.assertEqual(series.values.shape, (100,))
        self.assertEqual(series.header(), {'lattice': {'kind': 'tree', 'depth': 2}, 'p': 0.5, 'seed': 1,
                                           'steps': 100, 'observable': 'bit'})
        self.assertTrue(set(np.unique(series.values).tolist()) <= {-1.0, 1.0})

    def test_chain_block_moves_one_bit(self):
        rng = replica_rng(5)
        start = core.sample_configs(self.measure, 6, 1, rng)[0]
        block = dynamics._chain_block(start, 500, self.measure, rng)
        previous = np.vstack([start[None, :], block[:-1]])
        self.assertTrue(np.all(np.count_nonzero(block != previous, axis=1) <= 1))

    def test_small_chunks(self):
        f = RootClusterSize(self.lattice)
        series = dynamics.run_observable_series(self.lattice, self.measure, f, 1000, seed=3, chunk_steps=7)
        self.assertEqual(series.values.shape, (1000,))
        self.assertTrue(np.all((series.values >= 1) & (series.values <= 7)))

    def test_mean_matches_measure(self):
        series = dynamics.run_observable_series(self.lattice, ProductMeasure(0.3), BitValue(2), 200000, seed=8)
        # E x = 2p - 1
        self.assertAlmostEqual(float(series.values.mean()), -0.4, delta=0.03)

    def test_steps_domain(self):
        with self.assertRaises(InvalidParameterError):
            dynamics.run_observable_series(self.lattice, self.measure, BitValue(0), 0, seed=1)


class TestKernels(TestCase):
    """
        Test the dense kernels against the basis eigenfunctions
    """

    def test_transition_matrix_stochastic(self):
        kernel = dynamics.transition_matrix(3, 0.3)
        np.testing.assert_allclose(kernel.sum(axis=1), np.ones(8), atol=1e-12)
        probs = ProductMeasure(0.3).probabilities(core.enumerate_configs(3))
        np.testing.assert_allclose(probs @ kernel, probs, atol=1e-12)

    def test_basis_eigenvalues(self):
        measure = ProductMeasure(0.3)
        configs = core.enumerate_configs(3)
        kernel = dynamics.transition_matrix(3, 0.3)
        continuous = dynamics.continuous_kernel(3, 0.3, 0.7)
        for mask in range(8):
            subset = core.mask_to_subset(mask)
            psi = core.basis_values(subset, configs, measure)
            np.testing.assert_allclose(kernel @ psi, (1.0 - len(subset) / 3.0) * psi, atol=1e-12)
            np.testing.assert_allclose(continuous @ psi, math.exp(-0.7 * len(subset)) * psi, atol=1e-10)

    def test_coupled_pairs_correlation(self):
        lattice = build_lattice(core.KIND_TREE, {'depth': 2})
        measure = ProductMeasure(0.5)
        f = RootClusterSize(lattice)
        samples = 100000
        xs, ys = dynamics.coupled_pairs(lattice, measure, f, 0.5, samples, replica_rng(9))
        weights = spectral.spectral_weights(f, measure, lattice)
        configs = core.enumerate_configs(lattice.edge_count)
        mean = float(measure.probabilities(configs) @ f.values(configs))
        products = (xs - mean) * (ys - mean)
        exact = weights.variance * spectral.rho_continuous(weights, 0.5)
        bound = SIGMAS * float(products.std()) / math.sqrt(samples)
        self.assertAlmostEqual(float(products.mean()), exact, delta=bound)

    @parameterized.expand([
        ["p_0_3", 0.3],
        ["p_0_5", 0.5],
        ["p_0_75", 0.75],
    ])
    def test_noise_matches_continuous_kernel(self, test_name, p):
        epsilon = dynamics.epsilon_for_time(0.7)
        measure = ProductMeasure(p)
        configs = core.enumerate_configs(2)
        probs = measure.probabilities(configs)
        joint = probs[:, None] * dynamics.noise_kernel(2, p, epsilon)
        np.testing.assert_allclose(joint, probs[:, None] * dynamics.continuous_kernel(2, p, 0.7), atol=1e-12)
        self.assertAlmostEqual(float(joint.sum()), 1.0, places=12)

        rng = replica_rng(23)
        samples = 200000
        first = core.sample_configs(measure, 2, samples, rng)
        second = dynamics.noise_perturb_batch(first, epsilon, measure, rng)
        cells = core.config_index(first) * 4 + core.config_index(second)
        observed = np.bincount(cells, minlength=16) / samples
        for cell, prob in enumerate(joint.ravel()):
            self.assertAlmostEqual(observed[cell], prob, delta=_frequency_bound(prob, samples, CELL_SIGMAS))


class TestChainState(TestCase):
    """
        Test block advancement of the chain state
    """

    def test_advance(self):
        measure = ProductMeasure(0.4)
        lattice = build_lattice(core.KIND_TREE, {'depth': 1})
        state = dynamics.start_chain(measure, lattice, replica_rng(30))
        block, nxt = dynamics.advance_chain(state, 50, measure)
        self.assertEqual(block.shape, (50, 2))
        self.assertEqual(nxt.step, 50)
        np.testing.assert_array_equal(nxt.config, block[-1])
        self.assertIs(nxt.rng, state.rng)
        block, last = dynamics.advance_chain(nxt, 7, measure)
        self.assertEqual(last.step, 57)
