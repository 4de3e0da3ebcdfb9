"""Exact Fourier analysis on the biased hypercube.

Coefficients are indexed by subset mask: bit i of the mask is set iff edge i
belongs to the subset, matching the configuration encoding of
core.enumerate_configs.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from dynperc.core import enumerate_configs, make_subset, popcount, subset_to_mask
from dynperc.errors import CapExceededError, ConstantObservableError, InvalidParameterError

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 22
# Above this many bits coefficients come from the fast transform
DIRECT_TRANSFORM_MAX_BITS = 10
WEIGHT_CLAMP = 1e-14
H_SERIES_CUTOFF = 1e-4
_DIRECT_BLOCK = 256


@dataclass(frozen=True)
class SpectralWeights:
    """Mass function of W; weights[k-1] = P(W = k), levels past the array carry no mass"""
    weights: np.ndarray
    variance: float
    num_bits: int

    @property
    def levels(self):
        return np.arange(1, self.weights.shape[0] + 1)

    def w(self, k):
        if not 1 <= k <= self.weights.shape[0]:
            return 0.0
        return float(self.weights[k - 1])

    def rows(self):
        return [(int(k), float(w)) for k, w in zip(self.levels, self.weights)]


def _check_cap(num_bits, cap):
    if num_bits > cap:
        raise CapExceededError(num_bits, cap)


def observable_table(f, lattice, cap=DEFAULT_ENUMERATION_CAP):
    """Values of f on all enumerated configurations, together with the configurations"""
    _check_cap(lattice.edge_count, cap)
    configs = enumerate_configs(lattice.edge_count)
    return configs, np.asarray(f.values(configs), dtype=float)


def _basis_matrix(masks, configs_index, num_bits, nu):
    """Psi_A(x) for a block of subset masks (rows) against all configurations (columns)"""
    size_a = popcount(masks)[:, None]
    open_in_a = popcount(masks[:, None] & configs_index[None, :])
    closed_in_a = size_a - open_in_a
    return np.power(nu, (open_in_a - closed_in_a).astype(float)) * np.where(closed_in_a % 2, -1.0, 1.0)


def _direct_coefficients(table, probs, num_bits, nu):
    size = 2 ** num_bits
    index = np.arange(size, dtype=np.int64)
    weighted = table * probs
    coefficients = np.empty(size)
    for start in range(0, size, _DIRECT_BLOCK):
        masks = index[start:start + _DIRECT_BLOCK]
        coefficients[start:start + masks.shape[0]] = _basis_matrix(masks, index, num_bits, nu) @ weighted
    return coefficients


def fast_transform(table, p):
    """All 2^|B| coefficients <f, Psi_A> in O(|B| 2^|B|) by per-bit butterflies"""
    values = np.array(table, dtype=float)
    num_bits = int(round(math.log2(values.shape[0])))
    cross = math.sqrt(p * (1.0 - p))
    for bit in range(num_bits):
        view = values.reshape(-1, 2, 1 << bit)
        closed = view[:, 0, :].copy()
        opened = view[:, 1, :]
        view[:, 0, :] = (1.0 - p) * closed + p * opened
        view[:, 1, :] = cross * (opened - closed)
    return values


def inverse_transform(coefficients, p):
    """Values of sum_A c_A Psi_A on every enumerated configuration"""
    values = np.array(coefficients, dtype=float)
    num_bits = int(round(math.log2(values.shape[0])))
    nu = math.sqrt((1.0 - p) / p)
    for bit in range(num_bits):
        view = values.reshape(-1, 2, 1 << bit)
        flat = view[:, 0, :].copy()
        signed = view[:, 1, :].copy()
        view[:, 0, :] = flat - signed / nu
        view[:, 1, :] = flat + signed * nu
    return values


def level_component(table, measure, num_bits, level):
    """Table of the level-k part sum_{|A|=k} <f,Psi_A> Psi_A"""
    coefficients = coefficients_from_table(table, measure, num_bits)
    keep = popcount(np.arange(coefficients.shape[0], dtype=np.int64)) == level
    return inverse_transform(np.where(keep, coefficients, 0.0), measure.p), float(np.sum(coefficients[keep] ** 2))


def fourier_coefficients(f, measure, lattice, cap=DEFAULT_ENUMERATION_CAP):
    """<f, Psi_A> for every subset mask A"""
    configs, table = observable_table(f, lattice, cap)
    return coefficients_from_table(table, measure, lattice.edge_count)


def coefficients_from_table(table, measure, num_bits):
    if num_bits <= DIRECT_TRANSFORM_MAX_BITS:
        probs = measure.probabilities(enumerate_configs(num_bits))
        return _direct_coefficients(np.asarray(table, dtype=float), probs, num_bits, measure.nu)
    return fast_transform(table, measure.p)


def fourier_coefficient(f, subset, measure, lattice, cap=DEFAULT_ENUMERATION_CAP):
    """<f, Psi_A> = sum_x pi(x) f(x) Psi_A(x) by exhaustive enumeration"""
    subset = make_subset(subset, lattice.edge_count)
    configs, table = observable_table(f, lattice, cap)
    index = np.arange(configs.shape[0], dtype=np.int64)
    mask = np.array([subset_to_mask(subset)], dtype=np.int64)
    psi = _basis_matrix(mask, index, lattice.edge_count, measure.nu)[0]
    return float(np.sum(measure.probabilities(configs) * table * psi))


def weights_from_coefficients(coefficients, num_bits, variance=None):
    """Group squared coefficients by level |A| and normalize"""
    coefficients = np.asarray(coefficients, dtype=float)
    squares = coefficients ** 2
    squares[0] = 0.0
    if variance is None:
        variance = float(np.sum(squares))
    if variance <= 0.0:
        raise ConstantObservableError("observable has zero variance")
    levels = popcount(np.arange(coefficients.shape[0], dtype=np.int64))
    mass = np.bincount(levels, weights=squares, minlength=num_bits + 1)[1:] / variance
    mass[mass < WEIGHT_CLAMP] = 0.0
    mass /= mass.sum()
    return SpectralWeights(weights=mass, variance=float(variance), num_bits=int(num_bits))


def spectral_weights(f, measure, lattice, cap=DEFAULT_ENUMERATION_CAP):
    """Distribution of W for f under pi_{p,B}, from all 2^|B| coefficients"""
    configs, table = observable_table(f, lattice, cap)
    return spectral_weights_from_table(table, measure, lattice.edge_count, configs)


def spectral_weights_from_table(table, measure, num_bits, configs=None):
    if configs is None:
        configs = enumerate_configs(num_bits)
    probs = measure.probabilities(configs)
    mean = float(np.sum(probs * table))
    variance = float(np.sum(probs * (table - mean) ** 2))
    if variance <= WEIGHT_CLAMP * max(1.0, mean * mean):
        raise ConstantObservableError("observable is constant under pi (variance {})".format(variance))
    coefficients = coefficients_from_table(table, measure, num_bits)
    logger.debug("spectral weights on %d bits: mean %s variance %s", num_bits, mean, variance)
    return weights_from_coefficients(coefficients, num_bits, variance)


def toy_weights(n, gamma):
    """W for n^{-gamma/2} Psi_{1} + sqrt(1 - n^{-gamma}) Psi_{[n]}: mass n^{-gamma} at 1, the rest at n"""
    if n < 2:
        raise InvalidParameterError("toy observable needs n >= 2, got {}".format(n))
    weights = np.zeros(n)
    weights[0] = n ** (-gamma)
    weights[n - 1] += 1.0 - n ** (-gamma)
    return SpectralWeights(weights=weights, variance=1.0, num_bits=int(n))


def rho_discrete(weights, s):
    """rho(s) = E (1 - W/|B|)^s"""
    factors = 1.0 - weights.levels / weights.num_bits
    s = np.asarray(s, dtype=float)
    return np.power.outer(factors, s).T @ weights.weights if s.ndim else float(weights.weights @ factors ** s)


def tau_discrete(weights):
    """tau = |B| E(1/W) - 1/2"""
    return weights.num_bits * tau_continuous(weights) - 0.5


def rho_continuous(weights, t):
    """rho~(t) = E exp(-t W)"""
    t = np.asarray(t, dtype=float)
    if t.ndim:
        return np.exp(-np.multiply.outer(t, weights.levels)) @ weights.weights
    return float(weights.weights @ np.exp(-t * weights.levels))


def tau_continuous(weights):
    """tau~ = E(1/W)"""
    return float(weights.weights @ (1.0 / weights.levels))


def mean_level(weights):
    return float(weights.weights @ weights.levels)


def h_function(x):
    """(-x - log(1-x)) / x^2 on [0, 1), so that log(1-x) = -x - x^2 h(x)"""
    if not 0.0 <= x < 1.0:
        raise InvalidParameterError("h is defined on [0, 1), got {}".format(x))
    if x < H_SERIES_CUTOFF:
        return sum(x ** l / (l + 2) for l in range(6))
    return (-x - math.log1p(-x)) / (x * x)


def rho_discrete_from_continuous_gap(weights, s):
    """rho(s) rewritten as sum_k w_k exp(-k s/|B|) exp(-s (k/|B|)^2 h(k/|B|))"""
    total = 0.0
    size = weights.num_bits
    for k, w in zip(weights.levels, weights.weights):
        if w == 0.0:
            continue
        x = k / size
        if k == size:
            total += w if s == 0 else 0.0
            continue
        total += w * math.exp(-x * s) * math.exp(-s * x * x * h_function(x))
    return total


def no_slowing_down_bound(num_bits):
    """tau <= |B| - 1/2 for every observable since W >= 1"""
    return num_bits - 0.5


def single_edge_lower_bound(p, d):
    """Lower bound sqrt(p(1-p)) (1-p)^{2d-1} on <f, Psi_e> for an origin edge e of a d-torus"""
    return math.sqrt(p * (1.0 - p)) * (1.0 - p) ** (2 * d - 1)


def tau_lower_bound_from_coefficient(coefficient, variance, num_bits):
    """tau >= |B| <f,Psi_e>^2 / var - 1/2, from E(1/W) >= P(W = 1)"""
    return num_bits * coefficient ** 2 / variance - 0.5


def rho_continuous_lower_bound_from_coefficient(coefficient, variance, t):
    return coefficient ** 2 / variance * math.exp(-t)
