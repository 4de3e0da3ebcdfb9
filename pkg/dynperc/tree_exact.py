"""Closed forms for the root-cluster observable on the perfect binary tree.

Everything is evaluated in log space so depths in the tens of thousands work
without overflow from (2p)^{2n} or 2^d factors.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from dynperc.errors import InvalidParameterError
from dynperc.spectral import SpectralWeights

logger = logging.getLogger(__name__)

CRITICAL_P = 0.5
# |2p - 1| below this switches the geometric ratio to its series in (2p - 1)
NEAR_CRITICAL = 2e-6
EXACT_BINOMIAL_MAX = 64
_SERIES_MAX_TERMS = 400


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("p must lie in (0, 1), got {}".format(p))


def _check_depth(n):
    if int(n) != n or n < 1:
        raise InvalidParameterError("tree depth must be an integer >= 1, got {}".format(n))


def edge_count(n):
    """|B_n| = 2^{n+1} - 2"""
    return 2 ** (int(n) + 1) - 2


def _log_geometric_ratio(p, m):
    """log of sum_{i<m} (2p)^i = (1 - (2p)^m) / (1 - 2p), vectorized over m >= 1"""
    m = np.asarray(m, dtype=float)
    h = 2.0 * p - 1.0
    if abs(h) < NEAR_CRITICAL:
        # sum_i C(m, i+1) h^i
        total = m.copy()
        term = m.copy()
        for i in range(1, _SERIES_MAX_TERMS):
            term = term * (m - i) / (i + 1) * h
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        return np.log(total)
    log_2p = math.log(2.0 * p)
    if h < 0:
        return np.log(-np.expm1(m * log_2p)) - math.log1p(-2.0 * p)
    return m * log_2p + np.log(-np.expm1(-m * log_2p)) - math.log(h)


def log_g_factors(p, n):
    """log g_{p,n}(d) for d = 1..n"""
    _check_p(p)
    _check_depth(n)
    d = np.arange(1, n + 1, dtype=float)
    return 2.0 * d * math.log(p) + 2.0 * _log_geometric_ratio(p, n + 1 - d)


def g_factor(p, n, d):
    """p^{2d} [(1 - (2p)^{n+1-d}) / (1 - 2p)]^2, continuous across p = 1/2"""
    _check_p(p)
    _check_depth(n)
    if not 1 <= d <= n:
        raise InvalidParameterError("d must lie in [1, {}], got {}".format(n, d))
    return float(math.exp(2.0 * d * math.log(p) + 2.0 * _log_geometric_ratio(p, n + 1 - d)))


def _log_binomials(top, k):
    """log C(top, k) elementwise for integer arrays top >= k >= 0"""
    top = np.asarray(top, dtype=np.int64)
    out = np.empty(top.shape, dtype=float)
    small = top <= EXACT_BINOMIAL_MAX
    out[small] = [math.log(math.comb(int(t), int(k))) for t in top[small]]
    big = ~small
    out[big] = gammaln(top[big] + 1.0) - gammaln(k + 1.0) - gammaln(top[big] - k + 1.0)
    return out


def tree_log_mgf(p, n, z):
    """log(var * E z^W) from the single d-sum"""
    if not 0.0 <= z <= 1.0:
        raise InvalidParameterError("z must lie in [0, 1], got {}".format(z))
    log_g = log_g_factors(p, n)
    if z == 0.0:
        return -math.inf
    z_nu2 = z * (1.0 - p) / p
    d = np.arange(1, n + 1, dtype=float)
    terms = d * (math.log(2.0) + math.log1p(z_nu2)) + log_g
    return float(math.log(z_nu2) - math.log1p(z_nu2) + logsumexp(terms))


def tree_mgf(p, n, z):
    """var_p(f_n) E(z^W)"""
    return math.exp(tree_log_mgf(p, n, z))


def tree_log_variance(p, n):
    return tree_log_mgf(p, n, 1.0)


def tree_variance(p, n):
    try:
        return math.exp(tree_log_variance(p, n))
    except OverflowError:
        logger.warning("variance at p=%s depth %d overflows float", p, n)
        return math.inf


def critical_variance(n):
    """n(n+1)(2n+1)/12 at p = 1/2"""
    return n * (n + 1) * (2 * n + 1) / 12


def tree_log_masses(p, n, max_level=None):
    """log m[k] = log(var P(W = k)) for k = 1..max_level (default n)"""
    log_g = log_g_factors(p, n)
    max_level = n if max_level is None else min(int(max_level), n)
    log_nu2 = math.log1p(-p) - math.log(p)
    d = np.arange(1, n + 1)
    base = d * math.log(2.0) + log_g
    out = np.empty(max_level)
    for k in range(1, max_level + 1):
        tail = slice(k - 1, n)
        out[k - 1] = k * log_nu2 + logsumexp(_log_binomials(d[tail] - 1, k - 1) + base[tail])
    return out


@dataclass(frozen=True)
class TreeSpectrum:
    depth: int
    p: float
    g: np.ndarray
    masses: np.ndarray
    variance: float
    num_bits: int

    def weights(self):
        return SpectralWeights(weights=self.masses / self.variance, variance=self.variance,
                               num_bits=self.num_bits)


def tree_spectrum(p, n):
    log_masses = tree_log_masses(p, n)
    return TreeSpectrum(depth=int(n), p=float(p), g=np.exp(log_g_factors(p, n)),
                        masses=np.exp(log_masses), variance=tree_variance(p, n),
                        num_bits=edge_count(n))


def tree_weights(p, n):
    """Exact W distribution of the root-cluster size; zero above level n"""
    log_var = tree_log_variance(p, n)
    weights = np.exp(tree_log_masses(p, n) - log_var)
    return SpectralWeights(weights=weights, variance=math.exp(log_var), num_bits=edge_count(n))


def tree_masses_exact(n):
    """Exact rational masses var P(W = k) at p = 1/2, k = 1..n"""
    _check_depth(n)
    masses = []
    for k in range(1, n + 1):
        total = Fraction(0)
        for d in range(k, n + 1):
            total += math.comb(d - 1, k - 1) * Fraction((n + 1 - d) ** 2, 2 ** d)
        masses.append(total)
    return masses


def tree_log_inverse_moment(p, n):
    """log E(1/W) from var E(1/W) = sum_d 2^d g(d) (p^{-d} - 1)/d"""
    log_g = log_g_factors(p, n)
    d = np.arange(1, n + 1, dtype=float)
    log_p = math.log(p)
    terms = d * math.log(2.0) + log_g - d * log_p + np.log(-np.expm1(d * log_p)) - np.log(d)
    return float(logsumexp(terms) - tree_log_variance(p, n))


def tree_tau_per_bit(p, n):
    """tau / |B_n| without forming |B_n|"""
    inverse_moment = math.exp(tree_log_inverse_moment(p, n))
    return inverse_moment - math.ldexp(0.5, -(n + 1)) / (1.0 - math.ldexp(1.0, -n))


def tree_tau(p, n):
    """tau = |B_n| E(1/W) - 1/2; +inf when |B_n| overflows a float"""
    log_tau_part = tree_log_inverse_moment(p, n) + math.log(2.0) * (n + 1) + math.log1p(-math.ldexp(1.0, -n))
    try:
        return math.exp(log_tau_part) - 0.5
    except OverflowError:
        logger.warning("tau for depth %d overflows float; use the per-bit form", n)
        return math.inf


def critical_rate(n):
    """6 log(n) / n, the critical growth of tau / |B_n|"""
    if n < 2:
        raise InvalidParameterError("critical rate needs n >= 2, got {}".format(n))
    return 6.0 * math.log(n) / n


def tree_tau_asymptote(p, n=None):
    """Limit of tau / |B_n|; at p = 1/2 the depth-n critical rate instead"""
    _check_p(p)
    if p == CRITICAL_P:
        if n is None:
            raise InvalidParameterError("critical asymptote needs the depth n")
        return critical_rate(n)
    if p < CRITICAL_P:
        return (1.0 - 2.0 * p) / (2.0 * p * (1.0 - p)) * math.log((1.0 - 2.0 * p * p) / (1.0 - 2.0 * p))
    return (2.0 * p - 1.0) / (1.0 - p) * math.log(p / (2.0 * p - 1.0))


def tree_offcritical_variance_asymptote(p):
    """Subcritical: the limit of var. Supercritical: c with var ~ c (2p)^{2n}"""
    _check_p(p)
    if p == CRITICAL_P:
        raise InvalidParameterError("variance grows polynomially at p = 1/2; use critical_variance")
    if p < CRITICAL_P:
        return 2.0 * p * (1.0 - p) / (1.0 - 2.0 * p) ** 3
    return 4.0 * p * p * (1.0 - p) / (2.0 * p - 1.0) ** 3


def critical_mgf_closed_form(n, z):
    """E(z^W) at p = 1/2 in closed form, z in [0, 1)"""
    if not 0.0 <= z < 1.0:
        raise InvalidParameterError("z must lie in [0, 1), got {}".format(z))
    _check_depth(n)
    u = 1.0 - z
    bracket = -math.expm1(n * math.log1p((z - 1.0) / 2.0))
    inner = (z / (n * u)
             - 2.0 * z * (1.0 + z) / (n * n * u * u)
             + z * (1.0 + z) * (3.0 + z) / (n ** 3 * u ** 3) * bracket)
    return 12.0 / ((1.0 + 1.0 / n) * (2.0 + 1.0 / n)) * inner


def tree_table_row(p, n):
    """(n, p, var, tau, tau/|B_n|, ratio of tau/|B_n| to its asymptote)"""
    per_bit = tree_tau_per_bit(p, n)
    if p == CRITICAL_P and n < 2:
        ratio = math.nan
    else:
        ratio = per_bit / tree_tau_asymptote(p, n)
    return {
        'n': int(n),
        'p': float(p),
        'var': tree_variance(p, n),
        'tau': tree_tau(p, n),
        'tau_per_bit': per_bit,
        'asymptote_ratio': ratio,
    }
