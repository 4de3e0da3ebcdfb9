"""Monte Carlo estimators for autocorrelations of stationary series"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from dynperc.dynamics import coupled_pairs
from dynperc.errors import (DegenerateSeriesError, InvalidParameterError, SeriesTooShortError,
                            WindowNotClosedError)
from utils.seeding import fan_out

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_C = 6.0
MIN_LENGTH_PER_LAG = 10
DEFAULT_BATCHES = 20

FLAG_DEGENERATE = 'degenerate-series'
FLAG_BELOW_HALF = 'tau-below-half'


def _as_values(series):
    return np.asarray(getattr(series, 'values', series), dtype=float)


def _is_constant(values):
    return values.size == 0 or np.ptp(values) == 0.0


def autocovariance(values, s_max):
    """Biased (1/T) autocovariance for lags 0..s_max via zero-padded FFT"""
    length = values.shape[0]
    centred = values - values.mean()
    size = fft.next_fast_len(2 * length)
    spectrum = fft.rfft(centred, size)
    acov = fft.irfft(spectrum * np.conj(spectrum), size)[:s_max + 1]
    return acov / length


def estimate_autocorr(series, s_max):
    """rho_hat(s) for s = 0..s_max"""
    values = _as_values(series)
    if s_max < 1:
        raise InvalidParameterError("S_max must be >= 1, got {}".format(s_max))
    if values.shape[0] < MIN_LENGTH_PER_LAG * s_max:
        raise SeriesTooShortError("series of length {} is shorter than {} x S_max = {}".format(
            values.shape[0], MIN_LENGTH_PER_LAG, MIN_LENGTH_PER_LAG * s_max))
    if _is_constant(values):
        raise DegenerateSeriesError("series is constant")
    acov = autocovariance(values, s_max)
    rho = acov / acov[0]
    rho[0] = 1.0
    return rho


@dataclass
class AutocorrEstimate:
    rho: np.ndarray
    tau: float
    window: int
    se: float
    length: int
    ess: float
    flags: list = field(default_factory=list)

    @property
    def degenerate(self):
        return FLAG_DEGENERATE in self.flags

    def summary(self):
        return {
            'tau': None if self.degenerate else self.tau,
            'window': self.window,
            'se': None if self.degenerate else self.se,
            'T': self.length,
            'ess': None if self.degenerate else self.ess,
            'flags': list(self.flags),
        }


def degenerate_estimate(length):
    logger.warning("constant series of length %d: autocorrelation undefined", length)
    return AutocorrEstimate(rho=np.array([1.0]), tau=0.0, window=0, se=0.0, length=int(length),
                            ess=0.0, flags=[FLAG_DEGENERATE])


def self_consistent_window(rho, window_c=DEFAULT_WINDOW_C):
    """Smallest M >= 1 with M >= c tau(M), tau(M) = 1/2 + sum_{s<=M} rho(s)"""
    running = 0.5 + np.cumsum(rho[1:])
    lags = np.arange(1, rho.shape[0])
    closed = np.flatnonzero(lags >= window_c * running)
    if closed.size == 0:
        raise WindowNotClosedError(rho.shape[0] - 1, float(running[-1]))
    window = int(lags[closed[0]])
    return window, float(running[closed[0]])


def integrated_tau(series, s_max=None, window_c=DEFAULT_WINDOW_C):
    """Windowed integrated autocorrelation time with its standard error"""
    values = _as_values(series)
    length = values.shape[0]
    if _is_constant(values):
        return degenerate_estimate(length)
    if s_max is None:
        s_max = max(1, length // MIN_LENGTH_PER_LAG)
    rho = estimate_autocorr(values, s_max)
    window, tau = self_consistent_window(rho, window_c)
    se = math.sqrt(2.0 * (2 * window + 1) / length) * abs(tau)
    flags = []
    if tau < 0.5:
        logger.warning("estimated tau %.4f is below 1/2 (window %d)", tau, window)
        flags.append(FLAG_BELOW_HALF)
    if window > 0.8 * s_max:
        logger.warning("window %d is close to S_max %d", window, s_max)
    ess = length / (2.0 * tau) if tau > 0 else float(length)
    return AutocorrEstimate(rho=rho, tau=tau, window=window, se=se, length=length, ess=ess, flags=flags)


class CorrelationAccumulator(object):
    """Mergeable sums of (x, y) cross-products"""

    def __init__(self):
        self.count = 0
        self.sx = 0.0
        self.sy = 0.0
        self.sxx = 0.0
        self.syy = 0.0
        self.sxy = 0.0

    @classmethod
    def of(cls, xs, ys):
        acc = cls()
        acc.count = int(xs.shape[0])
        acc.sx, acc.sy = float(xs.sum()), float(ys.sum())
        acc.sxx, acc.syy, acc.sxy = float(xs @ xs), float(ys @ ys), float(xs @ ys)
        return acc

    def merge(self, other):
        merged = CorrelationAccumulator()
        merged.count = self.count + other.count
        merged.sx, merged.sy = self.sx + other.sx, self.sy + other.sy
        merged.sxx, merged.syy = self.sxx + other.sxx, self.syy + other.syy
        merged.sxy = self.sxy + other.sxy
        return merged

    def correlation(self):
        n = self.count
        cov = self.sxy / n - (self.sx / n) * (self.sy / n)
        var_x = self.sxx / n - (self.sx / n) ** 2
        var_y = self.syy / n - (self.sy / n) ** 2
        if var_x <= 0.0 or var_y <= 0.0:
            raise DegenerateSeriesError("observable is constant on the sampled pairs")
        return cov / math.sqrt(var_x * var_y)


@dataclass
class PairCorrelation:
    t: float
    rho: float
    se: float
    samples: int


def pair_correlation_continuous(lattice, measure, f, t, samples, seed=0, threads=None,
                                batches=DEFAULT_BATCHES):
    """Correlation of f(X) and f(noise_perturb(X, 1 - e^{-t})) over independent pairs"""
    if t < 0:
        raise InvalidParameterError("time must be non-negative, got {}".format(t))
    if t == 0:
        return PairCorrelation(t=0.0, rho=1.0, se=0.0, samples=int(samples))
    if samples < 2 * batches:
        raise InvalidParameterError("need at least {} samples, got {}".format(2 * batches, samples))

    def worker(size, rng):
        xs, ys = coupled_pairs(lattice, measure, f, t, size, rng)
        return CorrelationAccumulator.of(xs, ys)

    chunk = int(math.ceil(samples / batches))
    parts = fan_out(worker, samples, seed, threads, chunk=chunk)
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    per_batch = np.array([part.correlation() for part in parts])
    se = float(per_batch.std(ddof=1) / math.sqrt(per_batch.shape[0]))
    return PairCorrelation(t=float(t), rho=total.correlation(), se=se, samples=int(samples))


def batch_means_variance(series, window):
    """Empirical variance of non-overlapping window means"""
    values = _as_values(series)
    count = values.shape[0] // window
    if count < 2:
        raise SeriesTooShortError("need at least two windows of length {}".format(window))
    means = values[:count * window].reshape(count, window).mean(axis=1)
    return float(means.var(ddof=1))


def predicted_mean_variance(tau, variance, window):
    """var of a length-T sample mean ~ 2 tau var(f) / T"""
    return 2.0 * tau * variance / window


def autocorr_standard_error(rho, s, length):
    """Bartlett standard error of rho_hat(s); rho is taken as zero past its last lag"""
    size = rho.shape[0]

    def r(u):
        u = abs(u)
        return rho[u] if u < size else 0.0

    total = 0.0
    for u in range(-(size - 1), size):
        total += (r(u) ** 2 + r(u + s) * r(u - s) - 4.0 * r(s) * r(u) * r(u - s)
                  + 2.0 * r(u) ** 2 * r(s) ** 2)
    return math.sqrt(max(total, 0.0) / length)
