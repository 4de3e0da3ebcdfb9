"""Discrete-time heat-bath dynamics, epsilon-noise and the continuous-time coupling"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from dynperc.core import OPEN, CLOSED, sample_configs
from dynperc.errors import InvalidParameterError
from utils.seeding import replica_rng

logger = logging.getLogger(__name__)

# Cells (steps x bits) materialized per chunk of a simulated series
SERIES_CHUNK_CELLS = 1 << 22
SERIES_CHUNK_STEPS = 1 << 16


@dataclass
class ChainState:
    config: np.ndarray
    step: int
    rng: np.random.Generator


@dataclass
class TimeSeries:
    values: np.ndarray
    lattice: dict
    p: float
    seed: int
    steps: int
    observable: str = ''
    meta: dict = field(default_factory=dict)

    def header(self):
        return {'lattice': self.lattice, 'p': self.p, 'seed': self.seed,
                'steps': self.steps, 'observable': self.observable}


def start_chain(measure, lattice, rng):
    """Stationary start: Z_0 drawn exactly from the product measure"""
    config = sample_configs(measure, lattice.edge_count, 1, rng)[0]
    return ChainState(config=config, step=0, rng=rng)


def step_discrete(state, measure):
    """Resample one uniformly chosen bit from pi_p, unconditionally"""
    config = state.config.copy()
    bit = int(state.rng.integers(config.shape[0]))
    config[bit] = OPEN if state.rng.random() < measure.p else CLOSED
    return ChainState(config=config, step=state.step + 1, rng=state.rng)


def _check_epsilon(epsilon):
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidParameterError("noise level must lie in [0, 1], got {}".format(epsilon))


def noise_perturb(config, epsilon, measure, rng):
    """Each bit independently kept with probability 1-epsilon, else resampled from pi_p"""
    return noise_perturb_batch(np.atleast_2d(config), epsilon, measure, rng)[0]


def noise_perturb_batch(configs, epsilon, measure, rng):
    _check_epsilon(epsilon)
    configs = np.atleast_2d(configs)
    resample = rng.random(configs.shape) < epsilon
    fresh = np.where(rng.random(configs.shape) < measure.p, OPEN, CLOSED).astype(configs.dtype)
    return np.where(resample, fresh, configs)


def epsilon_for_time(t):
    """Resampling probability matching continuous time t (rate-one clocks per bit)"""
    if t < 0:
        raise InvalidParameterError("time must be non-negative, got {}".format(t))
    return -math.expm1(-t)


def coupled_pairs(lattice, measure, observable, t, samples, rng):
    """f(X) and f(Y) for `samples` independent pairs distributed as (Y_0, Y_t)"""
    epsilon = epsilon_for_time(t)
    first = sample_configs(measure, lattice.edge_count, samples, rng)
    second = noise_perturb_batch(first, epsilon, measure, rng)
    return observable.values(first), observable.values(second)


def _chain_block(start, size, measure, rng):
    """Configurations Z_1..Z_size following `start`, built without a per-step loop"""
    num_bits = start.shape[0]
    picks = rng.integers(num_bits, size=size)
    values = np.where(rng.random(size) < measure.p, OPEN, CLOSED).astype(np.int8)
    last = np.full((size, num_bits), -1, dtype=np.int64)
    rows = np.arange(size)
    last[rows, picks] = rows
    np.maximum.accumulate(last, axis=0, out=last)
    block = np.where(last >= 0, values[np.clip(last, 0, None)], start[None, :])
    return block.astype(np.int8)


def advance_chain(state, size, measure):
    """Z_{t+1}..Z_{t+size} after `state`, plus the state at the last of them"""
    block = _chain_block(state.config, size, measure, state.rng)
    return block, ChainState(config=block[-1], step=state.step + size, rng=state.rng)


def run_observable_series(lattice, measure, observable, steps, seed, chunk_steps=None):
    """f(Z_0), ..., f(Z_{steps-1}) of a stationary chain; bit-identical for a fixed seed"""
    if steps < 1:
        raise InvalidParameterError("steps must be >= 1, got {}".format(steps))
    rng = replica_rng(seed, 0)
    num_bits = lattice.edge_count
    if chunk_steps is None:
        chunk_steps = max(1, min(SERIES_CHUNK_STEPS, SERIES_CHUNK_CELLS // max(num_bits, 1)))
    state = start_chain(measure, lattice, rng)
    values = np.empty(steps, dtype=float)
    values[0] = observable.values(state.config[None, :])[0]
    while state.step + 1 < steps:
        done = state.step + 1
        block, state = advance_chain(state, min(chunk_steps, steps - done), measure)
        values[done:done + block.shape[0]] = observable.values(block)
    logger.debug("simulated %d steps on %d bits at p=%s", steps, num_bits, measure.p)
    return TimeSeries(values=values, lattice=lattice.descriptor(), p=measure.p, seed=int(seed),
                      steps=int(steps), observable=getattr(observable, 'name', ''))


def transition_matrix(num_bits, p):
    """Dense heat-bath kernel on the 2^|B| enumerated configurations"""
    size = 2 ** num_bits
    states = np.arange(size)
    kernel = np.zeros((size, size))
    for bit in range(num_bits):
        np.add.at(kernel, (states, states | (1 << bit)), p / num_bits)
        np.add.at(kernel, (states, states & ~(1 << bit)), (1.0 - p) / num_bits)
    return kernel


def continuous_kernel(num_bits, p, t):
    """exp(t Q) with Q = |B|(P - I): every bit carries a rate-one resampling clock"""
    generator = num_bits * (transition_matrix(num_bits, p) - np.eye(2 ** num_bits))
    return expm(t * generator)


def noise_kernel(num_bits, p, epsilon):
    """Dense kernel of noise_perturb: a Kronecker power of the one-bit resampling kernel"""
    _check_epsilon(epsilon)
    one_bit = (1.0 - epsilon) * np.eye(2) + epsilon * np.array([[1.0 - p, p], [1.0 - p, p]])
    kernel = np.ones((1, 1))
    for _ in range(num_bits):
        kernel = np.kron(one_bit, kernel)
    return kernel
