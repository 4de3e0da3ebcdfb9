"""Query trees, randomized query plans, revealment and predictability.

A plan maps a randomness record and a configuration to the ordered list of
bits it reveals. Explicit plans are finite mixtures of query trees; algorithmic
plans run a generator that yields the next bit to query and receives its value.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dynperc.core import OPEN, CLOSED, enumerate_configs, sample_configs
from dynperc.errors import (CapExceededError, ConstantObservableError, InvalidParameterError,
                            MalformedQueryTreeError, RepeatedQueryError)
from dynperc.spectral import DEFAULT_ENUMERATION_CAP, level_component
from utils.seeding import fan_out

logger = logging.getLogger(__name__)

MODE_EXACT = 'exact'
MODE_MC = 'mc'
PROB_TOLERANCE = 1e-12
# Exact enumeration over completions is quadratic in 2^|B|
INNER_PRODUCT_MAX_BITS = 8


@dataclass(frozen=True, eq=False)
class QueryNode:
    """Labeled node; an unlabeled node is a leaf"""
    bit: Optional[int] = None
    children: dict = field(default_factory=dict)


class QueryTree(object):
    """Validated query tree over num_bits bits"""

    def __init__(self, root, num_bits):
        self.root = root
        self.num_bits = int(num_bits)
        self._validate()

    def _validate(self):
        if self.root is None or self.root.bit is None:
            raise MalformedQueryTreeError("query tree root must carry a bit label")
        below = {}

        def descend(node):
            key = id(node)
            if key in below:
                return below[key]
            if node.bit is None:
                if node.children:
                    raise MalformedQueryTreeError("unlabeled node has children")
                below[key] = frozenset()
                return below[key]
            if not 0 <= node.bit < self.num_bits:
                raise MalformedQueryTreeError("bit {} outside [0, {})".format(node.bit, self.num_bits))
            for label in node.children:
                if label not in (OPEN, CLOSED):
                    raise MalformedQueryTreeError("edge label {} is not +1 or -1".format(label))
            bits = frozenset()
            for child in node.children.values():
                bits |= descend(child)
            if node.bit in bits:
                raise MalformedQueryTreeError("bit {} repeats on a root-to-leaf path".format(node.bit))
            below[key] = bits | {node.bit}
            return below[key]

        descend(self.root)

    def to_json(self):
        def encode(node):
            return {'bit': node.bit,
                    'children': {'{:+d}'.format(label): encode(child) for label, child in sorted(node.children.items())}}
        return encode(self.root)

    @classmethod
    def from_json(cls, data, num_bits):
        def decode(item):
            if not isinstance(item, dict):
                raise MalformedQueryTreeError("query tree node must be an object")
            children = {}
            for label, child in (item.get('children') or {}).items():
                try:
                    children[int(label)] = decode(child)
                except ValueError:
                    raise MalformedQueryTreeError("edge label {!r} is not +1 or -1".format(label))
            bit = item.get('bit')
            return QueryNode(bit=None if bit is None else int(bit), children=children)
        return cls(decode(data), num_bits)


def query_path(tree, config):
    """Distinct bit labels along the query path of config, in visit order"""
    path = []
    node = tree.root
    while node is not None and node.bit is not None:
        path.append(node.bit)
        node = node.children.get(int(config[node.bit]))
    return path


def full_reveal_tree(num_bits):
    """Queries bits 0..|B|-1 in order whatever their values"""
    node = QueryNode()
    for bit in reversed(range(num_bits)):
        node = QueryNode(bit=bit, children={OPEN: node, CLOSED: node})
    return QueryTree(node, num_bits)


def single_bit_tree(bit, num_bits):
    return QueryTree(QueryNode(bit=bit), num_bits)


def random_query_tree(num_bits, rng, max_depth=None, stop_probability=0.25):
    """Random valid query tree; children are dropped or cut short at random"""
    max_depth = num_bits if max_depth is None else min(max_depth, num_bits)

    def grow(used, depth):
        free = [b for b in range(num_bits) if b not in used]
        bit = int(free[rng.integers(len(free))])
        children = {}
        if depth + 1 < max_depth:
            for label in (OPEN, CLOSED):
                if rng.random() >= stop_probability:
                    children[label] = grow(used | {bit}, depth + 1)
        return QueryNode(bit=bit, children=children)

    return QueryTree(grow(frozenset(), 0), num_bits)


@dataclass
class QueryRun:
    queried: list
    outcome: object = None


def drive(procedure, config):
    """Run a querier generator against config, refusing repeated queries"""
    queried = []
    seen = set()
    try:
        bit = next(procedure)
        while True:
            bit = int(bit)
            if bit in seen:
                procedure.close()
                raise RepeatedQueryError(bit)
            seen.add(bit)
            queried.append(bit)
            bit = procedure.send(int(config[bit]))
    except StopIteration as stop:
        return QueryRun(queried=queried, outcome=stop.value)


class QueryPlan(object):
    """Randomized query procedure: a distribution over records plus a reveal rule"""

    num_bits = 0

    def support(self):
        """[(record, probability)] when the randomness is enumerable, else None"""
        return None

    def sample_record(self, rng):
        raise NotImplementedError

    def run(self, record, config):
        raise NotImplementedError

    def reveal(self, record, config):
        return self.run(record, config).queried


class ExplicitMixture(QueryPlan):
    """Finite mixture of query trees"""

    def __init__(self, trees, probabilities=None):
        if not trees:
            raise InvalidParameterError("mixture needs at least one query tree")
        sizes = {tree.num_bits for tree in trees}
        if len(sizes) != 1:
            raise InvalidParameterError("mixture trees disagree on the bit count: {}".format(sorted(sizes)))
        if probabilities is None:
            probabilities = [1.0 / len(trees)] * len(trees)
        probabilities = [float(q) for q in probabilities]
        if len(probabilities) != len(trees) or min(probabilities) < 0:
            raise InvalidParameterError("mixture probabilities must be non-negative, one per tree")
        if abs(sum(probabilities) - 1.0) > PROB_TOLERANCE:
            raise InvalidParameterError("mixture probabilities sum to {}, not 1".format(sum(probabilities)))
        self.trees = list(trees)
        self.probabilities = probabilities
        self.num_bits = sizes.pop()

    def support(self):
        return list(enumerate(self.probabilities))

    def sample_record(self, rng):
        return int(rng.choice(len(self.trees), p=self.probabilities))

    def run(self, record, config):
        return QueryRun(queried=query_path(self.trees[record], config))


class ClusterBfsPlan(QueryPlan):
    """Deterministic breadth-first exploration of the root cluster; reveals f exactly"""

    def __init__(self, lattice):
        self.lattice = lattice
        self.num_bits = lattice.edge_count

    def support(self):
        return [(None, 1.0)]

    def sample_record(self, rng):
        return None

    def procedure(self):
        lattice = self.lattice
        visited = {lattice.root}
        queue = deque([lattice.root])
        while queue:
            vertex = queue.popleft()
            for edge_id, neighbor in lattice.incident(vertex):
                if neighbor in visited:
                    continue
                value = yield edge_id
                if value > 0:
                    visited.add(neighbor)
                    queue.append(neighbor)
        return len(visited)

    def run(self, record, config):
        return drive(self.procedure(), config)


@dataclass
class RevealmentReport:
    delta: float
    per_bit: list
    epsilon: Optional[float] = None
    mode: str = MODE_EXACT
    runs: int = 0
    per_bit_se: list = field(default_factory=list)
    delta_se: float = 0.0
    epsilon_se: float = 0.0

    def __post_init__(self):
        if self.mode == MODE_EXACT:
            if not 0.0 < self.delta <= 1.0 + PROB_TOLERANCE:
                raise InvalidParameterError("revealment {} outside (0, 1]".format(self.delta))
            if self.epsilon is not None and not -PROB_TOLERANCE <= self.epsilon <= 1.0 + PROB_TOLERANCE:
                raise InvalidParameterError("predictability {} outside [0, 1]".format(self.epsilon))
        elif self.epsilon is not None and self.epsilon > 1.0:
            logger.warning("Monte Carlo predictability %.4f exceeds 1 (se %.4f)", self.epsilon, self.epsilon_se)

    def to_json(self):
        data = {'delta': self.delta, 'epsilon': self.epsilon, 'per_bit': list(self.per_bit),
                'mode': self.mode}
        if self.mode == MODE_MC:
            data['se'] = {'delta': self.delta_se, 'epsilon': self.epsilon_se, 'per_bit': list(self.per_bit_se)}
            data['runs'] = self.runs
        else:
            data['se'] = None
        return data


def _exact_support(plan, num_bits, cap):
    if num_bits > cap:
        raise CapExceededError(num_bits, cap)
    support = plan.support()
    if support is None:
        raise InvalidParameterError("exact mode needs a plan with enumerable randomness")
    return support


def _bits_mask(bits):
    mask = 0
    for bit in bits:
        mask |= 1 << bit
    return mask


def _revealed_masks(plan, configs):
    """Mask of revealed bits for every (record, configuration)"""
    return [(record, q, np.array([_bits_mask(plan.reveal(record, x)) for x in configs], dtype=np.int64))
            for record, q in plan.support() if q > 0]


def exact_revealment(plan, measure, num_bits, cap=DEFAULT_ENUMERATION_CAP, masks=None):
    _exact_support(plan, num_bits, cap)
    configs = enumerate_configs(num_bits)
    probs = measure.probabilities(configs)
    masks = masks if masks is not None else _revealed_masks(plan, configs)
    per_bit = np.zeros(num_bits)
    for _, q, revealed in masks:
        for bit in range(num_bits):
            per_bit[bit] += q * np.sum(probs[(revealed >> bit) & 1 == 1])
    return per_bit


def _grouped_moments(table, probs, revealed, num_bits):
    """Per (J, x_J) group: probability, conditional mean and second moment"""
    index = np.arange(probs.shape[0], dtype=np.int64)
    keys = revealed * (1 << num_bits) + (index & revealed)
    _, group = np.unique(keys, return_inverse=True)
    mass = np.bincount(group, weights=probs)
    first = np.bincount(group, weights=probs * table) / mass
    second = np.bincount(group, weights=probs * table * table) / mass
    return mass, first, second


def exact_predictability(plan, measure, num_bits, table, cap=DEFAULT_ENUMERATION_CAP, masks=None):
    """E[var(f_{J|X_J})] / var(f) by grouping configurations on (J, x_J)"""
    _exact_support(plan, num_bits, cap)
    configs = enumerate_configs(num_bits)
    probs = measure.probabilities(configs)
    table = np.asarray(table, dtype=float)
    mean = np.sum(probs * table)
    variance = np.sum(probs * (table - mean) ** 2)
    if variance <= 1e-14 * max(1.0, mean * mean):
        raise ConstantObservableError("predictability is undefined for a constant observable")
    masks = masks if masks is not None else _revealed_masks(plan, configs)
    residual = 0.0
    for _, q, revealed in masks:
        mass, first, second = _grouped_moments(table, probs, revealed, num_bits)
        residual += q * np.sum(mass * np.clip(second - first * first, 0.0, None))
    return float(residual / variance)


def revealment(plan, measure, lattice, mode=MODE_EXACT, runs=10000, seed=0, threads=None,
               cap=DEFAULT_ENUMERATION_CAP):
    """delta = max_i P(i in J) over independent (record, X)"""
    if mode == MODE_EXACT:
        per_bit = exact_revealment(plan, measure, lattice.edge_count, cap)
        return RevealmentReport(delta=float(per_bit.max()), per_bit=per_bit.tolist())
    return _mc_report(plan, measure, lattice, None, runs, seed, threads)


def predictability(plan, measure, lattice, f, mode=MODE_EXACT, runs=10000, seed=0, threads=None,
                   cap=DEFAULT_ENUMERATION_CAP):
    """Report with both delta and epsilon for observable f"""
    if mode == MODE_EXACT:
        num_bits = lattice.edge_count
        _exact_support(plan, num_bits, cap)
        configs = enumerate_configs(num_bits)
        masks = _revealed_masks(plan, configs)
        per_bit = exact_revealment(plan, measure, num_bits, cap, masks)
        epsilon = exact_predictability(plan, measure, num_bits, f.values(configs), cap, masks)
        return RevealmentReport(delta=float(per_bit.max()), per_bit=per_bit.tolist(), epsilon=epsilon)
    return _mc_report(plan, measure, lattice, f, runs, seed, threads)


def _mc_chunk(plan, measure, lattice, f):
    num_bits = lattice.edge_count

    def worker(size, rng):
        counts = np.zeros(num_bits, dtype=np.int64)
        diffs = np.zeros(size)
        outer = np.zeros(size)
        configs = sample_configs(measure, num_bits, size, rng)
        for i, x in enumerate(configs):
            record = plan.sample_record(rng)
            revealed = plan.reveal(record, x)
            counts[revealed] += 1
            if f is None:
                continue
            hidden = np.ones(num_bits, dtype=bool)
            hidden[revealed] = False
            pair = np.repeat(x[None, :], 2, axis=0)
            fresh = sample_configs(measure, num_bits, 2, rng)
            pair[:, hidden] = fresh[:, hidden]
            values = f.values(pair)
            diffs[i] = 0.5 * (values[0] - values[1]) ** 2
            outer[i] = f.values(x[None, :])[0]
        return counts, diffs, outer

    return worker


def _mc_report(plan, measure, lattice, f, runs, seed, threads):
    if runs < 2:
        raise InvalidParameterError("Monte Carlo mode needs at least 2 runs, got {}".format(runs))
    chunks = fan_out(_mc_chunk(plan, measure, lattice, f), runs, seed, threads)
    counts = sum(c for c, _, _ in chunks)
    per_bit = counts / runs
    per_bit_se = np.sqrt(per_bit * (1.0 - per_bit) / runs)
    top = int(np.argmax(per_bit))
    epsilon = None
    epsilon_se = 0.0
    if f is not None:
        diffs = np.concatenate([d for _, d, _ in chunks])
        outer = np.concatenate([o for _, _, o in chunks])
        variance = float(np.var(outer, ddof=1))
        if variance <= 0.0:
            raise ConstantObservableError("observable was constant on every Monte Carlo draw")
        epsilon = float(diffs.mean() / variance)
        epsilon_se = float(diffs.std(ddof=1) / math.sqrt(runs) / variance)
    logger.info("Monte Carlo revealment over %d runs: delta %.4f at bit %d", runs, per_bit[top], top)
    return RevealmentReport(delta=float(per_bit[top]), per_bit=per_bit.tolist(), epsilon=epsilon,
                            mode=MODE_MC, runs=int(runs), per_bit_se=per_bit_se.tolist(),
                            delta_se=float(per_bit_se[top]), epsilon_se=epsilon_se)


@dataclass
class BoundRow:
    k: int
    weight: float
    bound: float
    slack: float

    @property
    def holds(self):
        return self.slack >= -PROB_TOLERANCE


def ss_bound_check(weights, delta, epsilon):
    """P(W = k) <= 2 epsilon + 2 delta k for every level k"""
    rows = []
    for k, w in weights.rows():
        bound = 2.0 * epsilon + 2.0 * delta * k
        rows.append(BoundRow(k=k, weight=w, bound=bound, slack=bound - w))
    violated = [row.k for row in rows if not row.holds]
    if violated:
        logger.error("revealment-predictability bound fails at levels %s", violated)
    return rows


def corollary_bounds(delta, epsilon, n):
    """(5 n log(n) eps + 3 n sqrt(delta), t -> 2(eps/t + delta/t^2))"""
    if n <= 1:
        raise InvalidParameterError("bounds need |B| > 1, got {}".format(n))
    if delta <= 0:
        raise InvalidParameterError("revealment must be positive, got {}".format(delta))
    tau_bound = 5.0 * n * math.log(n) * epsilon + 3.0 * n * math.sqrt(delta)

    def rho_bound(t):
        if t <= 0:
            raise InvalidParameterError("rho bound needs t > 0, got {}".format(t))
        return 2.0 * (epsilon / t + delta / (t * t))

    return tau_bound, rho_bound


def harmonic_bound_holds(n):
    """H_n <= (5/2) log n, n >= 2"""
    if n < 2:
        raise InvalidParameterError("harmonic bound needs n >= 2, got {}".format(n))
    harmonic = sum(1.0 / i for i in range(1, n + 1))
    return harmonic <= 2.5 * math.log(n)


def _completion_masks(num_bits):
    configs = enumerate_configs(num_bits)
    return configs, np.arange(configs.shape[0], dtype=np.int64)


def random_inner_product(plan, measure, num_bits, g_table, h_table):
    """E over (record, X) of <g_{J|X_J}, h_{J|X_J}>, enumerating completions explicitly"""
    if num_bits > INNER_PRODUCT_MAX_BITS:
        raise CapExceededError(num_bits, INNER_PRODUCT_MAX_BITS)
    configs, index = _completion_masks(num_bits)
    probs = measure.probabilities(configs)
    g_table = np.asarray(g_table, dtype=float)
    h_table = np.asarray(h_table, dtype=float)
    total = 0.0
    for record, q in _exact_support(plan, num_bits, INNER_PRODUCT_MAX_BITS):
        for x_index, x in enumerate(configs):
            revealed = _bits_mask(plan.reveal(record, x))
            completions = (index & revealed) == (x_index & revealed)
            weight = probs[completions]
            inner = np.sum(weight * g_table[completions] * h_table[completions]) / weight.sum()
            total += q * probs[x_index] * inner
    return float(total)


def zeroth_mode_bound(plan, measure, num_bits, table, level, delta):
    """(E <g_{J|X_J}, 1>^2, k delta ||g||^2) for g the level-k part of f"""
    configs = enumerate_configs(num_bits)
    probs = measure.probabilities(configs)
    g_table, norm_sq = level_component(table, measure, num_bits, level)
    lhs = 0.0
    for _, q, revealed in _revealed_masks(plan, configs):
        mass, first, _ = _grouped_moments(g_table, probs, revealed, num_bits)
        lhs += q * np.sum(mass * first * first)
    return float(lhs), level * delta * norm_sq
