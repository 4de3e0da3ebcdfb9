"""Lattices, bit configurations, the Bernoulli product measure and the biased Fourier basis.

Bits are the edges of a lattice. A configuration is a dense int8 array indexed
by edge id holding +1 (open) or -1 (closed). Exact enumeration uses the
integer encoding where bit i of the row index is set iff edge i is open.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from dynperc.errors import InvalidParameterError, LengthMismatchError

logger = logging.getLogger(__name__)

KIND_TREE = 'tree'
KIND_TORUS = 'torus'
KIND_EDGES = 'edges'

OPEN = 1
CLOSED = -1


@dataclass(frozen=True, eq=False)
class Lattice:
    """Edge-indexed graph with a distinguished root (tree) or origin (torus) vertex"""
    kind: str
    vertex_count: int
    edges: np.ndarray
    root: int
    params: dict = field(default_factory=dict)
    adjacency: tuple = ()

    @property
    def edge_count(self):
        return int(self.edges.shape[0])

    def descriptor(self):
        """JSON-serializable descriptor that rebuilds this lattice"""
        if self.kind == KIND_TREE:
            return {'kind': KIND_TREE, 'depth': self.params['depth']}
        if self.kind == KIND_TORUS:
            return {'kind': KIND_TORUS, 'd': self.params['d'], 'L': self.params['L']}
        return {
            'kind': KIND_EDGES,
            'vertices': self.vertex_count,
            'edges': [[int(u), int(v)] for u, v in self.edges],
            'root': self.root,
        }

    def degree(self, vertex):
        return len(self.adjacency[vertex])

    def incident(self, vertex):
        """Tuple of (edge id, neighbor) pairs, neighbors in increasing lexicographic order"""
        return self.adjacency[vertex]

    # Torus coordinate codec

    def _require_torus(self):
        if self.kind != KIND_TORUS:
            raise InvalidParameterError("coordinate access requires a torus, got {}".format(self.kind))

    @property
    def coord_offset(self):
        self._require_torus()
        return -(self.params['L'] // 2)

    def coords(self, vertex):
        """Signed torus coordinates of a vertex id"""
        self._require_torus()
        side, dim = self.params['L'], self.params['d']
        shifted = np.unravel_index(vertex, (side,) * dim)
        return tuple(int(c) + self.coord_offset for c in shifted)

    def vertex_id(self, coords):
        """Vertex id (lexicographic rank) of signed coordinates, wrapped onto the torus"""
        self._require_torus()
        side, dim = self.params['L'], self.params['d']
        if len(coords) != dim:
            raise InvalidParameterError("expected {} coordinates, got {}".format(dim, len(coords)))
        shifted = [(int(c) - self.coord_offset) % side for c in coords]
        return int(np.ravel_multi_index(shifted, (side,) * dim))

    def sup_norm(self, vertex):
        return max(abs(c) for c in self.coords(vertex))

    def origin_edge(self, axis=0):
        """Edge id joining the origin to the unit vector along the given axis"""
        self._require_torus()
        return self.root * self.params['d'] + axis

    def edge_incidence(self):
        """Sparse |B| x |V| incidence matrix, one row per edge"""
        rows = np.repeat(np.arange(self.edge_count), 2)
        cols = self.edges.reshape(-1)
        data = np.ones(rows.shape[0], dtype=np.int32)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.edge_count, self.vertex_count))


def _adjacency(vertex_count, edges):
    incident = [[] for _ in range(vertex_count)]
    for edge_id, (u, v) in enumerate(edges):
        incident[u].append((int(edge_id), int(v)))
        incident[v].append((int(edge_id), int(u)))
    # neighbors in increasing vertex rank, i.e. lexicographic order on torus coordinates
    return tuple(tuple(sorted(entries, key=lambda item: (item[1], item[0]))) for entries in incident)


def _freeze(array):
    array.setflags(write=False)
    return array


def _build_tree(depth):
    if depth < 1:
        raise InvalidParameterError("tree depth must be >= 1, got {}".format(depth))
    vertex_count = 2 ** (depth + 1) - 1
    children = np.arange(1, vertex_count)
    # edge id = child id - 1, children in breadth-first order
    edges = np.stack([(children - 1) // 2, children], axis=1).astype(np.int64)
    return Lattice(kind=KIND_TREE, vertex_count=vertex_count, edges=_freeze(edges), root=0,
                   params={'depth': depth}, adjacency=_adjacency(vertex_count, edges))


def _build_torus(dim, side):
    if dim < 1:
        raise InvalidParameterError("torus dimension must be >= 1, got {}".format(dim))
    if side < 3:
        raise InvalidParameterError("torus side must be >= 3, got {}".format(side))
    shape = (side,) * dim
    vertex_count = side ** dim
    shifted = np.array(np.unravel_index(np.arange(vertex_count), shape))
    edges = np.empty((vertex_count * dim, 2), dtype=np.int64)
    for axis in range(dim):
        neighbor = shifted.copy()
        neighbor[axis] = (neighbor[axis] + 1) % side
        # edge id = (vertex rank, axis)
        edges[axis::dim, 0] = np.arange(vertex_count)
        edges[axis::dim, 1] = np.ravel_multi_index(tuple(neighbor), shape)
    origin = int(np.ravel_multi_index((side // 2,) * dim, shape))
    return Lattice(kind=KIND_TORUS, vertex_count=vertex_count, edges=_freeze(edges), root=origin,
                   params={'d': dim, 'L': side}, adjacency=_adjacency(vertex_count, edges))


def _build_edge_list(vertex_count, edge_list, root=0):
    if vertex_count < 1:
        raise InvalidParameterError("edge list lattice needs at least one vertex")
    if not 0 <= root < vertex_count:
        raise InvalidParameterError("root {} outside [0, {})".format(root, vertex_count))
    seen = set()
    for u, v in edge_list:
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise InvalidParameterError("edge ({}, {}) references an unknown vertex".format(u, v))
        if u == v:
            raise InvalidParameterError("self-loop at vertex {}".format(u))
        key = (min(u, v), max(u, v))
        if key in seen:
            raise InvalidParameterError("multi-edge between {} and {}".format(u, v))
        seen.add(key)
    edges = np.array(edge_list, dtype=np.int64).reshape(-1, 2)
    return Lattice(kind=KIND_EDGES, vertex_count=vertex_count, edges=_freeze(edges), root=root,
                   params={}, adjacency=_adjacency(vertex_count, edges))


def build_lattice(kind, params):
    """Build a tree, torus or explicit edge-list lattice"""
    params = dict(params)
    try:
        if kind == KIND_TREE:
            return _build_tree(int(params['depth']))
        if kind == KIND_TORUS:
            return _build_torus(int(params['d']), int(params['L']))
        if kind == KIND_EDGES:
            return _build_edge_list(int(params['vertices']), [tuple(e) for e in params['edges']],
                                    int(params.get('root', 0)))
    except KeyError as e:
        raise InvalidParameterError("{} lattice is missing parameter {}".format(kind, e))
    raise InvalidParameterError("unknown lattice kind: {}".format(kind))


def lattice_from_descriptor(descriptor):
    """Inverse of Lattice.descriptor()"""
    if 'kind' not in descriptor:
        raise InvalidParameterError("lattice descriptor has no kind")
    params = {k: v for k, v in descriptor.items() if k != 'kind'}
    return build_lattice(descriptor['kind'], params)


@dataclass(frozen=True)
class ProductMeasure:
    """Bernoulli product measure: each bit open (+1) independently with probability p"""
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidParameterError("p must lie in (0, 1), got {}".format(self.p))

    @property
    def nu(self):
        return math.sqrt((1.0 - self.p) / self.p)

    def bit_probability(self, value):
        return self.p if value > 0 else 1.0 - self.p

    def probabilities(self, configs):
        """pi_{p,B}(x) for each row of a (batch, |B|) array"""
        configs = np.atleast_2d(configs)
        open_count = np.count_nonzero(configs > 0, axis=1)
        closed_count = configs.shape[1] - open_count
        return np.exp(open_count * math.log(self.p) + closed_count * math.log1p(-self.p))


def validate_config(num_bits, config):
    """Check length and the +-1 alphabet of a configuration"""
    config = np.asarray(config)
    if config.shape[-1] != num_bits:
        raise LengthMismatchError("configuration has {} bits, lattice has {}".format(config.shape[-1], num_bits))
    if not np.all(np.abs(config) == 1):
        raise InvalidParameterError("configuration values must be +1 or -1")
    return config


def make_subset(ids, num_bits):
    """Validated BitSubset: strictly increasing edge ids below num_bits"""
    subset = tuple(int(i) for i in ids)
    for prev, cur in zip(subset, subset[1:]):
        if cur <= prev:
            raise InvalidParameterError("bit subset must be strictly increasing: {}".format(subset))
    if subset and (subset[0] < 0 or subset[-1] >= num_bits):
        raise InvalidParameterError("bit subset {} out of range for {} bits".format(subset, num_bits))
    return subset


def subset_to_mask(subset):
    mask = 0
    for i in subset:
        mask |= 1 << i
    return mask


def mask_to_subset(mask):
    subset = []
    i = 0
    while mask:
        if mask & 1:
            subset.append(i)
        mask >>= 1
        i += 1
    return tuple(subset)


_BYTE_COUNTS = np.array([bin(i).count('1') for i in range(256)], dtype=np.int64)


def popcount(masks):
    """Vectorized bit count of non-negative integer masks, one byte lookup per 8 bits"""
    masks = np.asarray(masks, dtype=np.int64)
    counts = _BYTE_COUNTS[masks & 0xFF]
    masks = masks >> 8
    while np.any(masks):
        counts += _BYTE_COUNTS[masks & 0xFF]
        masks = masks >> 8
    return counts


def enumerate_configs(num_bits):
    """All 2^|B| configurations; row x has bit i open iff bit i of x is set"""
    index = np.arange(2 ** num_bits, dtype=np.int64)
    bits = (index[:, None] >> np.arange(num_bits, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def config_index(config):
    """Row index of a configuration in enumerate_configs order"""
    config = np.asarray(config)
    weights = np.left_shift(1, np.arange(config.shape[-1], dtype=np.int64))
    return (config > 0).astype(np.int64) @ weights


def sample_config(measure, lattice, rng):
    """Exact draw from pi_{p,B}"""
    return sample_configs(measure, lattice.edge_count, 1, rng)[0]


def sample_configs(measure, num_bits, size, rng):
    return np.where(rng.random((size, num_bits)) < measure.p, OPEN, CLOSED).astype(np.int8)


def cluster_size_at_root(lattice, config):
    """Number of vertices joined to the root by open edges (breadth-first from the root only)"""
    config = validate_config(lattice.edge_count, config)
    visited = {lattice.root}
    queue = deque([lattice.root])
    while queue:
        vertex = queue.popleft()
        for edge_id, neighbor in lattice.adjacency[vertex]:
            if config[edge_id] > 0 and neighbor not in visited:
                visited.add(neighbor)
                queue.append(neighbor)
    return len(visited)


def cluster_sizes(lattice, configs, incidence_t=None):
    """Root cluster size for every row of a (batch, |B|) array"""
    configs = np.atleast_2d(validate_config(lattice.edge_count, configs))
    if incidence_t is None:
        incidence_t = lattice.edge_incidence().T.tocsr()
    open_edges = configs > 0
    reach = np.zeros((configs.shape[0], lattice.vertex_count), dtype=bool)
    reach[:, lattice.root] = True
    u, v = lattice.edges[:, 0], lattice.edges[:, 1]
    while True:
        spread = open_edges & (reach[:, u] | reach[:, v])
        touched = (incidence_t @ spread.T.astype(np.int32)).T > 0
        grown = reach | touched
        if np.array_equal(grown, reach):
            break
        reach = grown
    return np.count_nonzero(reach, axis=1)


def basis_eval(subset, config, measure):
    """Psi_A(x) = prod_{i in A} x_i nu_p^{x_i}; 1 for the empty set"""
    return float(basis_values(subset, np.atleast_2d(config), measure)[0])


def basis_values(subset, configs, measure):
    configs = np.atleast_2d(configs)
    subset = make_subset(subset, configs.shape[1])
    if not subset:
        return np.ones(configs.shape[0])
    nu = measure.nu
    factors = np.where(configs[:, list(subset)] > 0, nu, -1.0 / nu)
    return np.prod(factors, axis=1)


class Observable:
    """Real function of a bit configuration, evaluated in batches"""
    name = 'observable'

    def values(self, configs):
        raise NotImplementedError

    def __call__(self, config):
        return float(self.values(np.atleast_2d(config))[0])


class RootClusterSize(Observable):
    name = 'root-cluster'

    def __init__(self, lattice):
        self.lattice = lattice
        self._incidence_t = lattice.edge_incidence().T.tocsr()

    def values(self, configs):
        return cluster_sizes(self.lattice, configs, self._incidence_t).astype(float)

    def __call__(self, config):
        return float(cluster_size_at_root(self.lattice, config))


class BasisObservable(Observable):
    name = 'basis'

    def __init__(self, subset, measure):
        self.subset = tuple(subset)
        self.measure = measure

    def values(self, configs):
        return basis_values(self.subset, configs, self.measure)


class BitValue(Observable):
    name = 'bit'

    def __init__(self, bit):
        self.bit = int(bit)

    def values(self, configs):
        return np.atleast_2d(configs)[:, self.bit].astype(float)


class ConstantObservable(Observable):
    name = 'constant'

    def __init__(self, value):
        self.value = float(value)

    def values(self, configs):
        return np.full(np.atleast_2d(configs).shape[0], self.value)


class LinearCombination(Observable):
    name = 'linear'

    def __init__(self, terms):
        self.terms = [(float(coef), obs) for coef, obs in terms]

    def values(self, configs):
        total = np.zeros(np.atleast_2d(configs).shape[0])
        for coef, obs in self.terms:
            total += coef * obs.values(configs)
        return total


class FunctionObservable(Observable):
    """Wraps a per-configuration Python callable"""
    name = 'function'

    def __init__(self, fn):
        self.fn = fn

    def values(self, configs):
        return np.array([float(self.fn(row)) for row in np.atleast_2d(configs)])


class TableObservable(Observable):
    """Observable given by its value on every enumerated configuration"""
    name = 'table'

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)

    def values(self, configs):
        return self.table[config_index(np.atleast_2d(configs))]
