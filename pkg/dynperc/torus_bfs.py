"""Two-stage breadth-first query procedure on the torus.

Stage one explores, from the boundary of the sup-norm cube of radius r around
the origin, every cube component that touches the boundary, querying the
induced cube edges of each visited vertex. If the origin was reached, stage two
grows the origin's cluster over the whole torus, reusing known edge values.

The revealment analysis also uses b = floor(L^{kappa/3}); it plays no part in
running the procedure and is not modelled here.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from dynperc.core import KIND_TORUS
from dynperc.errors import InvalidParameterError, RadiusOutOfRangeError
from dynperc.query import QueryPlan, drive

logger = logging.getLogger(__name__)

DEFAULT_KAPPA = 0.24


@dataclass(frozen=True, eq=False)
class CubeGeometry:
    radius: int
    inside: np.ndarray
    boundary: tuple
    cube_edges: frozenset


@dataclass
class TorusQueryResult:
    queried: list
    stage_one: list
    stage_two: list
    connected: bool
    cluster_size: Optional[int] = None


def _require_torus(lattice):
    if lattice.kind != KIND_TORUS:
        raise InvalidParameterError("torus query needs a torus lattice, got {}".format(lattice.kind))


def check_radius(lattice, radius):
    _require_torus(lattice)
    side = lattice.params['L']
    if radius < 1 or 2 * radius >= side:
        raise RadiusOutOfRangeError("radius {} must satisfy 1 <= r < L/2 = {}".format(radius, side / 2))


def cube_geometry(lattice, radius):
    """Vertices, boundary and induced edges of the radius-r cube at the origin"""
    check_radius(lattice, radius)
    side, dim = lattice.params['L'], lattice.params['d']
    coords = np.array(np.unravel_index(np.arange(lattice.vertex_count), (side,) * dim)) + lattice.coord_offset
    sup = np.abs(coords).max(axis=0)
    inside = sup <= radius
    boundary = tuple(int(v) for v in np.flatnonzero(sup == radius))
    cube_edges = set()
    for vertex in np.flatnonzero(inside):
        for axis in range(dim):
            if coords[axis, vertex] < radius:
                cube_edges.add(int(vertex) * dim + axis)
    return CubeGeometry(radius=int(radius), inside=inside, boundary=boundary, cube_edges=frozenset(cube_edges))


def _neighbors(lattice, vertex, descending):
    incident = lattice.incident(vertex)
    return reversed(incident) if descending else incident


def torus_procedure(lattice, geometry, descending=False):
    """Querier generator; returns (stage_one, stage_two, cluster size or None)"""
    known = {}
    stage_one = []
    stage_two = []
    component = {}

    for seed in geometry.boundary:
        if seed in component:
            continue
        component[seed] = seed
        queue = deque([seed])
        while queue:
            vertex = queue.popleft()
            for edge_id, neighbor in _neighbors(lattice, vertex, descending):
                if edge_id not in geometry.cube_edges or edge_id in known:
                    continue
                value = yield edge_id
                known[edge_id] = value
                stage_one.append(edge_id)
                if value > 0 and neighbor not in component:
                    component[neighbor] = seed
                    queue.append(neighbor)

    origin = lattice.root
    if origin not in component:
        return stage_one, stage_two, None

    label = component[origin]
    cluster = {v for v, c in component.items() if c == label}
    queue = deque(v for v in geometry.boundary if component.get(v) == label)
    while queue:
        vertex = queue.popleft()
        for edge_id, neighbor in _neighbors(lattice, vertex, descending):
            if edge_id in known:
                value = known[edge_id]
            else:
                value = yield edge_id
                known[edge_id] = value
                stage_two.append(edge_id)
            if value > 0 and neighbor not in cluster:
                cluster.add(neighbor)
                queue.append(neighbor)
    return stage_one, stage_two, len(cluster)


def torus_query(lattice, radius, config, descending=False, geometry=None):
    """Run both stages against config and report the queried set and the outcome"""
    geometry = geometry or cube_geometry(lattice, radius)
    run = drive(torus_procedure(lattice, geometry, descending), config)
    stage_one, stage_two, size = run.outcome
    return TorusQueryResult(queried=run.queried, stage_one=stage_one, stage_two=stage_two,
                            connected=size is not None, cluster_size=size)


def radius_cap(side, kappa):
    """a = floor(L^kappa)"""
    return max(1, int(math.floor(side ** kappa + 1e-12)))


class TorusBfsPlan(QueryPlan):
    """Two-stage query with radius drawn uniformly from {1, ..., a}"""

    def __init__(self, lattice, kappa=DEFAULT_KAPPA, cap=None, descending=False):
        _require_torus(lattice)
        self.lattice = lattice
        self.kappa = float(kappa)
        self.cap = int(cap) if cap is not None else radius_cap(lattice.params['L'], self.kappa)
        self.descending = descending
        self.num_bits = lattice.edge_count
        self.geometries = {r: cube_geometry(lattice, r) for r in range(1, self.cap + 1)}
        logger.debug("torus plan L=%d d=%d kappa=%s radius cap %d", lattice.params['L'],
                     lattice.params['d'], self.kappa, self.cap)

    def support(self):
        return [(r, 1.0 / self.cap) for r in range(1, self.cap + 1)]

    def sample_record(self, rng):
        return int(rng.integers(1, self.cap + 1))

    def run(self, record, config):
        return drive(torus_procedure(self.lattice, self.geometries[record], self.descending), config)

    def query(self, record, config):
        return torus_query(self.lattice, record, config, self.descending, self.geometries[record])
