"""Run configuration loading, validation and hashing"""

import hashlib
import json
import logging
import os

import yaml

from dynperc.core import (ProductMeasure, BasisObservable, BitValue, ConstantObservable,
                          LinearCombination, RootClusterSize, lattice_from_descriptor, make_subset)
from dynperc.errors import ConfigError, DynpercError
from dynperc.query import ClusterBfsPlan, ExplicitMixture, QueryTree, full_reveal_tree
from dynperc.torus_bfs import TorusBfsPlan
from utils.seeding import default_threads

logger = logging.getLogger(__name__)

MODES = ('exact', 'mc')


class RunCfg:
    """Defaults for every optional RunConfig field"""
    OBSERVABLE = 'root-cluster'
    STEPS = 100000
    SAMPLES = 20000
    S_MAX = None
    WINDOW_C = 6.0
    KAPPA = 0.24
    RADIUS_CAP = None
    RUNS = 2000
    MODE = 'exact'
    PLAN = 'cluster-bfs'
    Z_GRID = [0.0, 0.25, 0.5, 0.75, 1.0]
    T_GRID = [0.25, 0.5, 1.0, 2.0]
    S_GRID = list(range(11))
    N_SWEEP = list(range(1, 11))
    P_SWEEP = [0.5]
    ENUMERATION_CAP = 22
    TAGS = []
    OUT = '.'

    @staticmethod
    def _do_cfg(conf, attr, cfg_str):
        if conf and conf.get(cfg_str) is not None:
            attr = conf[cfg_str]
        return attr


def _number(conf, key, default, kind=float, minimum=None):
    value = RunCfg._do_cfg(conf, default, key)
    if value is None:
        return None
    try:
        value = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(key, "expected a {}, got {!r}".format(kind.__name__, value))
    if minimum is not None and value < minimum:
        raise ConfigError(key, "must be >= {}, got {}".format(minimum, value))
    return value


def _grid(conf, key, default, kind=float):
    values = RunCfg._do_cfg(conf, default, key)
    if not isinstance(values, (list, tuple)):
        raise ConfigError(key, "expected a list, got {!r}".format(values))
    try:
        return [kind(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(key, "list entries must be numbers")


# Keys with no effect on results
HASH_EXCLUDED = ('threads',)


class RunConfig(object):
    """Validated view over a raw config dictionary"""

    def __init__(self, raw):
        if not isinstance(raw, dict):
            raise ConfigError('config', "top level must be an object")
        self.raw = raw
        if raw.get('seed') is None:
            raise ConfigError('seed', "a seed is required")
        self.seed = _number(raw, 'seed', None, int, 0)
        self.mode = RunCfg._do_cfg(raw, RunCfg.MODE, 'mode')
        if self.mode not in MODES:
            raise ConfigError('mode', "must be one of {}, got {!r}".format(MODES, self.mode))
        self.steps = _number(raw, 'steps', RunCfg.STEPS, int, 1)
        self.samples = _number(raw, 'samples', RunCfg.SAMPLES, int, 1)
        self.s_max = _number(raw, 's_max', RunCfg.S_MAX, int, 1)
        self.window_c = _number(raw, 'window_c', RunCfg.WINDOW_C, float, 0.0)
        self.kappa = _number(raw, 'kappa', RunCfg.KAPPA, float, 0.0)
        self.radius_cap = _number(raw, 'radius_cap', RunCfg.RADIUS_CAP, int, 1)
        self.runs = _number(raw, 'runs', RunCfg.RUNS, int, 2)
        self.enumeration_cap = _number(raw, 'enumeration_cap', RunCfg.ENUMERATION_CAP, int, 1)
        self.threads = _number(raw, 'threads', None, int, 1) or default_threads()
        self.z_grid = _grid(raw, 'z_grid', RunCfg.Z_GRID)
        self.t_grid = _grid(raw, 't_grid', RunCfg.T_GRID)
        self.s_grid = _grid(raw, 's_grid', RunCfg.S_GRID, int)
        self.n_sweep = _grid(raw, 'n_sweep', RunCfg.N_SWEEP, int)
        self.p_sweep = _grid(raw, 'p_sweep', RunCfg.P_SWEEP)
        for p in self.p_sweep:
            _check_p('p_sweep', p)
        self.tags = list(RunCfg._do_cfg(raw, RunCfg.TAGS, 'tags'))
        self.out = RunCfg._do_cfg(raw, RunCfg.OUT, 'out')
        self.p = None
        if raw.get('p') is not None:
            self.p = _check_p('p', _number(raw, 'p', None))
        self._lattice = None

    def require_p(self):
        if self.p is None:
            raise ConfigError('p', "this command needs p")
        return self.p

    @property
    def measure(self):
        return ProductMeasure(self.require_p())

    @property
    def lattice(self):
        if self._lattice is None:
            descriptor = self.raw.get('lattice')
            if not isinstance(descriptor, dict):
                raise ConfigError('lattice', "a lattice descriptor object is required")
            try:
                self._lattice = lattice_from_descriptor(descriptor)
            except (DynpercError, TypeError, ValueError) as e:
                raise ConfigError('lattice', str(e))
        return self._lattice

    def observable(self, lattice=None, measure=None):
        return make_observable(self.raw.get('observable', RunCfg.OBSERVABLE),
                               lattice or self.lattice, measure or self.measure)

    def plan(self, lattice=None):
        return make_plan(RunCfg._do_cfg(self.raw, RunCfg.PLAN, 'plan'), lattice or self.lattice,
                         self.kappa, self.radius_cap)

    def effective(self):
        return dict(self.raw)

    def hash(self):
        """Hash of the effective config; the thread count does not change results"""
        return config_hash({k: v for k, v in self.raw.items() if k not in HASH_EXCLUDED})


def _check_p(field, p):
    if not 0.0 < p < 1.0:
        raise ConfigError(field, "p must lie strictly between 0 and 1, got {}".format(p))
    return p


def make_observable(spec, lattice, measure):
    """Observable from its config spelling"""
    try:
        if spec == 'root-cluster':
            return RootClusterSize(lattice)
        if isinstance(spec, dict) and len(spec) == 1:
            (kind, arg), = spec.items()
            if kind == 'basis':
                return BasisObservable(make_subset(arg, lattice.edge_count), measure)
            if kind == 'bit':
                if not 0 <= int(arg) < lattice.edge_count:
                    raise ConfigError('observable', "bit {} out of range".format(arg))
                return BitValue(arg)
            if kind == 'constant':
                return ConstantObservable(arg)
            if kind == 'toy':
                return toy_observable(lattice.edge_count, float(arg['gamma']), measure)
    except (DynpercError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError('observable', str(e))
    raise ConfigError('observable', "unknown observable {!r}".format(spec))


def toy_observable(num_bits, gamma, measure):
    """n^{-gamma/2} Psi_{first bit} + sqrt(1 - n^{-gamma}) Psi_{all bits}"""
    scale = num_bits ** (-gamma)
    return LinearCombination([
        (scale ** 0.5, BasisObservable([0], measure)),
        ((1.0 - scale) ** 0.5, BasisObservable(range(num_bits), measure)),
    ])


def make_plan(spec, lattice, kappa, radius_cap=None):
    """Query plan from its config spelling"""
    try:
        if spec == 'cluster-bfs':
            return ClusterBfsPlan(lattice)
        if spec == 'full-reveal':
            return ExplicitMixture([full_reveal_tree(lattice.edge_count)])
        if spec == 'torus-bfs':
            return TorusBfsPlan(lattice, kappa=kappa, cap=radius_cap)
        if isinstance(spec, dict) and 'torus-bfs' in spec:
            options = spec['torus-bfs'] or {}
            return TorusBfsPlan(lattice, kappa=options.get('kappa', kappa), cap=options.get('radius_cap', radius_cap))
        if isinstance(spec, dict) and 'trees' in spec:
            trees = [QueryTree.from_json(item, lattice.edge_count) for item in spec['trees']]
            return ExplicitMixture(trees, spec.get('probabilities'))
    except DynpercError as e:
        raise ConfigError('plan', str(e))
    raise ConfigError('plan', "unknown plan {!r}".format(spec))


def load_config(path):
    """Read a JSON or YAML run config"""
    try:
        with open(path, 'r') as f:
            if path.endswith(('.yml', '.yaml')):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except FileNotFoundError:
        raise ConfigError('config', "file {} not found".format(path))
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        logger.error("Error parsing %s: %s", path, e)
        raise ConfigError('config', "cannot parse {}: {}".format(path, e))
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError('config', "top level of {} must be an object".format(path))
    return data


def apply_overrides(raw, seed=None, out=None, threads=None):
    """Command-line flags win over config fields"""
    merged = dict(raw)
    if seed is not None:
        merged['seed'] = seed
    if out is not None:
        merged['out'] = out
    if threads is not None:
        merged['threads'] = threads
    return merged


def canonical_json(raw):
    return json.dumps(raw, sort_keys=True, separators=(',', ':'))


def config_hash(raw):
    """SHA-256 of the canonical JSON form"""
    return hashlib.sha256(canonical_json(raw).encode('utf-8')).hexdigest()


def ensure_out_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise ConfigError('out', "cannot create {}: {}".format(path, e))
    if not os.access(path, os.W_OK):
        raise ConfigError('out', "{} is not writable".format(path))
    return path
