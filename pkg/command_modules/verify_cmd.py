"""Acceptance suite: every exactly checkable claim against its oracle"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from command_modules import command_service
from dynperc import spectral, tree_exact
from dynperc.core import (KIND_EDGES, KIND_TORUS, KIND_TREE, BasisObservable, ProductMeasure,
                          RootClusterSize, TableObservable, build_lattice, cluster_size_at_root,
                          enumerate_configs)
from dynperc.dynamics import run_observable_series
from dynperc.estimators import autocorr_standard_error, integrated_tau, pair_correlation_continuous
from dynperc.query import (ClusterBfsPlan, ExplicitMixture, corollary_bounds,
                           full_reveal_tree, harmonic_bound_holds, predictability, random_inner_product,
                           random_query_tree, revealment, single_bit_tree, ss_bound_check,
                           zeroth_mode_bound)
from dynperc.torus_bfs import TorusBfsPlan
from utils.run_config import toy_observable
from utils.seeding import replica_rng

MOD_NAME = 'verify'
REPORT_OUTPUT = 'verify.json'

VERIFY_STEPS = 10 ** 7
VERIFY_SAMPLES = 200000
VERIFY_RUNS = 20000
FUZZ_RUNS = 1000
FUZZ_FLIPS = 100
SIGMAS = 3.0
RHO_LAGS = 10
VERIFY_S_MAX = 2000
TREND_KAPPA = 0.5
TREND_SIDES = (8, 16, 32)
CRITICAL_GRID = (64, 128, 256, 512, 1024, 2048, 4096, 8192, 10000)

logger = logging.getLogger(__name__)


@dataclass
class Criterion:
    name: str
    tags: list
    measured: float
    target: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {'name': self.name, 'tags': list(self.tags), 'measured': self.measured,
                'target': self.target, 'tolerance': self.tolerance, 'pass': bool(self.passed),
                'detail': self.detail}


class Context(object):
    """Suite-wide knobs, read once from the run config"""

    def __init__(self, config):
        raw = config.raw
        self.seed = config.seed
        self.threads = config.threads
        self.steps = int(raw.get('steps', VERIFY_STEPS))
        self.samples = int(raw.get('samples', VERIFY_SAMPLES))
        self.runs = int(raw.get('runs', VERIFY_RUNS))
        self.fuzz_runs = int(raw.get('fuzz_runs', FUZZ_RUNS))
        self.perturb = dict(raw.get('perturb') or {})

    def measured(self, name, value):
        """Measured value plus any offset injected for this criterion"""
        return value + float(self.perturb.get(name, 0.0))


def _tree(n):
    return build_lattice(KIND_TREE, {'depth': n})


def _torus(d, side):
    return build_lattice(KIND_TORUS, {'d': d, 'L': side})


def _path(num_bits):
    return build_lattice(KIND_EDGES, {'vertices': num_bits + 1,
                                      'edges': [[i, i + 1] for i in range(num_bits)]})


def _relative(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_critical_variance(ctx):
    closed = max(_relative(tree_exact.tree_variance(0.5, n), tree_exact.critical_variance(n))
                 for n in range(1, 1001))
    rational = all(sum(tree_exact.tree_masses_exact(n)) == Fraction(n * (n + 1) * (2 * n + 1), 12)
                   for n in range(1, 21))
    brute = max(_relative(spectral.spectral_weights(RootClusterSize(_tree(n)), ProductMeasure(0.5), _tree(n)).variance,
                          tree_exact.critical_variance(n)) for n in range(1, 4))
    value = ctx.measured('critical-variance', max(closed, brute))
    return Criterion('critical-variance', ['tree'], value, 0.0, 1e-9, value <= 1e-9 and rational,
                     {'closed_form': closed, 'brute_force': brute, 'rational_exact': rational})


def check_tree_weights(ctx):
    worst = 0.0
    for n in (1, 2, 3):
        lattice = _tree(n)
        for p in (0.2, 0.5, 0.8):
            measure = ProductMeasure(p)
            exact = tree_exact.tree_weights(p, n)
            brute = spectral.spectral_weights(RootClusterSize(lattice), measure, lattice)
            for k in range(1, lattice.edge_count + 1):
                worst = max(worst, abs(exact.w(k) - brute.w(k)))
    value = ctx.measured('tree-weights', worst)
    return Criterion('tree-weights', ['tree', 'spectral'], value, 0.0, 1e-9, value <= 1e-9)


def _desk_instances():
    for n in (1, 2, 3):
        for p in (0.2, 0.5, 0.8):
            lattice = _tree(n)
            yield 'tree n={} p={}'.format(n, p), lattice, ProductMeasure(p), RootClusterSize(lattice)
    for p in (0.3, 0.5):
        lattice = _torus(2, 3)
        yield 'torus L=3 p={}'.format(p), lattice, ProductMeasure(p), RootClusterSize(lattice)
    lattice = _path(4)
    yield 'toy n=4', lattice, ProductMeasure(0.5), toy_observable(4, 0.5, ProductMeasure(0.5))


def check_tau_identities(ctx):
    worst = 0.0
    ceiling_ok = True
    for label, lattice, measure, f in _desk_instances():
        weights = spectral.spectral_weights(f, measure, lattice)
        size = lattice.edge_count
        tau = spectral.tau_discrete(weights)
        # 1/2 + sum_{s>=1} (1 - k/|B|)^s summed level by level
        geometric = 0.5 + sum(w * (size - k) / k for k, w in weights.rows())
        worst = max(worst, abs(tau - geometric) / max(1.0, tau),
                    abs(tau - (size * spectral.tau_continuous(weights) - 0.5)) / max(1.0, tau))
        if lattice.kind == KIND_TREE:
            worst = max(worst, abs(tau - tree_exact.tree_tau(measure.p, lattice.params['depth'])) / max(1.0, tau))
        ceiling_ok = ceiling_ok and tau <= spectral.no_slowing_down_bound(size) + 1e-12
    value = ctx.measured('tau-identities', worst)
    return Criterion('tau-identities', ['spectral'], value, 0.0, 1e-12, value <= 1e-12 and ceiling_ok,
                     {'no_slowing_down': ceiling_ok})


def _mc_instances():
    lattice = _tree(2)
    yield 'tree n=2 p=0.5', lattice, ProductMeasure(0.5)
    for p in (0.3, 0.5):
        yield 'torus L=3 p={}'.format(p), _torus(2, 3), ProductMeasure(p)


def check_mc_vs_exact(ctx):
    worst = 0.0
    detail = {}
    for i, (label, lattice, measure) in enumerate(_mc_instances()):
        f = RootClusterSize(lattice)
        weights = spectral.spectral_weights(f, measure, lattice)
        series = run_observable_series(lattice, measure, f, ctx.steps, ctx.seed + i)
        estimate = integrated_tau(series, min(ctx.steps // 10, VERIFY_S_MAX))
        exact_tau = spectral.tau_discrete(weights)
        z_tau = abs(estimate.tau - exact_tau) / estimate.se
        window_rho = estimate.rho[:estimate.window + 1]
        z_rho = max(abs(estimate.rho[s] - spectral.rho_discrete(weights, s))
                    / autocorr_standard_error(window_rho, s, estimate.length)
                    for s in range(1, RHO_LAGS + 1))
        detail[label] = {'tau_hat': estimate.tau, 'se': estimate.se, 'tau': exact_tau, 'max_rho_sigmas': z_rho}
        worst = max(worst, z_tau, z_rho)
    value = ctx.measured('mc-vs-exact', worst)
    return Criterion('mc-vs-exact', ['mc'], value, 0.0, SIGMAS, value <= SIGMAS, detail)


def check_continuous_coupling(ctx):
    worst = 0.0
    detail = {}
    for i, (label, lattice, measure) in enumerate(_mc_instances()):
        f = RootClusterSize(lattice)
        weights = spectral.spectral_weights(f, measure, lattice)
        for j, t in enumerate((0.25, 0.5, 1.0, 2.0)):
            estimate = pair_correlation_continuous(lattice, measure, f, t, ctx.samples,
                                                   seed=ctx.seed + 100 * i + j, threads=ctx.threads)
            exact = spectral.rho_continuous(weights, t)
            sigmas = abs(estimate.rho - exact) / estimate.se
            detail['{} t={}'.format(label, t)] = {'rho_hat': estimate.rho, 'se': estimate.se, 'rho': exact}
            worst = max(worst, sigmas)
    value = ctx.measured('continuous-coupling', worst)
    return Criterion('continuous-coupling', ['mc'], value, 0.0, SIGMAS, value <= SIGMAS, detail)


def check_tree_asymptotics(ctx):
    sub = _relative(tree_exact.tree_tau_per_bit(0.25, 40), tree_exact.tree_tau_asymptote(0.25))
    sup = _relative(tree_exact.tree_tau_per_bit(0.75, 40), tree_exact.tree_tau_asymptote(0.75))
    gaps = [abs(tree_exact.tree_tau_per_bit(0.5, n) / tree_exact.critical_rate(n) - 1.0) for n in CRITICAL_GRID]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    value = ctx.measured('tree-asymptotics', max(sub, sup))
    return Criterion('tree-asymptotics', ['tree'], value, 0.0, 0.01,
                     value < 0.01 and monotone and gaps[-1] < 0.2,
                     {'subcritical': sub, 'supercritical': sup, 'critical_gaps': gaps})


def check_toy_example(ctx):
    gamma = 0.5
    lattice = _path(4)
    measure = ProductMeasure(0.5)
    brute = spectral.spectral_weights(toy_observable(4, gamma, measure), measure, lattice)
    exact_error = max(abs(brute.w(1) - 4 ** -gamma), abs(brute.w(4) - (1 - 4 ** -gamma)))
    sizes = np.array([4, 16, 64, 256])
    taus = np.array([spectral.tau_discrete(spectral.toy_weights(int(n), gamma)) for n in sizes])
    slope = float(np.polyfit(np.log(sizes), np.log(taus), 1)[0])
    value = ctx.measured('toy-example', abs(slope - (1 - gamma)) / (1 - gamma))
    return Criterion('toy-example', ['spectral'], value, 0.0, 0.05, value <= 0.05 and exact_error <= 1e-10,
                     {'slope': slope, 'weight_error': exact_error})


def _two_tree_plan():
    return ExplicitMixture([single_bit_tree(0, 2), single_bit_tree(1, 2)])


def _theorem_battery(seed):
    """(label, lattice, measure, f, plan) instances small enough for exact enumeration"""
    two = _path(2)
    half = ProductMeasure(0.5)
    yield 'two-tree basis', two, half, BasisObservable([0], half), _two_tree_plan()
    yield 'full-reveal basis', two, half, BasisObservable([0], half), ExplicitMixture([full_reveal_tree(2)])
    tree = _tree(2)
    for p in (0.3, 0.5, 0.7):
        yield 'tree n=2 cluster-bfs p={}'.format(p), tree, ProductMeasure(p), RootClusterSize(tree), ClusterBfsPlan(tree)
    yield 'tree n=2 full-reveal', tree, half, RootClusterSize(tree), ExplicitMixture([full_reveal_tree(6)])
    rng = replica_rng(seed, 7)
    for i, num_bits in enumerate((3, 4, 4, 5, 5, 6)):
        lattice = _path(num_bits)
        measure = ProductMeasure(float(rng.uniform(0.15, 0.85)))
        table = rng.normal(size=2 ** num_bits)
        trees = [random_query_tree(num_bits, rng) for _ in range(3)]
        weights = rng.dirichlet(np.ones(3))
        weights = (weights / weights.sum()).tolist()
        weights[-1] = 1.0 - sum(weights[:-1])
        yield 'random #{} |B|={}'.format(i, num_bits), lattice, measure, TableObservable(table), ExplicitMixture(trees, weights)


def check_theorem(ctx):
    min_slack = math.inf
    inner_error = 0.0
    zeroth_ok = True
    corollary_ok = True
    epsilon_ok = True
    count = 0
    rng = replica_rng(ctx.seed, 11)
    for label, lattice, measure, f, plan in _theorem_battery(ctx.seed):
        count += 1
        report = predictability(plan, measure, lattice, f)
        weights = spectral.spectral_weights(f, measure, lattice)
        rows = ss_bound_check(weights, report.delta, report.epsilon)
        min_slack = min(min_slack, min(r.slack for r in rows))
        epsilon_ok = epsilon_ok and report.epsilon <= 1.0 + 1e-12
        size = lattice.edge_count
        if size > 1:
            tau_bound, _ = corollary_bounds(report.delta, report.epsilon, size)
            corollary_ok = corollary_ok and spectral.tau_discrete(weights) <= tau_bound + 1e-9
        full = f.values(enumerate_configs(size))
        for k in range(1, size + 1):
            lhs, rhs = zeroth_mode_bound(plan, measure, size, full, k, report.delta)
            zeroth_ok = zeroth_ok and lhs <= rhs + 1e-10
        g = rng.normal(size=2 ** size)
        h = rng.normal(size=2 ** size)
        probs = measure.probabilities(enumerate_configs(size))
        direct = float(np.sum(probs * g * h))
        inner_error = max(inner_error, abs(random_inner_product(plan, measure, size, g, h) - direct))
    value = ctx.measured('revealment-theorem', -min_slack if min_slack < 0 else 0.0)
    passed = (value <= 0.0 and inner_error <= 1e-10 and zeroth_ok and corollary_ok and epsilon_ok
              and count >= 10 and all(harmonic_bound_holds(n) for n in range(2, 200)))
    return Criterion('revealment-theorem', ['theorem'], value, 0.0, 0.0, passed,
                     {'instances': count, 'min_slack': min_slack, 'inner_product_error': inner_error,
                      'zeroth_mode': zeroth_ok, 'corollary': corollary_ok, 'epsilon_le_one': epsilon_ok})


def _cut_set_holds(lattice, geometry, config, queried):
    """Origin cannot reach the cube boundary through open-or-unqueried cube edges"""
    known = set(queried)
    passable = {e for e in geometry.cube_edges if e not in known or config[e] > 0}
    boundary = set(geometry.boundary)
    seen = {lattice.root}
    stack = [lattice.root]
    while stack:
        vertex = stack.pop()
        if vertex in boundary:
            return False
        for edge_id, neighbor in lattice.incident(vertex):
            if edge_id in passable and neighbor not in seen:
                seen.add(neighbor)
                stack.append(neighbor)
    return True


def check_torus_querier(ctx):
    lattice = _torus(2, 8)
    measure = ProductMeasure(0.5)
    plan = TorusBfsPlan(lattice, kappa=TREND_KAPPA)
    rng = replica_rng(ctx.seed, 13)
    failures = {'determinism': 0, 'invariance': 0, 'cut_set': 0, 'cluster': 0}
    for _ in range(ctx.fuzz_runs):
        radius = plan.sample_record(rng)
        config = np.where(rng.random(lattice.edge_count) < measure.p, 1, -1).astype(np.int8)
        result = plan.query(radius, config)
        again = plan.query(radius, config.copy())
        if again.queried != result.queried:
            failures['determinism'] += 1
        hidden = np.setdiff1d(np.arange(lattice.edge_count), result.queried)
        for _ in range(FUZZ_FLIPS if hidden.size else 0):
            flipped = config.copy()
            picks = hidden[rng.random(hidden.size) < 0.5]
            flipped[picks] *= -1
            if plan.reveal(radius, flipped) != result.queried:
                failures['invariance'] += 1
                break
        if result.connected:
            if result.cluster_size != cluster_size_at_root(lattice, config):
                failures['cluster'] += 1
        elif not _cut_set_holds(lattice, plan.geometries[radius], config, result.stage_one):
            failures['cut_set'] += 1

    deltas = []
    for i, side in enumerate(TREND_SIDES):
        torus = _torus(2, side)
        report = revealment(TorusBfsPlan(torus, kappa=TREND_KAPPA), measure, torus, mode='mc',
                            runs=ctx.runs, seed=ctx.seed + i, threads=ctx.threads)
        deltas.append((report.delta, report.delta_se))
    separations = [(a - b) / math.hypot(sa, sb) if (sa or sb) else math.inf
                   for (a, sa), (b, sb) in zip(deltas, deltas[1:])]
    value = ctx.measured('torus-querier', min(separations))
    passed = value > SIGMAS and not any(failures.values())
    return Criterion('torus-querier', ['torus'], value, SIGMAS, 0.0, passed,
                     {'failures': failures, 'delta': deltas, 'kappa': TREND_KAPPA})


def check_subcritical_witness(ctx):
    lattice = _torus(2, 3)
    worst = math.inf
    detail = {}
    for p in (0.1, 0.2, 0.3):
        measure = ProductMeasure(p)
        f = RootClusterSize(lattice)
        coefficient = spectral.fourier_coefficient(f, [lattice.origin_edge(0)], measure, lattice)
        bound = spectral.single_edge_lower_bound(p, 2)
        detail[str(p)] = {'coefficient': coefficient, 'bound': bound}
        worst = min(worst, coefficient - bound)
    value = ctx.measured('subcritical-witness', worst)
    return Criterion('subcritical-witness', ['torus', 'spectral'], value, 0.0, 0.0, value >= 0.0, detail)


CRITERIA = [
    ('critical-variance', ['tree'], check_critical_variance),
    ('tree-weights', ['tree', 'spectral'], check_tree_weights),
    ('tau-identities', ['spectral'], check_tau_identities),
    ('mc-vs-exact', ['mc'], check_mc_vs_exact),
    ('continuous-coupling', ['mc'], check_continuous_coupling),
    ('tree-asymptotics', ['tree'], check_tree_asymptotics),
    ('toy-example', ['spectral'], check_toy_example),
    ('revealment-theorem', ['theorem'], check_theorem),
    ('torus-querier', ['torus'], check_torus_querier),
    ('subcritical-witness', ['torus', 'spectral'], check_subcritical_witness),
]


def selected(tags):
    """Criteria whose name or any tag is listed; all of them for an empty list"""
    if not tags:
        return list(CRITERIA)
    wanted = set(tags)
    return [c for c in CRITERIA if c[0] in wanted or wanted.intersection(c[1])]


class Verify(command_service.CommandModule):
    """Runs the selected criteria; rc 0 iff all pass"""

    def execute(self, config):
        ctx = Context(config)
        results = []
        for name, _, check in selected(config.tags):
            logger.info('%s: running %s', MOD_NAME, name)
            result = check(ctx)
            if not result.passed:
                logger.error('%s: %s failed (measured %s, target %s, tolerance %s)', MOD_NAME, name,
                             result.measured, result.target, result.tolerance)
            results.append(result)
        passed = all(r.passed for r in results)
        self.write_json(config, REPORT_OUTPUT, {'criteria': [r.to_json() for r in results], 'pass': passed})
        if passed:
            return command_service.EXIT_SUCCESS, ''
        failed = ', '.join(r.name for r in results if not r.passed)
        return command_service.EXIT_NUMERIC_FAILURE, 'failed: {}'.format(failed)


def register():
    """Return class name."""
    return Verify, MOD_NAME
