"""Revealment and predictability of a query plan"""

import logging
import math

from command_modules import command_service
from dynperc import spectral
from dynperc.query import MODE_EXACT, corollary_bounds, predictability, ss_bound_check

MOD_NAME = 'revealment'
REPORT_OUTPUT = 'revealment.json'
BOUND_OUTPUT = 'bound_check.csv'

logger = logging.getLogger(__name__)


class Revealment(command_service.CommandModule):
    """RevealmentReport, plus the level-by-level bound slack when W is exact"""

    def execute(self, config):
        lattice = config.lattice
        measure = config.measure
        observable = config.observable(lattice, measure)
        plan = config.plan(lattice)
        report = predictability(plan, measure, lattice, observable, config.mode, runs=config.runs,
                                seed=config.seed, threads=config.threads, cap=config.enumeration_cap)
        payload = {'report': report.to_json(), 'plan': type(plan).__name__}

        if config.mode == MODE_EXACT:
            weights = spectral.spectral_weights(observable, measure, lattice, config.enumeration_cap)
            rows = ss_bound_check(weights, report.delta, report.epsilon)
            self.write_csv(config, BOUND_OUTPUT, ['k', 'w', 'bound', 'slack'],
                           [[r.k, r.weight, r.bound, r.slack] for r in rows],
                           delta=report.delta, epsilon=report.epsilon)
            tau_bound, rho_bound = corollary_bounds(report.delta, report.epsilon, lattice.edge_count)
            payload['bounds'] = {
                'holds': all(r.holds for r in rows),
                'tau_exact': spectral.tau_discrete(weights),
                'tau_bound': tau_bound,
                'rho': [[t, spectral.rho_discrete(weights, math.ceil(lattice.edge_count * t)), rho_bound(t)]
                        for t in config.t_grid if t > 0],
            }
        self.write_json(config, REPORT_OUTPUT, payload)
        logger.info('%s: delta=%.4f epsilon=%s (%s)', MOD_NAME, report.delta, report.epsilon, config.mode)
        return command_service.EXIT_SUCCESS, ''


def register():
    """Return class name."""
    return Revealment, MOD_NAME
