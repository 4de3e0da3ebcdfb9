"""Exact spectral weights and autocorrelations"""

import logging

from command_modules import command_service
from dynperc import spectral

MOD_NAME = 'spectrum'
WEIGHTS_OUTPUT = 'spectrum_weights.csv'
RHO_OUTPUT = 'spectrum_rho.csv'
SUMMARY_OUTPUT = 'spectrum_summary.json'

logger = logging.getLogger(__name__)


class Spectrum(command_service.CommandModule):
    """W distribution of the configured observable plus rho, rho~, tau and tau~"""

    def execute(self, config):
        lattice = config.lattice
        measure = config.measure
        observable = config.observable(lattice, measure)
        weights = spectral.spectral_weights(observable, measure, lattice, config.enumeration_cap)
        extra = {'lattice': lattice.descriptor(), 'p': measure.p, 'variance': weights.variance}
        self.write_csv(config, WEIGHTS_OUTPUT, ['k', 'w'], weights.rows(), **extra)

        rows = [['discrete', s, spectral.rho_discrete(weights, s)] for s in config.s_grid]
        rows += [['continuous', t, spectral.rho_continuous(weights, t)] for t in config.t_grid]
        self.write_csv(config, RHO_OUTPUT, ['kind', 'lag', 'rho'], rows, **extra)

        summary = {
            'num_bits': lattice.edge_count,
            'variance': weights.variance,
            'tau_discrete': spectral.tau_discrete(weights),
            'tau_continuous': spectral.tau_continuous(weights),
            'mean_level': spectral.mean_level(weights),
            'no_slowing_down_bound': spectral.no_slowing_down_bound(lattice.edge_count),
        }
        self.write_json(config, SUMMARY_OUTPUT, summary)
        logger.info('%s: tau=%.6g on %d bits', MOD_NAME, summary['tau_discrete'], lattice.edge_count)
        return command_service.EXIT_SUCCESS, ''


def register():
    """Return class name."""
    return Spectrum, MOD_NAME
