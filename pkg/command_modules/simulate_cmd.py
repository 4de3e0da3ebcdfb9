"""Chain simulation with windowed autocorrelation summary"""

import logging

from command_modules import command_service
from dynperc.dynamics import run_observable_series
from dynperc.errors import ConfigError
from dynperc.estimators import integrated_tau

MOD_NAME = 'simulate'
MIN_STEPS = 1000
SERIES_OUTPUT = 'series.csv'
SUMMARY_OUTPUT = 'autocorr.json'
RHO_LAGS = 10

logger = logging.getLogger(__name__)


class Simulate(command_service.CommandModule):
    """Stationary series f(Z_s) and its AutocorrEstimate"""

    def execute(self, config):
        if config.steps < MIN_STEPS:
            raise ConfigError('steps', "need at least {} steps, got {}".format(MIN_STEPS, config.steps))
        lattice = config.lattice
        measure = config.measure
        observable = config.observable(lattice, measure)
        series = run_observable_series(lattice, measure, observable, config.steps, config.seed)
        self.write_csv(config, SERIES_OUTPUT, ['value'], ([v] for v in series.values), **series.header())

        estimate = integrated_tau(series, config.s_max, config.window_c)
        summary = estimate.summary()
        summary['rho'] = estimate.rho[:RHO_LAGS + 1].tolist()
        summary['series'] = series.header()
        self.write_json(config, SUMMARY_OUTPUT, summary)
        if estimate.degenerate:
            logger.warning('%s: observable is constant along the chain', MOD_NAME)
        else:
            logger.info('%s: tau=%.4f +- %.4f (window %d)', MOD_NAME, estimate.tau, estimate.se, estimate.window)
        return command_service.EXIT_SUCCESS, ''


def register():
    """Return class name."""
    return Simulate, MOD_NAME
