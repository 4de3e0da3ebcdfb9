"""Closed-form tree tables"""

import logging

from command_modules import command_service
from dynperc.core import KIND_TREE
from dynperc.errors import ConfigError
from dynperc.tree_exact import tree_table_row

MOD_NAME = 'tree-exact'
COLUMNS = ['n', 'p', 'var', 'tau', 'tau_per_bit', 'asymptote_ratio']
OUTPUT = 'tree_exact.csv'

logger = logging.getLogger(__name__)


class TreeExact(command_service.CommandModule):
    """Rows (n, p, var, tau, tau/|B_n|, asymptote ratio) over an n x p sweep"""

    def depths(self, config):
        if config.raw.get('n_sweep') is not None or config.raw.get('lattice') is None:
            return config.n_sweep
        return [config.lattice.params['depth']]

    def probabilities(self, config):
        if config.raw.get('p_sweep') is None and config.p is not None:
            return [config.p]
        return config.p_sweep

    def table(self, config):
        rows = []
        for p in self.probabilities(config):
            for n in self.depths(config):
                if n < 1:
                    raise ConfigError('n_sweep', "depths must be >= 1, got {}".format(n))
                row = tree_table_row(p, n)
                rows.append([row[c] for c in COLUMNS])
        return rows

    def execute(self, config):
        if config.raw.get('lattice') is not None and config.lattice.kind != KIND_TREE:
            raise ConfigError('lattice', "tree-exact needs a tree lattice, got {}".format(config.lattice.kind))
        rows = self.table(config)
        self.write_csv(config, OUTPUT, COLUMNS, rows)
        logger.info('%s: %d rows', MOD_NAME, len(rows))
        return command_service.EXIT_SUCCESS, ''


def register():
    """Return class name."""
    return TreeExact, MOD_NAME
