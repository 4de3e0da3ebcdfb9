"""Base class for command modules"""

import logging
import os

from dynperc.errors import (CapExceededError, ConfigError, ConstantObservableError, DynpercError,
                            InvalidParameterError, LengthMismatchError,
                            MalformedQueryTreeError, RadiusOutOfRangeError)
from utils import artifacts
from utils.run_config import RunConfig, ensure_out_dir

logger = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_NUMERIC_FAILURE = 1
EXIT_CONFIG_ERROR = 2

# Errors that mean the request itself cannot be served
CONFIG_ERRORS = (ConfigError, InvalidParameterError, CapExceededError, ConstantObservableError,
                 MalformedQueryTreeError, RadiusOutOfRangeError, LengthMismatchError)


class CommandModule(object):
    """Base class for all command modules"""

    def __init__(self, mod_name):
        self.mod_name = mod_name
        self.written = []

    def execute(self, config):
        """Run the command; returns (rc, message)"""
        raise NotImplementedError

    def run(self, config):
        """execute() with library errors mapped onto exit codes; config may be a raw dict"""
        self.written = []
        try:
            if not isinstance(config, RunConfig):
                config = RunConfig(config)
            return self.execute(config)
        except CONFIG_ERRORS as e:
            logger.error('%s: %s', self.mod_name, e)
            return EXIT_CONFIG_ERROR, str(e)
        except DynpercError as e:
            logger.error('%s: numeric failure: %s', self.mod_name, e)
            return EXIT_NUMERIC_FAILURE, str(e)

    def meta(self, config, **extra):
        """Metadata carried by every artifact of this command"""
        meta = {'command': self.mod_name, 'config_hash': config.hash(), 'seed': config.seed}
        meta.update(extra)
        return meta

    def _path(self, config, name):
        return os.path.join(ensure_out_dir(config.out), name)

    def write_csv(self, config, name, columns, rows, **extra):
        path = artifacts.write_csv(self._path(config, name), self.meta(config, **extra), columns, rows)
        self.written.append(path)
        logger.info('%s: wrote %s', self.mod_name, path)
        return path

    def write_json(self, config, name, data):
        payload = dict(data)
        payload.setdefault('meta', self.meta(config))
        path = artifacts.write_json(self._path(config, name), payload)
        self.written.append(path)
        logger.info('%s: wrote %s', self.mod_name, path)
        return path
