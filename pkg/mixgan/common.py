"""Commonly used exceptions, loggers and helpers."""
import errno
import logging
import os
import zlib

import numpy as np


class DimensionError(ValueError):
    """Raised when shapes or supports of operands disagree."""


class ContractError(ValueError):
    """Raised when a precondition of an operation is violated."""


class DomainError(ValueError):
    """Raised when a quantity is mathematically undefined for its inputs."""


class SpecError(ValueError):
    """Raised for malformed network specifications."""


class ConfigError(ValueError):
    """Raised for invalid game or run configurations."""


class DataFormatError(ValueError):
    """Raised when a data file does not follow its declared layout."""


class DataError(ValueError):
    """Raised when a dataset cannot serve a request."""


class ReportError(ValueError):
    """Raised when a metric report is undefined for its inputs."""


class NonFiniteLossError(RuntimeError):
    """Raised when a training loss becomes NaN or infinite."""

    def __init__(self, model_name, iteration, value):
        """Initialize the error.

        :param model_name: name of the sub-model whose loss diverged.
        :param iteration: training iteration (zero-based) of the failure.
        :param value: the offending loss value.
        """
        self.model_name = model_name
        self.iteration = iteration
        self.value = value
        super().__init__(
            'Non-finite loss {} for {} at iteration {}.'.format(
                value, model_name, iteration))

    def __reduce__(self):
        return (type(self), (self.model_name, self.iteration, self.value))


def get_named_logger(name):
    """Create a logger with a name."""
    logger = logging.getLogger('{}.{}'.format(__package__, name))
    logger.name = name
    return logger


def mkdir_p(path, info=None):
    """Make a directory if it doesn't exist."""
    try:
        os.makedirs(path)
    except OSError as exc:
        if exc.errno == errno.EEXIST and os.path.isdir(path):
            if info is not None:
                info = " {}".format(info)
                logging.warning("The path {} exists.{}".format(path, info))
        else:
            raise


def random_stream(seed, name):
    """Create a named, independent random generator from a single seed.

    Streams are keyed by a CRC32 of their name; the draws of one stream do
    not depend on which other streams exist.

    :param seed: int, run seed.
    :param name: str, name of the stream (e.g. 'latent', 'init/g0').

    :returns: `numpy.random.Generator`.
    """
    key = zlib.crc32(name.encode('utf-8'))
    ss = np.random.SeedSequence([int(seed), key])
    return np.random.Generator(np.random.PCG64(ss))
