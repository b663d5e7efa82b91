# -*- coding: UTF-8 -*-
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import exceptions

log = logging.getLogger(__name__)

# Default configuration
_defaultConfig = {
    'threads': None,
    'floatFormat': '%.17g',
}

FLOAT_FORMAT = _defaultConfig['floatFormat']

MAX_SEED = 2 ** 64 - 1


def make_rng(seed):
    """ Build the generator every seeded operation draws from.

    The bit generator is fixed to PCG64 so that a given seed produces the
    same stream on every platform and numpy release that keeps PCG64 stable.
    """
    seed = check_seed(seed)
    return np.random.Generator(np.random.PCG64(seed))


def check_seed(seed):
    try:
        value = int(seed)
    except (TypeError, ValueError):
        raise exceptions.InvalidParameterFailure('seed must be an integer, got %r' % (seed,))
    if value != seed or value < 0 or value > MAX_SEED:
        raise exceptions.InvalidParameterFailure('seed must be an unsigned 64-bit integer, got %r' % (seed,))
    return value


def format_float(value):
    return FLOAT_FORMAT % value


def resolve_threads(threads=None):
    """ Number of workers to use; None means all hardware threads """
    if threads is None:
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise exceptions.InvalidParameterFailure('threads must be >= 1, got %d' % threads)
    return threads


def parallel_map(fn, items, threads=None):
    """ Map fn over items with a thread pool, returning results in input order.

    Callers reduce the returned list sequentially, which keeps every result
    independent of the number of threads.
    """
    items = list(items)
    threads = min(resolve_threads(threads), max(len(items), 1))
    if threads == 1:
        return [fn(item) for item in items]
    log.debug('Mapping %d items over %d threads', len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def options_from_environment(defaults=None):
    """Fetch optional settings from the CONTDICT_… environment variables and
    return them merged over `defaults`, in a form suitable for the CLI."""
    options = dict(_defaultConfig)
    if defaults:
        options.update(defaults)

    threads = os.environ.get('CONTDICT_THREADS')
    if threads:
        try:
            options['threads'] = resolve_threads(threads)
        except ValueError:
            raise exceptions.InvalidParameterFailure('CONTDICT_THREADS must be an integer, got %r' % threads)

    return options
