'''
Helpers shared by the dataset loaders, the experiment harness and the command
line driver: locating rating files, reading the thread cap from the
environment and coercing the textual values found in configuration files.
'''
import os

import numpy as np

from .bench_error import ConfigError

import logging
log = logging.getLogger(__name__)


def get_data_path(path):
    '''
    Given a relative path, returns the absolute path to a rating file.

    The current working directory is searched first, followed by the
    directory named in the ``RECBENCH_DATA`` environment variable (if set).
    '''
    if os.path.isabs(path):
        if os.path.exists(path):
            return path
        raise IOError("Could not find rating file %s" % path)

    search_dirs = [os.getcwd()]
    if os.environ.get('RECBENCH_DATA'):
        search_dirs.append(os.environ['RECBENCH_DATA'])
    log.debug("Searching %r", search_dirs)

    for dir in search_dirs:
        data_path = os.path.join(dir, path)
        log.debug('Checking %s', data_path)
        if os.path.exists(data_path):
            return os.path.abspath(data_path)
    raise IOError("Could not find rating file %s" % path)


def get_thread_count(requested=None):
    '''
    Number of worker threads used for fold parallelism.

    ``RECBENCH_THREADS`` caps the requested count. When neither is given the
    folds run serially.

    Parameters
    ----------
    requested : {None, int}
        Thread count asked for by the caller.
    '''
    cap = os.environ.get('RECBENCH_THREADS')
    if cap is not None:
        try:
            cap = int(cap)
        except ValueError:
            raise ConfigError('RECBENCH_THREADS',
                              'expected an integer, got %r' % cap)
        if cap < 1:
            raise ConfigError('RECBENCH_THREADS', 'must be at least 1')
    if requested is None:
        return 1 if cap is None else cap
    if cap is None:
        return max(1, int(requested))
    return max(1, min(int(requested), cap))


def coerce_value(text):
    '''
    Convert the string form of a configuration value to a Python value

    >>> coerce_value('40')
    40
    >>> coerce_value('0.005')
    0.005
    >>> coerce_value('true')
    True
    >>> coerce_value('none') is None
    True
    >>> coerce_value('msd')
    'msd'
    '''
    if not isinstance(text, str):
        return text
    stripped = text.strip()
    lowered = stripped.lower()
    if lowered in ('true', 'yes', 'on'):
        return True
    if lowered in ('false', 'no', 'off'):
        return False
    if lowered in ('none', 'null', ''):
        return None
    for cast in (int, float):
        try:
            return cast(stripped)
        except ValueError:
            pass
    return stripped


def split_list(text):
    '''
    Split a comma-separated configuration value into coerced values

    >>> split_list('0.005, 0.1')
    [0.005, 0.1]
    >>> split_list('cosine,msd')
    ['cosine', 'msd']
    '''
    return [coerce_value(t) for t in text.split(',') if t.strip()]


def make_rng(seed):
    '''
    Return a numpy Generator seeded with `seed`
    '''
    return np.random.default_rng(seed)
