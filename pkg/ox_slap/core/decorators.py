"""Decorators and context managers shared by the simulation layers.
"""

import pprint
import os
import json
import uuid
import logging as rawLogger
import datetime
import time
import threading
import functools
import pathlib

from contextlib import ContextDecorator

import numpy as np
import wrapt

DEFAULT_LOGGER = rawLogger.getLogger(__name__)
MAX_RESULT_CHARS = 200


def summarize_result(result, max_chars=MAX_RESULT_CHARS):
    """Short string describing `result` for log records.

    Arrays are summarized by shape and range rather than printed.

    >>> summarize_result(np.zeros((3, 2)))
    'ndarray(shape=(3, 2), min=0, max=0)'
    >>> summarize_result('x' * 300)[-3:]
    '...'
    """
    if isinstance(result, np.ndarray):
        if result.size and np.issubdtype(result.dtype, np.number):
            return (f'ndarray(shape={result.shape}, min={np.min(result):.6g}'
                    f', max={np.max(result):.6g})')
        return f'ndarray(shape={result.shape})'
    text = str(result)
    if len(text) > max_chars:
        text = text[:max_chars - 5] + '...'
    return text


def _start_watch(name, args, kwargs, show_args=False, tag=None,
                 logger=DEFAULT_LOGGER):
    """Helper function to start watching a command.

    :param name:    String name of command to watch.

    :param args:    Arguments to command.

    :param kwargs:  Keyword args.

    :param show_args=False:  Whether to show args/kwargs in log.

    :param tag:  Optional string or callable taking *args, **kwargs and
                 producing a string saved in the log record as 'w_tag'.
                 Typical tags name the protocol and grid size of a scan.

    :param logger:  Optional logger to use.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Dictionary of meta data for watched command.

    """
    w_data = {'w_uuid': str(uuid.uuid4()), 'w_name': name,
              'watched': 'start', 'start': time.time()}
    if show_args:
        w_data.update(w_args=summarize_result(args),
                      w_kwargs=summarize_result(kwargs))
    if isinstance(tag, str):
        w_data['w_tag'] = tag
    elif callable(tag):
        w_data['w_tag'] = tag(*args, **kwargs)

    logger.info('watched_cmd: %s', name, extra=w_data)
    return w_data


def _end_watch(w_data, str_result, logger=DEFAULT_LOGGER):
    """Log the successful end of a watched command and return `w_data`.
    """
    cmd_time = time.time() - w_data['start']
    w_data.update(watched='end', status='ok', w_run_time=cmd_time,
                  w_result=str_result)
    logger.info('watched_cmd_end: ok:%s (%.4f s)', w_data['w_name'],
                cmd_time, extra=w_data)
    return w_data


def _error_watch(w_data, my_problem, logger=DEFAULT_LOGGER):
    """Log a warning about a watched command failing and return `w_data`.
    """
    cmd_time = time.time() - w_data['start']
    w_data.update(w_error=str(my_problem), w_error_type=type(
        my_problem).__name__, status='error', w_run_time=cmd_time,
                  watched='end')
    logger.warning('watched_end_cmd: error:%s', w_data['w_name'],
                   extra=w_data)
    return w_data


def watched(wrapped=None, show_args=False, tag=None, logger=DEFAULT_LOGGER):
    """Decorator to make a command "watched" where we track timing.

    :param wrapped:    Function to wrap.

    :param show_args=False:  Whether to show (summarized) args in logs.

    :param tag:  Optional string or callable which takes in *args, **kwargs
                 and produces a string saved in the logs as 'w_tag'.

    :param logger:  Optional logger to use.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Same as calling wrapped function.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Put info about start, end, error and run time of long
              computations (scans, sweeps, CLI commands) into the logs.
              Records start with 'watched_' and carry an `extra`
              dictionary, so you can search for 'watched_end_cmd' to
              find failed runs.

>>> from ox_slap.core import decorators
>>> @decorators.watched(
...     logger=decorators.FakeLogger(),
...     tag=lambda n, protocol='slap': f'{protocol}:{n}')
... def count_points(n, protocol='slap'):
...     'example function to watch'
...     return n * 2
...
>>> count_points(3)  # doctest: +ELLIPSIS,+NORMALIZE_WHITESPACE
INFO: watched_cmd: count_points
  extra={'start': ...,
 'w_name': 'count_points',
 'w_tag': 'slap:3',
 'w_uuid': '...',
 'watched': 'start'}
INFO: watched_cmd_end: ok:count_points (... s)
  extra={'start': ...,
 'status': 'ok',
 'w_name': 'count_points',
 'w_result': '6',
 'w_run_time': ...,
 'w_tag': 'slap:3',
 'w_uuid': '...',
 'watched': 'end'}
6

    """
    if wrapped is None:  # triggered when decorator called with arguments
        return functools.partial(
            watched, show_args=show_args, tag=tag, logger=logger)

    @wrapt.decorator
    def outer_wrapper(wrapped, instance, args, kwargs):
        dummy = instance
        w_data = _start_watch(wrapped.__name__, args, kwargs, show_args,
                              tag=tag, logger=logger)
        try:
            result = wrapped(*args, **kwargs)
        except Exception as my_problem:  # pylint: disable=broad-except
            _error_watch(w_data, my_problem, logger=logger)
            raise
        try:
            str_result = summarize_result(result)
        except Exception as unexpected:  # pylint: disable=broad-except
            logger.error('Ignoring unexpected str conversion exception: %s',
                         unexpected)
            str_result = '(unknown)'
        _end_watch(w_data, str_result, logger=logger)
        return result
    return outer_wrapper(wrapped)


class LockFile(ContextDecorator):
    """Context decorator guarding an output directory with a lock file.

Runs write several CSV files and a manifest into one directory; the lock
keeps two runs from interleaving writes there. If the lock file already
exists a FileExistsError is raised after logging what the lock says.

>>> import tempfile, pathlib
>>> from ox_slap.core import decorators
>>> outdir = pathlib.Path(tempfile.mkdtemp())
>>> with decorators.LockFile.for_directory(outdir, comment='scan') as lock:
...     lock.lockpath.exists()
True
>>> (outdir / decorators.LockFile.LOCK_NAME).exists()
False
>>> problems = []
>>> with decorators.LockFile.for_directory(outdir):
...     try:
...         with decorators.LockFile.for_directory(outdir):
...             pass
...     except FileExistsError as problem:
...         problems.append(problem)
>>> len(problems)
1

    """

    LOCK_NAME = '.ox_slap.lock'

    def __init__(self, lockpath, comment='', encoding='utf8'):
        self.lockpath = pathlib.Path(lockpath)
        self.encoding = encoding
        self.comment = comment
        self.created = None

    @classmethod
    def for_directory(cls, outdir, comment=''):
        "Make a lock for output directory `outdir` (created if needed)."

        outdir = pathlib.Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        return cls(outdir / cls.LOCK_NAME, comment=comment)

    def remove_lock(self):
        """Remove lock if it exists.
        """
        if self.lockpath.exists():
            os.remove(self.lockpath)

    def __enter__(self):
        try:
            fdesc = open(self.lockpath, 'x', encoding=self.encoding)
        except FileExistsError:
            info = 'unknown'
            try:
                info = json.loads(self.lockpath.read_text(self.encoding))
            except Exception:  # pylint: disable=broad-except
                DEFAULT_LOGGER.exception(
                    'Unable to get info about lock file %s', self.lockpath)
            DEFAULT_LOGGER.warning('Found lock file %s with data: %s',
                                   self.lockpath, info)
            raise
        with fdesc:
            self.created = datetime.datetime.now()
            info = {'pid': os.getpid(), 'comment': self.comment,
                    'thread_id': threading.get_ident(),
                    'created_dt': str(self.created),
                    'created_ts': self.created.timestamp()}
            json.dump(info, fdesc, indent=2)
        return self

    def __exit__(self, exc_type, exc, exc_tb):
        if exc_type:
            DEFAULT_LOGGER.debug('Releasing lock %s after %s: %s',
                                 self.lockpath, exc_type.__name__, exc)
        self.remove_lock()
        return False


class FakeLogger:
    """Fake logging object to echo log messages to stdout for tests.

>>> from ox_slap.core import decorators
>>> log = []  # log messages will get saved to a list
>>> fl = decorators.FakeLogger(echo=log.append)
>>> fl.info('scan %s of %i points', 'slap', 201)
>>> fl.warning('row %i failed', 3)
>>> print(log)
['INFO: scan slap of 201 points', 'WARNING: row 3 failed']
    """

    def __init__(self, echo=print):
        self._echo = echo
        for name in ['debug', 'info', 'warning', 'error', 'exception']:
            setattr(self, name, functools.partial(self._show, name))

    def _show(self, level, msg, *args, extra=None):
        p_msg = msg % args
        full_msg = f'{level.upper()}: {p_msg}'
        if extra:
            full_msg += f'\n  extra={pprint.pformat(extra)}'
        self._echo(full_msg)
