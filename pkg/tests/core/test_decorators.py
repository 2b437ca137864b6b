"""Tests for the watched decorator and LockFile.
"""

import pathlib
import tempfile
import unittest

import numpy as np

from ox_slap.core import decorators


class TestWatched(unittest.TestCase):
    """Logging of watched calls.
    """

    def test_error_logged(self):
        "Failures are logged with their type and re-raised."
        log = []

        @decorators.watched(logger=decorators.FakeLogger(echo=log.append))
        def failing_scan(n_points):
            raise ValueError(f'bad grid of {n_points}')

        with self.assertRaises(ValueError):
            failing_scan(4)
        self.assertEqual(len(log), 2)
        self.assertIn("'w_error_type': 'ValueError'", log[1])
        self.assertTrue(log[1].startswith('WARNING: watched_end_cmd'))

    def test_array_results_summarized(self):
        "Array results are logged by shape and range."
        log = []

        @decorators.watched(logger=decorators.FakeLogger(echo=log.append))
        def profile():
            return np.linspace(0.0, 1.0, 1001)

        self.assertEqual(profile().shape, (1001,))
        self.assertIn('ndarray(shape=(1001,), min=0, max=1)', log[-1])


class TestLockFile(unittest.TestCase):
    """Output directory locks.
    """

    def test_lock_released_on_error(self):
        "The lock is removed even when the guarded block fails."
        outdir = pathlib.Path(tempfile.mkdtemp())
        with self.assertRaises(RuntimeError):
            with decorators.LockFile.for_directory(outdir, comment='scan'):
                raise RuntimeError('integration stopped')
        self.assertFalse((outdir / decorators.LockFile.LOCK_NAME).exists())

    def test_conflict(self):
        "A second lock on the same directory fails."
        outdir = pathlib.Path(tempfile.mkdtemp())
        with decorators.LockFile.for_directory(outdir, comment='first'):
            with self.assertRaises(FileExistsError):
                with decorators.LockFile.for_directory(outdir):
                    pass


if __name__ == '__main__':
    unittest.main()
