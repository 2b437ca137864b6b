"""Config documents and helpers for tests.

The reference document is the packaged rb87_lattice config. The fast
document keeps its physics but uses a coarse grid and looser integrator
tolerances so scans finish in seconds.
"""

import copy
import json
import logging
import pathlib
import subprocess
import sys

from ox_slap.ui import config

FAST_GRID_POINTS = 41
PAPER_ENV_VAR = 'OX_SLAP_PAPER'


def reference_document():
    "Fresh copy of the packaged rb87_lattice document."
    return json.loads(config.asset_path('rb87_lattice').read_text(
        encoding='utf8'))


def fast_document(**field_changes):
    """Reference document with a coarse grid and loose tolerances.

    :param **field_changes:  Keys to set in the `field` section.
    """
    doc = reference_document()
    doc['grid']['n_points'] = FAST_GRID_POINTS
    doc['integrator'] = {'rel_tol': 1e-6, 'abs_tol': 1e-9}
    doc['field'].update(field_changes)
    return doc


def without(document, dotted):
    "Copy of `document` without the key at `dotted` path (e.g. 'field.r')."
    doc = copy.deepcopy(document)
    section, _, key = dotted.partition('.')
    if key:
        del doc[section][key]
    else:
        del doc[section]
    return doc


def write_config(directory, document, name='config.json'):
    "Write `document` as JSON under `directory` and return the path."
    path = pathlib.Path(directory) / name
    path.write_text(json.dumps(document, indent=2), encoding='utf8')
    return path


def fast_config(**field_changes):
    "RunConfig built from `fast_document`."
    return config.config_from_document(fast_document(**field_changes))


def run_cmd(args, cwd=None, timeout=300, env=None):
    """Run the ox_slap command line in a subprocess.

    :param args:     List of strings passed after the program name.

    :param cwd=None:    Optional working directory.

    :param timeout=300:  Seconds before the process is killed.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  subprocess.CompletedProcess with text stdout and stderr.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Exercise the real console entry point, including the
              process exit code, which CliRunner can only emulate.

    """
    cmd = [sys.executable, '-m', 'ox_slap.ui.cli'] + list(args)
    logging.info('Running cmd: %s', str(cmd))
    return subprocess.run(cmd, cwd=cwd, env=env, timeout=timeout,
                          capture_output=True, text=True, check=False)
