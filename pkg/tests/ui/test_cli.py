"""Tests for the ox_slap command line and the programmatic `run`.
"""

import pathlib
import tempfile
import unittest
from unittest import mock

from click.testing import CliRunner

import ox_slap
from ox_slap.core import analytics
from ox_slap.core.decorators import LockFile
from ox_slap.core.errors import IntegrationFailure
from ox_slap.test_tools import sample_configs
from ox_slap.ui import artifacts, cli, config


def read_table(path):
    "Return (digest, columns, rows as floats) of a CSV written by ox_slap."
    digest, columns, rows = artifacts.read_csv(path)
    return digest, columns, [[float(v) for v in row] for row in rows]


class CliTestCase(unittest.TestCase):
    """Shared helpers for command line tests.
    """

    def setUp(self):
        self.tmpdir = pathlib.Path(tempfile.mkdtemp())
        self.outdir = self.tmpdir / 'out'
        self.fast_path = sample_configs.write_config(
            self.tmpdir, sample_configs.fast_document())

    def invoke(self, *args):
        return CliRunner().invoke(cli.cli, [str(a) for a in args])

    def manifest(self, outdir=None):
        return artifacts.RunManifest.read(
            (outdir or self.outdir) / artifacts.MANIFEST_NAME)


class TestAnalytic(CliTestCase):
    """The analytic subcommand.
    """

    def test_reference(self):
        "Widths, window and resolution table for the reference config."
        result = self.invoke('analytic', '--config', 'rb87_lattice',
                             '--outdir', self.outdir, '--plot-script')
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('dx_slap_nm: 256.4', result.output)
        self.assertIn('unresolved: dx_slap=330.66 nm', result.output)
        manifest = self.manifest()
        self.assertEqual(manifest.status, 'ok')
        window = manifest.results['ssa_window']
        self.assertAlmostEqual(window['lower'], 15.9, delta=0.1)
        self.assertAlmostEqual(window['upper'], 19.9, delta=0.1)
        cfg = config.load_config('rb87_lattice')
        expected = analytics.ssa_window(cfg.analytic_params(), cfg.lattice.x1,
                                        cfg.trap.dx_at)
        self.assertAlmostEqual(window['lower'], expected.lower, places=9)
        self.assertAlmostEqual(window['upper'], expected.upper, places=9)
        self.assertTrue(window['contains_omega_s0_t'])
        self.assertAlmostEqual(manifest.results['dx_cpt_nm'], 894, delta=1)
        self.assertIn('resolution.csv', manifest.outputs)
        self.assertIn(artifacts.PLOT_SCRIPT_NAME, manifest.outputs)

        digest, columns, rows = read_table(self.outdir / 'resolution.csv')
        self.assertEqual(digest, manifest.digest)
        self.assertEqual(columns, ['r', 'dx_slap_nm', 'dx_cpt_nm'])
        self.assertEqual([row[0] for row in rows],
                         [float(r) for r in cli.DEFAULT_R_VALUES])
        script = (self.outdir / artifacts.PLOT_SCRIPT_NAME).read_text()
        self.assertIn("load('resolution.csv')", script)
        self.assertIn(manifest.digest, script)

    def test_missing_config(self):
        "An unreadable config exits with code 2."
        result = self.invoke('analytic', '--config',
                             self.tmpdir / 'missing.json',
                             '--outdir', self.outdir)
        self.assertEqual(result.exit_code, 2)
        self.assertFalse(self.outdir.exists())

    def test_invalid_config(self):
        "A config with a missing key exits with code 2."
        doc = sample_configs.without(sample_configs.reference_document(),
                                     'field.sigma_us')
        path = sample_configs.write_config(self.tmpdir, doc, 'bad.json')
        result = self.invoke('analytic', '--config', path,
                             '--outdir', self.outdir)
        self.assertEqual(result.exit_code, 2)
        self.assertIn('field.sigma_us', result.output)


class TestDesign(CliTestCase):
    """The design subcommand.
    """

    def test_reference(self):
        "266 nm with w_p = lambda_L needs R of about 8.6."
        result = self.invoke('design', '--config', 'rb87_lattice',
                             '--outdir', self.outdir,
                             '--target-fwhm-nm', 266, '--technique', 'slap')
        self.assertEqual(result.exit_code, 0, result.output)
        _, columns, rows = read_table(self.outdir / 'design_slap.csv')
        self.assertEqual(columns, ['w_p_nm', 'r'])
        self.assertAlmostEqual(rows[0][0], 795.0)
        self.assertAlmostEqual(rows[0][1], 8.64, delta=0.1)

    def test_unachievable(self):
        "A target beyond reach exits with code 4 and flags the row."
        result = self.invoke('design', '--config', 'rb87_lattice',
                             '--outdir', self.outdir,
                             '--target-fwhm-nm', 60000, '--technique', 'cpt',
                             '--w-p-nm', '795,400')
        self.assertEqual(result.exit_code, cli.EXIT_INFEASIBLE)
        manifest = self.manifest()
        self.assertEqual(manifest.status, 'infeasible')
        self.assertEqual(len(manifest.errors), 2)

    def test_run(self):
        "run() drives subcommands from python."
        code = cli.run('design', 'rb87_lattice', {
            'target_fwhm_nm': 266, 'technique': 'slap',
            'outdir': str(self.outdir), 'w_p_nm': '795,1200'})
        self.assertEqual(code, 0)
        _, _, rows = read_table(self.outdir / 'design_slap.csv')
        self.assertEqual([row[0] for row in rows], [795.0, 1200.0])
        self.assertGreater(rows[1][1], rows[0][1])

    def test_run_missing_option(self):
        "run() rejects a call without a required option."
        with self.assertRaises(ValueError) as context:
            cli.run('design', 'rb87_lattice', {'outdir': str(self.outdir)})
        self.assertIn('target_fwhm_nm', str(context.exception))
        self.assertFalse(self.outdir.exists())

    def test_run_config_error(self):
        "run() reports config problems with exit code 2."
        self.assertEqual(cli.run('analytic', self.tmpdir / 'missing.json'),
                         cli.EXIT_CONFIG)

    def test_locked_outdir(self):
        "A locked output directory is refused."
        self.outdir.mkdir()
        with LockFile.for_directory(self.outdir, comment='other run'):
            result = self.invoke('design', '--config', 'rb87_lattice',
                                 '--outdir', self.outdir,
                                 '--target-fwhm-nm', 266)
        self.assertEqual(result.exit_code, 1)
        self.assertIsInstance(result.exception, FileExistsError)


class TestSimulations(CliTestCase):
    """Subcommands running the master equation on the fast config.
    """

    def test_simulate_node(self):
        "An atom at the node stays in |1> throughout."
        result = self.invoke('simulate', '--config', self.fast_path,
                             '--outdir', self.outdir, '--x-nm', 0,
                             '--samples', 21)
        self.assertEqual(result.exit_code, 0, result.output)
        _, columns, rows = read_table(self.outdir / 'simulate_slap.csv')
        self.assertEqual(columns[:4], ['t_s_us', 'rho11', 'rho22', 'rho33'])
        self.assertEqual(len(rows), 21)
        for row in rows:
            self.assertAlmostEqual(row[1], 1.0, places=8)
        manifest = self.manifest()
        self.assertEqual(manifest.status, 'ok')
        self.assertEqual(manifest.outputs, ['simulate_slap.csv'])
        self.assertAlmostEqual(manifest.results['final_populations'][0], 1.0,
                               places=8)

    def test_simulate_run(self):
        "run() drives simulate and writes the manifest."
        code = cli.run('simulate', self.fast_path, {
            'x_nm': 300, 'outdir': str(self.outdir), 'samples': 5})
        self.assertEqual(code, cli.EXIT_OK)
        _, _, rows = read_table(self.outdir / 'simulate_slap.csv')
        self.assertEqual(len(rows), 5)
        populations = self.manifest().results['final_populations']
        self.assertEqual(len(populations), 3)
        self.assertAlmostEqual(sum(populations), 1.0, places=5)
        self.assertLess(populations[0], 0.5)

    def test_scan(self):
        "Scan writes the profile table and the addressing report."
        result = self.invoke('scan', '--config', self.fast_path,
                             '--outdir', self.outdir, '--protocol', 'slap',
                             '--plot-script')
        self.assertEqual(result.exit_code, 0, result.output)
        _, columns, rows = read_table(self.outdir / 'scan_slap.csv')
        self.assertEqual(columns, ['x_nm', 'p11', 'rho_lat_per_nm',
                                   'rho1_per_nm', 'omega_p_rel'])
        self.assertEqual(len(rows), sample_configs.FAST_GRID_POINTS)
        middle = rows[len(rows) // 2]
        self.assertAlmostEqual(middle[0], 0.0, places=6)
        self.assertAlmostEqual(middle[1], 1.0, places=6)
        self.assertAlmostEqual(middle[4], 0.0, places=6)
        report = self.manifest().results['report']
        self.assertGreater(report['eta_numeric'], 0.5)
        self.assertAlmostEqual(report['dx_analytic_nm'], 256.4, delta=0.1)

    def test_scan_parallel_identical(self):
        "Serial and parallel scans write identical tables."
        doc = sample_configs.fast_document()
        doc['grid']['n_points'] = 9
        path = sample_configs.write_config(self.tmpdir, doc, 'tiny.json')
        tables = []
        for workers in (1, 2):
            outdir = self.tmpdir / f'workers_{workers}'
            result = self.invoke('scan', '--config', path, '--outdir', outdir,
                                 '--workers', workers)
            self.assertEqual(result.exit_code, 0, result.output)
            tables.append((outdir / 'scan_slap.csv').read_bytes())
        self.assertEqual(tables[0], tables[1])

    def test_integration_failure(self):
        "Integration failures exit with code 3 and are in the manifest."
        failure = IntegrationFailure('step size too small', 1e-7, x=0.0)
        with mock.patch('ox_slap.core.dynamics.survival_probability',
                        side_effect=failure):
            result = self.invoke('scan', '--config', self.fast_path,
                                 '--outdir', self.outdir)
        self.assertEqual(result.exit_code, cli.EXIT_INTEGRATION)
        manifest = self.manifest()
        self.assertEqual(manifest.status, 'integration_failure')
        self.assertEqual(manifest.errors[0]['where'], 'x_nm=0')
        self.assertEqual(manifest.errors[0]['type'], 'IntegrationFailure')

    def test_sweep(self):
        "Sweep writes one row per R with both protocols."
        doc = sample_configs.fast_document()
        doc['grid']['n_points'] = 21
        path = sample_configs.write_config(self.tmpdir, doc, 'sweep.json')
        result = self.invoke('sweep', '--config', path, '--outdir',
                             self.outdir, '--values', '10')
        self.assertEqual(result.exit_code, 0, result.output)
        _, columns, rows = read_table(self.outdir / 'sweep_r.csv')
        self.assertEqual(columns, cli.SWEEP_COLUMNS)
        self.assertEqual(len(rows), 1)
        row = dict(zip(columns, rows[0]))
        self.assertGreater(row['eta_slap_num'], row['eta_cpt_num'])


class TestConsoleScript(unittest.TestCase):
    """The real process exit code.
    """

    def test_exit_code(self):
        "An unachievable design exits the process with code 4."
        outdir = pathlib.Path(tempfile.mkdtemp()) / 'out'
        proc = sample_configs.run_cmd(
            ['design', '--config', 'rb87_lattice', '--outdir', str(outdir),
             '--target-fwhm-nm', '60000', '--technique', 'cpt'],
            cwd=pathlib.Path(ox_slap.__file__).parents[1])
        self.assertEqual(proc.returncode, cli.EXIT_INFEASIBLE, proc.stderr)

    def test_version(self):
        "--version prints the package version."
        result = CliRunner().invoke(cli.cli, ['--version'])
        self.assertEqual(result.exit_code, 0)
        self.assertIn(ox_slap.VERSION, result.output)


if __name__ == '__main__':
    unittest.main()
