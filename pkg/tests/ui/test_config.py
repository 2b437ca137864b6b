"""Tests for loading and validating run configurations.
"""

import json
import math
import pathlib
import tempfile
import unittest

from ox_slap.core.dynamics import ProtocolKind
from ox_slap.core.errors import ParseError, UnitError, ValidationError
from ox_slap.test_tools import sample_configs
from ox_slap.ui import artifacts, config


class TestReferenceConfig(unittest.TestCase):
    """The packaged rubidium 87 configuration.
    """

    @classmethod
    def setUpClass(cls):
        cls.cfg = config.load_config('rb87_lattice')

    def test_derived(self):
        "Derived quantities are echoed in conventional units."
        derived = self.cfg.derived()
        self.assertAlmostEqual(derived['omega_s0_mhz'], 10.8, delta=0.108)
        self.assertAlmostEqual(derived['t_delay_us'], 0.28)
        self.assertAlmostEqual(derived['r'], 10.0)
        self.assertAlmostEqual(derived['r_prime'], 10.0 * 32 ** 4)
        self.assertAlmostEqual(derived['dx_at_nm'], 142, delta=2)
        self.assertAlmostEqual(derived['omega_s0_t'], 19.0)

    def test_si_units(self):
        "Values are converted to SI units."
        cfg = self.cfg
        self.assertAlmostEqual(cfg.field.w_p, 795e-9)
        self.assertAlmostEqual(cfg.field.w_s, 32 * 795e-9)
        self.assertAlmostEqual(cfg.atom.gamma21, 2 * math.pi * 0.96e6)
        self.assertAlmostEqual(cfg.lattice.wavelength, 1064e-9)
        self.assertEqual(cfg.grid.n_points, 201)
        self.assertIs(cfg.protocol, ProtocolKind.SLAP)

    def test_analytic_params(self):
        "Closed-form parameters match the field."
        params = self.cfg.analytic_params()
        self.assertAlmostEqual(params.omega_s0_t, 19.0)
        self.assertEqual(params.a_const, 20)

    def test_path_and_name_agree(self):
        "Loading by path or by name gives the same digest."
        by_path = config.load_config(config.asset_path('rb87_lattice'))
        self.assertEqual(by_path.digest, self.cfg.digest)

    def test_manifest_round_trip(self):
        "Derived values recompute identically from a written manifest."
        outdir = pathlib.Path(tempfile.mkdtemp())
        manifest = artifacts.RunManifest(
            command='analytic', digest=self.cfg.digest,
            config=self.cfg.document, derived=self.cfg.derived())
        path = manifest.write(outdir)
        loaded = artifacts.RunManifest.read(path)
        again = config.config_from_document(loaded.config)
        self.assertEqual(again.derived(), loaded.derived)
        self.assertEqual(again.digest, loaded.digest)
        self.assertEqual(loaded.created, manifest.created)


class TestProblems(unittest.TestCase):
    """Invalid documents are reported with the offending key path.
    """

    def check(self, error_cls, document, path):
        with self.assertRaises(error_cls) as context:
            config.config_from_document(document)
        self.assertEqual(context.exception.path, path)
        self.assertIn(path, str(context.exception))

    def test_missing_key(self):
        "A missing sigma is named by its full path."
        doc = sample_configs.without(sample_configs.reference_document(),
                                     'field.sigma_us')
        self.check(ValidationError, doc, 'field.sigma_us')

    def test_missing_section(self):
        "A missing section is named."
        doc = sample_configs.without(sample_configs.reference_document(),
                                     'atom')
        self.check(ValidationError, doc, 'atom')

    def test_missing_suffix(self):
        "A known quantity without a unit suffix is a unit error."
        doc = sample_configs.reference_document()
        doc['field']['sigma'] = doc['field'].pop('sigma_us')
        self.check(UnitError, doc, 'field.sigma')

    def test_wrong_suffix(self):
        "A known quantity with the wrong suffix is a unit error."
        doc = sample_configs.reference_document()
        doc['lattice']['lambda_us'] = doc['lattice'].pop('lambda_nm')
        self.check(UnitError, doc, 'lattice.lambda_us')

    def test_unknown_key(self):
        "Unknown keys are rejected."
        doc = sample_configs.reference_document()
        doc['grid']['spacing'] = 3
        self.check(ValidationError, doc, 'grid.spacing')

    def test_slap_needs_delay(self):
        "SLAP with zero delay is rejected."
        doc = sample_configs.reference_document()
        doc['field']['delay_factor'] = 0
        self.check(ValidationError, doc, 'field.delay_factor')

    def test_cpt_without_delay(self):
        "CPT runs may use coincident pulses with an explicit Omega_S0."
        doc = sample_configs.reference_document()
        doc['protocol'] = 'cpt'
        doc['field']['delay_factor'] = 0
        del doc['field']['omega_s0_t']
        doc['field']['omega_s0_mhz'] = 10.8
        cfg = config.config_from_document(doc)
        self.assertEqual(cfg.field.t_delay, 0.0)
        self.assertAlmostEqual(cfg.field.omega_s0, 2 * math.pi * 10.8e6)

    def test_omega_cross_check(self):
        "An Omega_S0 override must agree with Omega_S0 T within 1%."
        doc = sample_configs.reference_document()
        doc['field']['omega_s0_mhz'] = 10.8
        cfg = config.config_from_document(doc)
        self.assertAlmostEqual(cfg.derived()['omega_s0_mhz'], 10.8)
        doc['field']['omega_s0_mhz'] = 12.0
        self.check(ValidationError, doc, 'field.omega_s0_mhz')

    def test_width_given_twice(self):
        "A width given in two units is ambiguous."
        doc = sample_configs.reference_document()
        doc['field']['w_p_nm'] = 795
        self.check(ValidationError, doc, 'field.w_p_over_lambda_l')

    def test_bad_value(self):
        "Model invariants are enforced."
        doc = sample_configs.reference_document()
        doc['lattice']['n_sites'] = 4
        self.check(ValidationError, doc, 'lattice')

    def test_float_site_count(self):
        "A site count of 5.0 loads as five sites."
        doc = sample_configs.reference_document()
        doc['lattice']['n_sites'] = 5.0
        cfg = config.config_from_document(doc)
        self.assertEqual(cfg.lattice.n_sites, 5)
        self.assertEqual(len(cfg.lattice.site_centers()), 5)

    def test_grid_points(self):
        "Grid sizes must be integers; 41.0 is accepted as 41."
        doc = sample_configs.reference_document()
        doc['grid']['n_points'] = 41.0
        self.assertEqual(config.config_from_document(doc).grid.n_points, 41)
        doc['grid']['n_points'] = 40.5
        self.check(ValidationError, doc, 'grid.n_points')
        doc['grid']['n_points'] = 40
        self.check(ValidationError, doc, 'grid')

    def test_not_a_number(self):
        "Values must be numbers."
        doc = sample_configs.reference_document()
        doc['adiabatic']['a_const'] = 'twenty'
        self.check(ValidationError, doc, 'adiabatic.a_const')

    def test_bad_protocol(self):
        "Protocols are slap or cpt."
        doc = sample_configs.reference_document()
        doc['protocol'] = 'stirap'
        self.check(ValidationError, doc, 'protocol')

    def test_parse_errors(self):
        "Missing files and invalid JSON are parse errors."
        with self.assertRaises(ParseError):
            config.load_config('no_such_config')
        path = pathlib.Path(tempfile.mkdtemp()) / 'broken.json'
        path.write_text('{"atom": ', encoding='utf8')
        with self.assertRaises(ParseError) as context:
            config.load_config(path)
        self.assertIn('line 1', str(context.exception))

    def test_digest_ignores_key_order(self):
        "Digest depends on content, not key order."
        doc = sample_configs.reference_document()
        reordered = json.loads(json.dumps(doc, sort_keys=True))
        self.assertEqual(config.config_digest(doc),
                         config.config_digest(reordered))
        doc['field']['r'] = 11
        self.assertNotEqual(config.config_digest(doc),
                            config.config_digest(reordered))


if __name__ == '__main__':
    unittest.main()
