"""Tests for the master equation solver.
"""

import math
import pickle
import unittest

import numpy as np

from ox_slap.core import dynamics, model
from ox_slap.core.dynamics import DensityMatrix, ProtocolKind
from ox_slap.core.errors import IntegrationFailure

from tests.core.test_model import reference_field

FAST = dynamics.IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9)


def random_density(seed):
    "Random full-rank density matrix."
    rng = np.random.default_rng(seed)
    mat = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = mat @ mat.conj().T
    return rho / np.trace(rho)


class TestGenerator(unittest.TestCase):
    """Liouvillian and its real representation.
    """

    atom = model.AtomSpec.rb87()

    def test_hamiltonian_hermitian(self):
        "RWA Hamiltonian is Hermitian for any detunings."
        ham = dynamics.rwa_hamiltonian(2.0, 3.0, 0.5, -0.25)
        np.testing.assert_allclose(ham, ham.conj().T)

    def test_rhs_traceless_hermitian(self):
        "The time derivative preserves trace and Hermiticity."
        rho = random_density(1)
        drho = dynamics.liouvillian_rhs(rho, 3e7, 2e7, 1e6, 2e6, self.atom)
        self.assertAlmostEqual(abs(np.trace(drho)), 0.0, delta=1e-6)
        np.testing.assert_allclose(drho, drho.conj().T, atol=1e-6)

    def test_real_generator_matches(self):
        "Real generator reproduces liouvillian_rhs."
        gen = dynamics.RealGenerator(self.atom, 1e6, 2e6)
        for seed in range(3):
            rho = random_density(seed)
            expected = dynamics.to_real(dynamics.liouvillian_rhs(
                rho, 3e7, 2e7, 1e6, 2e6, self.atom))
            np.testing.assert_allclose(
                gen.apply(dynamics.to_real(rho), 3e7, 2e7), expected,
                rtol=1e-9, atol=1e-3)

    def test_real_round_trip(self):
        "to_real and from_real are inverse."
        rho = random_density(7)
        np.testing.assert_allclose(
            dynamics.from_real(dynamics.to_real(rho)), rho, atol=1e-15)

    def test_steady_state_is_dark(self):
        "With both fields on the stationary state is the dark state."
        omega_p, omega_s = 2e7, 1e7
        state = dynamics.steady_state(omega_p, omega_s, 0.0, 0.0, self.atom)
        theta = model.mixing_angle(omega_p, omega_s)
        np.testing.assert_allclose(
            state.populations(),
            (math.cos(theta) ** 2, 0.0, math.sin(theta) ** 2), atol=1e-6)
        self.assertEqual(state.check(), [])


class TestDensityMatrix(unittest.TestCase):
    """DensityMatrix invariants.
    """

    def test_check_detects_problems(self):
        "Wrong trace and negative eigenvalues are reported."
        self.assertEqual(DensityMatrix.ground().check(), [])
        bad = DensityMatrix(np.diag([1.2, -0.1, 0.0]))
        problems = bad.check()
        self.assertEqual(len(problems), 2)

    def test_projector_purity(self):
        "Pure states have purity 1."
        rho = DensityMatrix.projector([1 / math.sqrt(2), 0, -1 / math.sqrt(2)])
        self.assertAlmostEqual(rho.purity(), 1.0)

    def test_read_only(self):
        "Underlying data cannot be modified."
        with self.assertRaises(ValueError):
            DensityMatrix.ground().data[0, 0] = 0.5


class TestSchedule(unittest.TestCase):
    """Protocol timing.
    """

    def test_cpt_coincident(self):
        "CPT puts both pulses at the Stokes time."
        sched = dynamics.schedule('cpt', reference_field())
        self.assertEqual(sched.t_p, sched.t_s)

    def test_slap_needs_delay(self):
        "SLAP rejects a non-positive delay."
        f = reference_field().replace(t_p=0.0)
        with self.assertRaises(ValueError):
            dynamics.schedule(ProtocolKind.SLAP, f)

    def test_protocol_names(self):
        "Protocols parse case-insensitively."
        self.assertIs(ProtocolKind.from_name('SLAP'), ProtocolKind.SLAP)
        with self.assertRaises(ValueError):
            ProtocolKind.from_name('stirap')

    def test_window(self):
        "Default window spans 2 sigma around both pulses."
        f = reference_field()
        t_start, t_end = dynamics.IntegratorConfig().window(f)
        self.assertAlmostEqual(t_start, -0.4e-6)
        self.assertAlmostEqual(t_end, f.t_p + 0.4e-6)

    def test_bad_tolerance(self):
        "Tolerances must be positive."
        with self.assertRaises(ValueError):
            dynamics.IntegratorConfig(rel_tol=0.0)


class TestEvolution(unittest.TestCase):
    """Time evolution of single sites.
    """

    atom = model.AtomSpec.rb87()

    def test_node_survival(self):
        "At the pump node the atom stays in |1>."
        for protocol in ProtocolKind:
            p11 = dynamics.survival_probability(
                0.0, protocol, reference_field(), self.atom)
            self.assertAlmostEqual(p11, 1.0, delta=1e-6)

    def test_invariants_hold(self):
        "Trace, Hermiticity and positivity hold at several positions."
        for x in (50e-9, 200e-9, 532e-9, 1e-6):
            for protocol in ProtocolKind:
                final = dynamics.evolve_site(x, protocol, reference_field(),
                                             self.atom)
                self.assertEqual(final.check(), [])

    def test_closed_system_purity(self):
        "Without decay the state stays pure."
        atom = model.AtomSpec(mass=self.atom.mass, gamma21=0.0, gamma23=0.0)
        for protocol in ProtocolKind:
            final = dynamics.evolve_site(300e-9, protocol, reference_field(),
                                         atom)
            self.assertAlmostEqual(final.purity(), 1.0, delta=1e-6)

    def test_node_population_constant(self):
        "At the node |1> is never coupled, so rho11 never moves."
        traj = dynamics.evolve_site(0.0, 'slap', reference_field(),
                                    self.atom, record=True, n_samples=101)
        self.assertLess(np.max(np.abs(traj.states[:, 0] - 1.0)), 1e-8)

    def test_cpt_reaches_dark_state(self):
        "CPT leaves the population of the dark state at the peak ratio."
        x = 1064e-9
        sched = dynamics.schedule('cpt', reference_field())
        final = dynamics.evolve_site(x, 'cpt', sched, self.atom)
        dark = model.dark_state(x, sched.t_s, sched)
        peak = model.field_amplitudes(x, sched.t_s, sched)
        oracle = dynamics.steady_state(peak.omega_p, peak.omega_s,
                                       sched.delta_p, sched.delta_s,
                                       self.atom)
        self.assertAlmostEqual(oracle.populations()[0], dark.c1 ** 2,
                               delta=1e-6)
        self.assertAlmostEqual(final.populations()[0], dark.c1 ** 2,
                               delta=0.05)

    def test_adiabatic_bands(self):
        "Strong effective fields transfer the atom and weak ones do not."
        a_const = 20
        strong = reference_field()
        weak = strong.replace(omega_s0=5 / strong.t_delay).with_r(10.0)
        for f, x, transferred in ((strong, 800e-9, True),
                                  (strong, 1064e-9, True),
                                  (weak, 50e-9, False),
                                  (weak, 100e-9, False)):
            node, stokes = model.spatial_profiles(x, f)
            omega_eff_t = f.t_delay * math.hypot(f.omega_p0 * node,
                                                 f.omega_s0 * stokes)
            p11 = dynamics.survival_probability(x, 'slap', f, self.atom,
                                                FAST)
            if transferred:
                self.assertGreaterEqual(omega_eff_t, a_const)
                self.assertLess(p11, 0.1)
            else:
                self.assertLessEqual(omega_eff_t, a_const / 3)
                self.assertGreater(p11, 0.9)

    def test_slap_transfers_neighbor(self):
        "SLAP moves the neighboring site out of |1>."
        p11 = dynamics.survival_probability(
            532e-9, ProtocolKind.SLAP, reference_field(), self.atom, FAST)
        self.assertLess(p11, 0.2)

    def test_trajectory(self):
        "Recorded trajectories are sampled on the integration window."
        traj = dynamics.evolve_site(300e-9, 'slap', reference_field(),
                                    self.atom, FAST, record=True,
                                    n_samples=51)
        self.assertEqual(traj.states.shape, (51, 9))
        self.assertTrue(np.all(np.diff(traj.times) > 0))
        np.testing.assert_allclose(traj.states[:, :3].sum(axis=1), 1.0,
                                   atol=1e-6)
        self.assertEqual(traj.density(0).populations(), (1.0, 0.0, 0.0))

    def test_deterministic(self):
        "Repeated evolutions give identical results."
        first = dynamics.evolve_site(400e-9, 'cpt', reference_field(),
                                     self.atom, FAST)
        second = dynamics.evolve_site(400e-9, 'cpt', reference_field(),
                                      self.atom, FAST)
        np.testing.assert_array_equal(first.data, second.data)


class TestIntegrationFailure(unittest.TestCase):
    """IntegrationFailure carries where and when integration stopped.
    """

    def test_pickle(self):
        "Failures survive pickling (needed by worker pools)."
        problem = IntegrationFailure('step size too small', 1e-7, x=3e-7)
        copy = pickle.loads(pickle.dumps(problem))
        self.assertEqual((copy.t_fail, copy.x), (1e-7, 3e-7))
        self.assertEqual(str(copy), str(problem))


if __name__ == '__main__':
    unittest.main()
