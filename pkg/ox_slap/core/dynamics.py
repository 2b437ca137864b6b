"""Open-system evolution of a single Lambda atom at a fixed position.

The density matrix is evolved on its 9 independent real degrees of
freedom (3 populations and the real and imaginary parts of the 3
coherences), so Hermiticity holds by construction. The generator of
that real system is assembled once per atom from `liouvillian_rhs`
and is affine in the two Rabi frequencies, which makes each right hand
side evaluation a few 9x9 matrix-vector products.
"""

import dataclasses
import enum
import logging
import math
import typing

import numpy as np
from scipy.integrate import solve_ivp

from ox_slap.core import model
from ox_slap.core.errors import IntegrationFailure

DEFAULT_LOGGER = logging.getLogger(__name__)

TRACE_TOL = 1e-6
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = -1e-8
CLAMP_TOL = 1e-6

REAL_LABELS = ('rho11', 'rho22', 'rho33', 're_rho12', 'im_rho12',
               're_rho13', 'im_rho13', 're_rho23', 'im_rho23')
_PAIRS = ((0, 1), (0, 2), (1, 2))


class ProtocolKind(enum.Enum):
    """Pulse ordering: SLAP (Stokes first, t_p - t_s = T > 0) or CPT
    (coincident pulses, t_p = t_s).
    """

    SLAP = 'slap'
    CPT = 'cpt'

    @classmethod
    def from_name(cls, name):
        "Look up protocol from a case-insensitive name or pass through."

        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f'Unknown protocol {name!r}; expected one of '
                             f'{[p.value for p in cls]}') from None


def schedule(protocol, f: model.FieldSpec) -> model.FieldSpec:
    """Return the FieldSpec timing used by `protocol`.

    SLAP keeps the configured timing and requires the counterintuitive
    order. CPT moves the pump center onto the Stokes center.
    """
    protocol = ProtocolKind.from_name(protocol)
    if protocol is ProtocolKind.SLAP:
        if not f.t_delay > 0:
            raise ValueError(
                f'SLAP requires t_p - t_s > 0 (got {f.t_delay:.6g} s)')
        return f
    return f.replace(t_p=f.t_s)


@dataclasses.dataclass(frozen=True)
class IntegratorConfig:
    """Settings for the adaptive embedded Runge-Kutta 4(5) integrator.

    When `t_start`/`t_end` are None the window is 2 sigma before the first
    pulse center to 2 sigma after the last one.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    method: str = 'RK45'
    t_start: typing.Optional[float] = None
    t_end: typing.Optional[float] = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError('Invalid tolerances: must be > 0')
        if not self.max_step > 0:
            raise ValueError('Invalid max_step: must be > 0')
        if (self.t_start is not None and self.t_end is not None
                and not self.t_end > self.t_start):
            raise ValueError('Invalid window: t_end must exceed t_start')

    def window(self, f: model.FieldSpec):
        "Return (t_start, t_end) in s for the pulse pair `f`."

        t_start = self.t_start
        if t_start is None:
            t_start = min(f.t_p, f.t_s) - 2.0 * f.sigma
        t_end = self.t_end
        if t_end is None:
            t_end = max(f.t_p, f.t_s) + 2.0 * f.sigma
        return t_start, t_end


class DensityMatrix:
    """3x3 density matrix over (|1>, |2>, |3>).

    >>> rho = DensityMatrix.ground()
    >>> rho.populations()
    (1.0, 0.0, 0.0)
    >>> rho.purity()
    1.0
    """

    def __init__(self, data):
        self.data = np.array(data, dtype=complex).reshape(3, 3)
        self.data.setflags(write=False)

    @classmethod
    def ground(cls):
        "Pure |1><1|."
        data = np.zeros((3, 3), dtype=complex)
        data[0, 0] = 1.0
        return cls(data)

    @classmethod
    def projector(cls, amplitudes):
        "Pure state |psi><psi| for amplitudes over (|1>, |2>, |3>)."
        psi = np.asarray(amplitudes, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_real(cls, values):
        "Build from the 9 real parameters ordered as REAL_LABELS."
        return cls(from_real(values))

    def to_real(self):
        "The 9 real parameters ordered as REAL_LABELS."
        return to_real(self.data)

    def populations(self):
        "Tuple (rho11, rho22, rho33)."
        return tuple(float(v) for v in np.real(np.diag(self.data)))

    def trace(self):
        return float(np.real(np.trace(self.data)))

    def hermiticity_error(self):
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self):
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.min(np.linalg.eigvalsh(herm)))

    def purity(self):
        return float(np.real(np.trace(self.data @ self.data)))

    def check(self, positivity_tol=POSITIVITY_TOL):
        """Return list of violated invariants (empty when valid).

        Eigenvalues down to `positivity_tol` (a small negative number)
        count as positive.
        """
        problems = []
        if abs(self.trace() - 1.0) > TRACE_TOL:
            problems.append(f'trace {self.trace():.10g}')
        if self.hermiticity_error() > HERMITIAN_TOL:
            problems.append(
                f'hermiticity error {self.hermiticity_error():.3g}')
        if self.min_eigenvalue() < positivity_tol:
            problems.append(f'min eigenvalue {self.min_eigenvalue():.3g}')
        return problems

    def __repr__(self):
        pops = ', '.join(f'{p:.6g}' for p in self.populations())
        return f'{self.__class__.__name__}(populations=({pops}))'


def to_real(rho):
    "Flatten a Hermitian 3x3 matrix to its 9 real parameters."

    rho = np.asarray(rho)
    values = [np.real(rho[i, i]) for i in range(3)]
    for i, j in _PAIRS:
        values.extend([np.real(rho[i, j]), np.imag(rho[i, j])])
    return np.array(values, dtype=float)


def from_real(values):
    "Inverse of `to_real`."

    values = np.asarray(values, dtype=float)
    rho = np.diag(values[:3]).astype(complex)
    for k, (i, j) in enumerate(_PAIRS):
        rho[i, j] = values[3 + 2 * k] + 1j * values[4 + 2 * k]
        rho[j, i] = np.conj(rho[i, j])
    return rho


def rwa_hamiltonian(omega_p, omega_s, delta_p=0.0, delta_s=0.0):
    """RWA Hamiltonian H/hbar in rad/s over (|1>, |2>, |3>).

    >>> h = rwa_hamiltonian(2.0, 1.0)
    >>> float(h[1, 0].real), float(h[1, 2].real)
    (1.0, 0.5)
    """
    ham = np.zeros((3, 3), dtype=complex)
    ham[1, 1] = -delta_p
    ham[2, 2] = -(delta_p - delta_s)
    ham[0, 1] = ham[1, 0] = omega_p / 2.0
    ham[1, 2] = ham[2, 1] = omega_s / 2.0
    return ham


def _dissipator(jump, rho):
    jdag_j = jump.conj().T @ jump
    return jump @ rho @ jump.conj().T - 0.5 * (jdag_j @ rho + rho @ jdag_j)


def _jump_operators(atom: model.AtomSpec):
    lower_21 = np.zeros((3, 3), dtype=complex)
    lower_21[0, 1] = math.sqrt(atom.gamma21)
    lower_23 = np.zeros((3, 3), dtype=complex)
    lower_23[2, 1] = math.sqrt(atom.gamma23)
    return lower_21, lower_23


def liouvillian_rhs(rho, omega_p, omega_s, delta_p, delta_s,
                    atom: model.AtomSpec):
    """Time derivative of the density matrix.

    :param rho:      3x3 Hermitian matrix (array or DensityMatrix).

    :param omega_p:  Pump Rabi frequency in rad/s.

    :param omega_s:  Stokes Rabi frequency in rad/s.

    :param delta_p:  Pump detuning in rad/s.

    :param delta_s:  Stokes detuning in rad/s.

    :param atom:     AtomSpec with decay rates of |2>.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  3x3 complex array d(rho)/dt (traceless, Hermitian).

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Evaluate -i[H, rho] plus the Lindblad dissipators for the
              decay channels |2> -> |1> (gamma21) and |2> -> |3>
              (gamma23). There is no ground-state dephasing.

    """
    if isinstance(rho, DensityMatrix):
        rho = rho.data
    rho = np.asarray(rho, dtype=complex)
    ham = rwa_hamiltonian(omega_p, omega_s, delta_p, delta_s)
    result = -1j * (ham @ rho - rho @ ham)
    for jump in _jump_operators(atom):
        result = result + _dissipator(jump, rho)
    return result


class RealGenerator:
    """Real 9x9 generator G(omega_p, omega_s) = G0 + omega_p Gp + omega_s Gs.

    Columns are obtained by applying `liouvillian_rhs` to the real basis
    matrices, so the generator and `liouvillian_rhs` cannot disagree.
    """

    def __init__(self, atom: model.AtomSpec, delta_p=0.0, delta_s=0.0):
        self.atom = atom
        self.delta_p = delta_p
        self.delta_s = delta_s
        self.g_0 = self._assemble(0.0, 0.0)
        self.g_p = self._assemble(1.0, 0.0) - self.g_0
        self.g_s = self._assemble(0.0, 1.0) - self.g_0

    def _assemble(self, omega_p, omega_s):
        columns = []
        for k in range(len(REAL_LABELS)):
            unit = np.zeros(len(REAL_LABELS))
            unit[k] = 1.0
            columns.append(to_real(liouvillian_rhs(
                from_real(unit), omega_p, omega_s, self.delta_p,
                self.delta_s, self.atom)))
        return np.array(columns).T

    def matrix(self, omega_p, omega_s):
        "Full generator at the given Rabi frequencies."
        return self.g_0 + omega_p * self.g_p + omega_s * self.g_s

    def apply(self, values, omega_p, omega_s):
        "Generator applied to real parameter vector `values`."
        return (self.g_0 @ values + omega_p * (self.g_p @ values)
                + omega_s * (self.g_s @ values))


def steady_state(omega_p, omega_s, delta_p, delta_s,
                 atom: model.AtomSpec) -> DensityMatrix:
    """Stationary state of the Liouvillian at fixed Rabi frequencies.

    Used as a cross-check oracle for CPT, where the fields reach a
    quasi-steady regime. Requires a unique stationary state (nonzero
    decay and at least one field on).
    """
    gen = RealGenerator(atom, delta_p, delta_s).matrix(omega_p, omega_s)
    system = gen.copy()
    system[0, :] = 0.0
    system[0, :3] = 1.0  # trace row
    rhs = np.zeros(len(REAL_LABELS))
    rhs[0] = 1.0
    solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return DensityMatrix.from_real(solution)


class Trajectory(typing.NamedTuple):
    """Sampled evolution of one site.
    """

    times: np.ndarray   # s
    states: np.ndarray  # shape (len(times), 9), ordered as REAL_LABELS

    def density(self, index):
        "DensityMatrix at sample `index`."
        return DensityMatrix.from_real(self.states[index])


def evolve_site(x, protocol, f: model.FieldSpec, atom: model.AtomSpec,
                ic: IntegratorConfig = IntegratorConfig(), record=False,
                n_samples=401, generator=None):
    """Evolve one atom at position `x` from |1><1| through the pulse pair.

    :param x:         Position in m.

    :param protocol:  ProtocolKind (or its name) selecting pulse timing.

    :param f:         FieldSpec; its timing is adjusted by `schedule`.

    :param atom:      AtomSpec with decay rates.

    :param ic:        IntegratorConfig with tolerances and window.

    :param record=False:  If True return a Trajectory sampled at
                          `n_samples` evenly spaced times instead of
                          only the final DensityMatrix.

    :param generator=None:  Optional precomputed RealGenerator for `atom`
                            and the detunings of `f` (saves work in scans).

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Final DensityMatrix, or a Trajectory if `record`.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Integrate the master equation with scipy's Dormand-Prince
              RK45 pair on the real parameter vector. The result is
              deterministic for fixed inputs and tolerances.

    :raises IntegrationFailure:  If the integrator stops early or the
                                 final state violates trace/positivity.

    """
    sched = schedule(protocol, f)
    gen = generator or RealGenerator(atom, sched.delta_p, sched.delta_s)
    node, stokes = model.spatial_profiles(x, sched)
    amp_p = sched.omega_p0 * float(node)
    amp_s = sched.omega_s0 * float(stokes)
    t_start, t_end = ic.window(sched)

    # scalar form of model.temporal_envelopes
    two_s2 = 2.0 * sched.sigma ** 2

    def rhs(t, values):
        return gen.apply(values,
                         amp_p * math.exp(-(t - sched.t_p) ** 2 / two_s2),
                         amp_s * math.exp(-(t - sched.t_s) ** 2 / two_s2))

    t_eval = np.linspace(t_start, t_end, n_samples) if record else None
    sol = solve_ivp(rhs, (t_start, t_end), DensityMatrix.ground().to_real(),
                    method=ic.method, rtol=ic.rel_tol, atol=ic.abs_tol,
                    max_step=ic.max_step, t_eval=t_eval)
    if not sol.success:
        t_fail = float(sol.t[-1]) if len(sol.t) else t_start
        raise IntegrationFailure(sol.message, t_fail, x=x)
    final = DensityMatrix.from_real(sol.y[:, -1])
    # abort only beyond CLAMP_TOL; strict bounds hold at default tolerances
    problems = final.check(positivity_tol=-CLAMP_TOL)
    if problems:
        raise IntegrationFailure(
            'Density matrix invariants violated: ' + '; '.join(problems),
            t_end, x=x)
    DEFAULT_LOGGER.debug('Evolved x=%.4g m (%s): %s after %i evaluations',
                         x, ProtocolKind.from_name(protocol).value, final,
                         sol.nfev)
    if record:
        return Trajectory(sol.t, sol.y.T)
    return final


def survival_probability(x, protocol, f: model.FieldSpec,
                         atom: model.AtomSpec,
                         ic: IntegratorConfig = IntegratorConfig(),
                         generator=None):
    """Probability the atom at `x` remains in |1> after the pulses.

    Values within CLAMP_TOL outside [0, 1] are clamped; anything further
    out is reported as an IntegrationFailure.
    """
    final = evolve_site(x, protocol, f, atom, ic, generator=generator)
    p11 = final.populations()[0]
    if p11 < -CLAMP_TOL or p11 > 1.0 + CLAMP_TOL:
        _, t_end = ic.window(schedule(protocol, f))
        raise IntegrationFailure(
            f'Survival probability {p11:.10g} outside [0, 1]', t_end, x=x)
    return min(max(p11, 0.0), 1.0)
