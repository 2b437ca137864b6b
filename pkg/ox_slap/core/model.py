"""Physical parameters and position/time dependent field evaluations.

This module holds the value objects describing the addressing fields,
the lattice and the atom, together with the pure functions evaluating
Rabi frequencies, the dark state and the lattice atomic density.

All angular frequencies are in rad/s, lengths in m and times in s.

>>> from ox_slap.core import model
>>> f = model.FieldSpec(omega_p0=2.0, omega_s0=1.0, w_p=1e-6, w_s=3e-5,
...                     t_p=1e-7, t_s=0.0, sigma=1e-7)
>>> model.field_amplitudes(0.0, 1e-7, f).omega_p
0.0
>>> round(f.r, 6)
4.0
"""

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy import constants

from ox_slap.core.errors import DegenerateFields

DEFAULT_LOGGER = logging.getLogger(__name__)

HBAR = constants.hbar
AMU = constants.physical_constants['atomic mass constant'][0]
RB87_MASS_AMU = 86.909180527
FWHM_PER_WIDTH = 2.0 * math.sqrt(math.log(2.0))


def _require(ok, name, detail):
    if not ok:
        raise ValueError(f'Invalid {name}: {detail}')


@dataclasses.dataclass(frozen=True)
class FieldSpec:
    """Pump/Stokes pulse pair.

    Rabi frequencies and detunings in rad/s, widths in m, times in s.
    The pump has a node of 1/e half-width `w_p` at x = 0 while the
    Stokes beam is a Gaussian of 1/e half-width `w_s`.
    """

    omega_p0: float
    omega_s0: float
    w_p: float
    w_s: float
    t_p: float
    t_s: float
    sigma: float
    delta_p: float = 0.0
    delta_s: float = 0.0
    lambda_l: float = 795e-9

    def __post_init__(self):
        _require(self.omega_p0 >= 0, 'omega_p0', 'must be >= 0')
        _require(self.omega_s0 > 0, 'omega_s0', 'must be > 0')
        _require(self.w_p > 0, 'w_p', 'must be > 0')
        _require(self.w_s > 0, 'w_s', 'must be > 0')
        _require(self.sigma > 0, 'sigma', 'must be > 0')
        _require(self.lambda_l > 0, 'lambda_l', 'must be > 0')

    @property
    def t_delay(self):
        "Pulse delay T = t_p - t_s (positive for counterintuitive order)."
        return self.t_p - self.t_s

    @property
    def r(self):
        "Intensity ratio R = (omega_p0/omega_s0)**2."
        return (self.omega_p0 / self.omega_s0) ** 2

    @property
    def r_prime(self):
        "Geometric intensity ratio R' = R (w_s/w_p)**4."
        return self.r * (self.w_s / self.w_p) ** 4

    def with_r(self, r):
        """Return copy with pump peak omega_p0 = omega_s0 sqrt(r).
        """
        _require(r >= 0, 'r', 'must be >= 0')
        return dataclasses.replace(
            self, omega_p0=self.omega_s0 * math.sqrt(r))

    def replace(self, **changes):
        "Return a validated copy with `changes` applied."
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True)
class LatticeSpec:
    """One dimensional optical lattice.

    Site n is centered at x_n = n * wavelength / 2 for n in
    [-(n_sites // 2), n_sites // 2], so the target site sits at x = 0.
    """

    wavelength: float
    v0_over_er: float
    n_sites: int = 3

    def __post_init__(self):
        _require(self.wavelength > 0, 'wavelength', 'must be > 0')
        _require(self.v0_over_er > 0, 'v0_over_er', 'must be > 0')
        _require(int(self.n_sites) == self.n_sites and self.n_sites >= 1
                 and self.n_sites % 2 == 1, 'n_sites',
                 f'must be a positive odd integer (got {self.n_sites})')
        object.__setattr__(self, 'n_sites', int(self.n_sites))

    @property
    def x1(self):
        "Nearest-neighbor distance (wavelength / 2)."
        return self.wavelength / 2.0

    def site_index_range(self):
        "Return range of site indices centered on 0."
        half = self.n_sites // 2
        return range(-half, half + 1)

    def site_center(self, index):
        "Center in m of site `index`."
        return index * self.x1

    def site_centers(self):
        "Array of all site centers in m."
        return np.array([self.site_center(n) for n in self.site_index_range()])


@dataclasses.dataclass(frozen=True)
class AtomSpec:
    """Trapped Lambda atom: mass in kg and decay rates of |2> in rad/s.
    """

    mass: float
    gamma21: float
    gamma23: float

    def __post_init__(self):
        _require(self.mass > 0, 'mass', 'must be > 0')
        _require(self.gamma21 >= 0, 'gamma21', 'must be >= 0')
        _require(self.gamma23 >= 0, 'gamma23', 'must be >= 0')

    @property
    def gamma(self):
        "Total decay rate of the excited state."
        return self.gamma21 + self.gamma23

    @classmethod
    def rb87(cls, gamma21=2 * math.pi * 0.96e6, gamma23=2 * math.pi * 1.44e6):
        "Rubidium 87 on the D1 line with default branching rates."
        return cls(mass=RB87_MASS_AMU * AMU, gamma21=gamma21, gamma23=gamma23)


class TrapDerived(typing.NamedTuple):
    """Harmonic approximation of a lattice site.
    """

    omega_trap: float  # rad/s
    w_at: float        # ground-state 1/e half-width, m
    dx_at: float       # FWHM of the site density, m


class FieldAmplitudes(typing.NamedTuple):
    """Pump and Stokes Rabi frequencies at one (x, t) in rad/s.
    """

    omega_p: typing.Any
    omega_s: typing.Any


class DarkState(typing.NamedTuple):
    """Mixing angle and amplitudes of cos(theta)|1> - sin(theta)|3>.
    """

    theta: float
    c1: float
    c3: float


def spatial_profiles(x, f: FieldSpec):
    """Spatial factors (pump node, Stokes Gaussian) in [0, 1] at `x`.
    """
    x2 = np.square(x)
    return (-np.expm1(-x2 / f.w_p ** 2), np.exp(-x2 / f.w_s ** 2))


def temporal_envelopes(t, f: FieldSpec):
    "Gaussian temporal envelopes (pump, Stokes) at time `t`."
    two_s2 = 2.0 * f.sigma ** 2
    return (np.exp(-np.square(t - f.t_p) / two_s2),
            np.exp(-np.square(t - f.t_s) / two_s2))


def field_amplitudes(x, t, f: FieldSpec) -> FieldAmplitudes:
    """Evaluate pump and Stokes Rabi frequencies.

    :param x:   Position in m (scalar or numpy array).

    :param t:   Time in s (scalar or numpy array broadcastable with x).

    :param f:   FieldSpec for the pulse pair.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  FieldAmplitudes(omega_p, omega_s) in rad/s.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  The pump is Omega_P0 (1 - exp(-x^2/w_p^2)) times a Gaussian
              envelope centered at t_p and the Stokes is
              Omega_S0 exp(-x^2/w_s^2) times a Gaussian centered at t_s.
              The node factor uses expm1 so it is exactly 0 at x = 0
              and accurate for x << w_p.

    """
    node, stokes = spatial_profiles(x, f)
    env_p, env_s = temporal_envelopes(t, f)
    omega_p = f.omega_p0 * node * env_p
    omega_s = f.omega_s0 * stokes * env_s
    if np.ndim(omega_p) == 0:
        omega_p, omega_s = float(omega_p), float(omega_s)
    return FieldAmplitudes(omega_p, omega_s)


def mixing_angle(omega_p, omega_s):
    """Dark-state mixing angle theta = atan2(omega_p, omega_s).

    :raises DegenerateFields:  If both frequencies are zero.

    >>> round(mixing_angle(2.0, 1.0), 6)
    1.107149
    """
    if omega_p == 0 and omega_s == 0:
        raise DegenerateFields('Both Rabi frequencies are zero')
    return math.atan2(omega_p, omega_s)


def dark_state(x, t, f: FieldSpec) -> DarkState:
    """Dark state at scalar (x, t) under two-photon resonance.

    :raises DegenerateFields:  If pump and Stokes both vanish at (x, t).
    """
    amps = field_amplitudes(x, t, f)
    theta = mixing_angle(amps.omega_p, amps.omega_s)
    return DarkState(theta, math.cos(theta), -math.sin(theta))


def derive_trap(lat: LatticeSpec, atom: AtomSpec) -> TrapDerived:
    """Harmonic trap frequency and atomic width for a lattice site.

    :param lat:   LatticeSpec with wavelength and depth in recoil energies.

    :param atom:  AtomSpec providing the mass.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  TrapDerived(omega_trap, w_at, dx_at).

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Expand V0 sin^2(kx) about a minimum, giving
              omega = k sqrt(2 V0 / m) with V0 = v0_over_er * E_r and
              E_r = hbar^2 k^2 / 2m. The site ground state has 1/e
              half-width w_at = sqrt(hbar / m omega) and FWHM
              2 sqrt(ln 2) w_at.

    """
    k = 2.0 * math.pi / lat.wavelength
    e_recoil = (HBAR * k) ** 2 / (2.0 * atom.mass)
    v0 = lat.v0_over_er * e_recoil
    omega_trap = k * math.sqrt(2.0 * v0 / atom.mass)
    w_at = math.sqrt(HBAR / (atom.mass * omega_trap))
    DEFAULT_LOGGER.debug('Trap frequency 2pi x %.4g Hz, w_at %.4g m',
                         omega_trap / (2 * math.pi), w_at)
    return TrapDerived(omega_trap, w_at, FWHM_PER_WIDTH * w_at)


def lattice_density(x, lat: LatticeSpec, trap: TrapDerived):
    """Initial atomic density in 1/m, one normalized Gaussian per site.

    :param x:     Position(s) in m.

    :param lat:   LatticeSpec giving the site centers.

    :param trap:  TrapDerived from `derive_trap` giving w_at.

    >>> lat = LatticeSpec(wavelength=1e-6, v0_over_er=10, n_sites=1)
    >>> trap = TrapDerived(1.0, 1e-7, FWHM_PER_WIDTH * 1e-7)
    >>> peak = float(lattice_density(0.0, lat, trap))
    >>> round(peak * 1e-7 * math.sqrt(math.pi), 12)
    1.0
    """
    xs = np.asarray(x, dtype=float)
    centers = lat.site_centers()
    offsets = xs[..., np.newaxis] - centers
    result = np.exp(-np.square(offsets / trap.w_at)).sum(axis=-1) / (
        trap.w_at * math.sqrt(math.pi))
    return float(result) if result.ndim == 0 else result


def rabi_peak_from_product(omega_s0_t, t_delay):
    """Stokes peak Rabi frequency from the dimensionless product Omega_S0 T.
    """
    _require(t_delay > 0, 't_delay', 'must be > 0 to derive omega_s0')
    _require(omega_s0_t > 0, 'omega_s0_t', 'must be > 0')
    return omega_s0_t / t_delay
