"""Spatial sweeps and post-processing of survival profiles.

A scan evaluates the survival probability P_{1->1}(x) on a grid of
positions, multiplies it by the lattice density to get the final |1>
distribution, and integrates that over a window of +/- wavelength/4
around each site to obtain site probabilities and the addressing
efficiency eta = P_x0 (1 - P_x1).
"""

import dataclasses
import functools
import logging
import math
import multiprocessing as mp
import typing

import numpy as np
from scipy.integrate import simpson

from ox_slap.core import analytics, dynamics, model
from ox_slap.core.decorators import watched
from ox_slap.core.dynamics import ProtocolKind
from ox_slap.core.errors import (
    AmbiguousPeak, IntegrationFailure, NoPeak, NotRealValued,
    WindowNotCovered)

DEFAULT_LOGGER = logging.getLogger(__name__)

WINDOW_POINTS = 101
PROBABILITY_TOL = 1e-6
REFINE_TOL = 1e-3


@dataclasses.dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid of positions in m.

    `n_points` must be odd and at least 3, except for the single-sample
    grid where x_min == x_max.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points == 1 and self.x_min == self.x_max:
            return
        if not (int(self.n_points) == self.n_points and self.n_points >= 3
                and self.n_points % 2 == 1):
            raise ValueError(f'Invalid n_points: must be odd and >= 3 '
                             f'(got {self.n_points})')
        if not self.x_min < self.x_max:
            raise ValueError(f'Invalid grid: x_min {self.x_min} must be '
                             f'below x_max {self.x_max}')

    @classmethod
    def symmetric(cls, half_width, n_points):
        "Grid over [-half_width, half_width]."
        return cls(-half_width, half_width, n_points)

    @classmethod
    def single(cls, x):
        "Grid holding only position `x`."
        return cls(x, x, 1)

    def points(self):
        "Array of grid positions."
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def refined(self):
        "Grid with doubled resolution sharing every existing point."
        if self.n_points == 1:
            return self
        return dataclasses.replace(self, n_points=2 * self.n_points - 1)


@dataclasses.dataclass(frozen=True, eq=False)
class SurvivalProfile:
    """Sampled P_{1->1}(x) over `grid` for one protocol.
    """

    grid: SpatialGrid
    p11: np.ndarray
    protocol: ProtocolKind
    provenance: str = ''

    def __post_init__(self):
        p11 = np.asarray(self.p11, dtype=float)
        if p11.shape != (self.grid.n_points,):
            raise ValueError(f'p11 has shape {p11.shape}; expected '
                             f'({self.grid.n_points},)')
        if p11.size and (p11.min() < -PROBABILITY_TOL
                         or p11.max() > 1.0 + PROBABILITY_TOL):
            raise ValueError('p11 outside [0, 1]')
        object.__setattr__(self, 'p11', p11)

    @property
    def x(self):
        return self.grid.points()


@dataclasses.dataclass(frozen=True)
class AddressingReport:
    """Numerical and analytic addressing figures for one protocol.

    Widths in m; NaN marks a value that could not be extracted (e.g. a
    profile without a peak or an undefined analytic width).
    """

    protocol: ProtocolKind
    dx_numeric: float
    p_x0: float
    p_x1: float
    eta_numeric: float
    dx_analytic: float
    eta_analytic: float
    r: float = math.nan

    def __post_init__(self):
        for name in ('p_x0', 'p_x1', 'eta_numeric'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f'Invalid {name}: {value} not in [0, 1]')
        if abs(self.eta_numeric - efficiency(self.p_x0, self.p_x1)) > 1e-12:
            raise ValueError('eta_numeric inconsistent with p_x0, p_x1')


class SweepRow(typing.NamedTuple):
    """One (R, protocol) row of an R sweep; `error` set when the row failed.
    """

    r: float
    protocol: ProtocolKind
    report: typing.Optional[AddressingReport]
    error: str = ''


def _survival_at(x, protocol, f, atom, ic):
    return dynamics.survival_probability(x, protocol, f, atom, ic)


@watched(tag=lambda grid, protocol, *args, **kwargs: (
    f'{ProtocolKind.from_name(protocol).value}:{grid.n_points}'))
def scan_survival(grid: SpatialGrid, protocol, f: model.FieldSpec,
                  atom: model.AtomSpec,
                  ic: dynamics.IntegratorConfig = dynamics.IntegratorConfig(),
                  workers=1, provenance='') -> SurvivalProfile:
    """Survival probability at every grid position.

    :param grid:      SpatialGrid of positions.

    :param protocol:  ProtocolKind (or name).

    :param f:         FieldSpec of the pulse pair.

    :param atom:      AtomSpec.

    :param ic:        IntegratorConfig.

    :param workers=1:  Number of worker processes; 1 runs serially.

    :param provenance='':  Config digest recorded in the profile.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  SurvivalProfile in grid order.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Each position is an independent evolution, so points can
              be farmed out to a process pool. Pool.map keeps input
              order, and each point runs the same arithmetic as in the
              serial path, so serial and parallel results are identical.

    :raises IntegrationFailure:  With the failing position attached.

    """
    protocol = ProtocolKind.from_name(protocol)
    xs = grid.points()
    if workers and workers > 1:
        job = functools.partial(_survival_at, protocol=protocol, f=f,
                                atom=atom, ic=ic)
        with mp.Pool(processes=workers) as pool:
            values = pool.map(job, xs.tolist())
    else:
        sched = dynamics.schedule(protocol, f)
        gen = dynamics.RealGenerator(atom, sched.delta_p, sched.delta_s)
        values = [dynamics.survival_probability(x, protocol, f, atom, ic,
                                                generator=gen)
                  for x in xs.tolist()]
    return SurvivalProfile(grid, np.array(values), protocol, provenance)


def final_distribution(profile: SurvivalProfile, lat: model.LatticeSpec,
                       trap: model.TrapDerived):
    """Final |1> density rho_1(x) = P_{1->1}(x) rho_lat(x) in 1/m.
    """
    return profile.p11 * model.lattice_density(profile.x, lat, trap)


def fwhm_from_samples(x, y):
    """Full width at half maximum of a sampled central peak.

    :param x:   Increasing sample positions.

    :param y:   Sample values.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Width between the half-maximum crossings.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Climb from the sample nearest x = 0 to the central
              maximum. Half maximum is measured from a far-field floor
              (the larger of the minima on each side), since profiles
              such as CPT survival do not decay to zero. The region
              above half maximum must be one contiguous run around the
              peak; each edge of the run is located by linear
              interpolation between neighboring samples.

    :raises NoPeak:  If the peak does not exceed twice the far-field
                     minimum on both sides or is not bracketed.

    :raises AmbiguousPeak:  If samples outside the central run also
                            exceed half maximum.

    >>> xs = np.linspace(-3.0, 3.0, 601)
    >>> round(fwhm_from_samples(xs, np.exp(-4 * np.log(2) * xs ** 2)), 3)
    1.0
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise NoPeak(f'Need at least 3 samples (got {x.size})')
    i_peak = int(np.argmin(np.abs(x)))
    while True:
        if i_peak + 1 < y.size and y[i_peak + 1] > y[i_peak]:
            i_peak += 1
        elif i_peak > 0 and y[i_peak - 1] > y[i_peak]:
            i_peak -= 1
        else:
            break
    peak = y[i_peak]
    floor_left, floor_right = y[:i_peak + 1].min(), y[i_peak:].min()
    if not (peak > 2.0 * floor_left and peak > 2.0 * floor_right):
        raise NoPeak(f'Peak {peak:.6g} not above twice the far-field '
                     f'minima ({floor_left:.6g}, {floor_right:.6g})')
    half = max(floor_left, floor_right) + 0.5 * (
        peak - max(floor_left, floor_right))
    above = y > half
    left = i_peak
    while left > 0 and above[left - 1]:
        left -= 1
    right = i_peak
    while right + 1 < y.size and above[right + 1]:
        right += 1
    if left == 0 or right == y.size - 1:
        raise NoPeak('Half maximum not crossed inside the grid')
    if above[:left].any() or above[right + 1:].any():
        raise AmbiguousPeak('Several disjoint regions above half maximum')

    def crossing(i_out, i_in):
        return x[i_out] + (half - y[i_out]) * (x[i_in] - x[i_out]) / (
            y[i_in] - y[i_out])

    return float(crossing(right + 1, right) - crossing(left - 1, left))


def numeric_fwhm(profile: SurvivalProfile):
    """FWHM in m of the central peak of a survival profile.
    """
    return fwhm_from_samples(profile.x, profile.p11)


def window_integral(x, y, lo, hi, n_window=WINDOW_POINTS):
    """Composite Simpson integral of samples (x, y) over [lo, hi].

    Samples are linearly interpolated onto `n_window` evenly spaced
    points, so window edges need not fall on grid points.

    :raises WindowNotCovered:  If the samples do not span [lo, hi].
    """
    x = np.asarray(x, dtype=float)
    slack = 1e-9 * (hi - lo)
    if x.size < 2 or x[0] > lo + slack or x[-1] < hi - slack:
        raise WindowNotCovered(
            f'Window [{lo:.6g}, {hi:.6g}] not covered by samples '
            f'[{x[0]:.6g}, {x[-1]:.6g}]')
    xs = np.linspace(lo, hi, n_window)
    return float(simpson(np.interp(xs, x, y), x=xs))


def site_probability(site_index, x, rho1, rho_lat, lat: model.LatticeSpec,
                     n_window=WINDOW_POINTS):
    """Probability that the atom of site `site_index` is left in |1>.

    :param site_index:  Site index (0 is the addressed site).

    :param x:        Grid positions in m.

    :param rho1:     Final |1> density sampled on `x`.

    :param rho_lat:  Lattice density sampled on `x`.

    :param lat:      LatticeSpec giving the wavelength and sites.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Ratio of the integrals of rho1 and rho_lat over
              [x_i - wavelength/4, x_i + wavelength/4].

    """
    if site_index not in lat.site_index_range():
        raise ValueError(f'Site {site_index} not in lattice of '
                         f'{lat.n_sites} sites')
    center = lat.site_center(site_index)
    lo, hi = center - lat.wavelength / 4.0, center + lat.wavelength / 4.0
    denominator = window_integral(x, rho_lat, lo, hi, n_window)
    if not denominator > 0:
        raise ValueError(f'Lattice density vanishes around site {site_index}')
    prob = window_integral(x, rho1, lo, hi, n_window) / denominator
    return min(max(prob, 0.0), 1.0)


def efficiency(p_x0, p_x1):
    """Addressing efficiency eta = p_x0 (1 - p_x1).

    >>> efficiency(1.0, 0.0), efficiency(1.0, 1.0)
    (1.0, 0.0)
    """
    for name, value in (('p_x0', p_x0), ('p_x1', p_x1)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f'Invalid {name}: {value} not in [0, 1]')
    return p_x0 * (1.0 - p_x1)


def _analytic_width(protocol, params: analytics.AnalyticParams):
    try:
        if protocol is ProtocolKind.SLAP:
            return analytics.slap_fwhm(params)
        if params.r_prime > 0:
            return analytics.cpt_fwhm(params)
    except NotRealValued as problem:
        DEFAULT_LOGGER.info('No analytic width: %s', problem)
    return math.nan


def addressing_report(profile: SurvivalProfile, lat: model.LatticeSpec,
                      trap: model.TrapDerived,
                      params: analytics.AnalyticParams,
                      n_window=WINDOW_POINTS) -> AddressingReport:
    """Summarize a survival profile with numerical and analytic figures.
    """
    x = profile.x
    rho_lat = model.lattice_density(x, lat, trap)
    rho1 = profile.p11 * rho_lat
    p_x0 = site_probability(0, x, rho1, rho_lat, lat, n_window)
    p_x1 = site_probability(1, x, rho1, rho_lat, lat, n_window)
    try:
        dx_numeric = numeric_fwhm(profile)
    except (NoPeak, AmbiguousPeak) as problem:
        DEFAULT_LOGGER.warning('No numeric FWHM for %s at R=%.6g: %s',
                               profile.protocol.value, params.r, problem)
        dx_numeric = math.nan
    dx_analytic = _analytic_width(profile.protocol, params)
    eta_analytic = math.nan
    if math.isfinite(dx_analytic) and dx_analytic > 0:
        eta_analytic = analytics.analytic_site_probs(
            dx_analytic, trap.dx_at, lat.x1).eta
    return AddressingReport(profile.protocol, dx_numeric, p_x0, p_x1,
                            efficiency(p_x0, p_x1), dx_analytic,
                            eta_analytic, params.r)


@watched(tag=lambda grid, protocol, *args, **kwargs: (
    f'refine:{ProtocolKind.from_name(protocol).value}:{grid.n_points}'))
def refine_report(grid: SpatialGrid, protocol, f: model.FieldSpec,
                  atom: model.AtomSpec, ic: dynamics.IntegratorConfig,
                  lat: model.LatticeSpec, trap: model.TrapDerived,
                  params: analytics.AnalyticParams, tol=REFINE_TOL,
                  max_rounds=4, workers=1, provenance=''):
    """Double grid resolution until site probabilities change by < `tol`.

    :return:  Tuple (profile, report) for the last grid used.
    """
    profile = scan_survival(grid, protocol, f, atom, ic, workers, provenance)
    report = addressing_report(profile, lat, trap, params)
    for _ in range(max_rounds):
        grid = grid.refined()
        new_profile = scan_survival(grid, protocol, f, atom, ic, workers,
                                    provenance)
        new_report = addressing_report(new_profile, lat, trap, params)
        change = max(abs(new_report.p_x0 - report.p_x0),
                     abs(new_report.p_x1 - report.p_x1))
        profile, report = new_profile, new_report
        DEFAULT_LOGGER.info('Refined to %i points; change %.3g',
                            grid.n_points, change)
        if change < tol:
            break
    else:
        DEFAULT_LOGGER.warning('Site probabilities not converged to %g after '
                               '%i refinements', tol, max_rounds)
    return profile, report


@watched(tag=lambda values, *args, **kwargs: f'sweep_r:{len(values)}')
def sweep_r(values, f: model.FieldSpec, atom: model.AtomSpec,
            ic: dynamics.IntegratorConfig, grid: SpatialGrid,
            lat: model.LatticeSpec, trap: model.TrapDerived, a_const,
            protocols=(ProtocolKind.SLAP, ProtocolKind.CPT), workers=1,
            provenance=''):
    """Addressing reports for every R in `values` and every protocol.

    :param values:  Sequence of intensity ratios R; the pump peak is
                    set to omega_s0 sqrt(R).

    :param f:       SLAP FieldSpec (t_p > t_s) providing everything but R.

    :param a_const:  Adiabaticity constant A for the analytic columns.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  List of SweepRow ordered by R then by `protocols`.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  A failing row (integration failure or invalid parameters)
              is recorded with its error message and the sweep goes on.

    """
    rows = []
    for r in values:
        for protocol in protocols:
            protocol = ProtocolKind.from_name(protocol)
            try:
                f_r = f.with_r(r)
                params = analytics.AnalyticParams.from_field(f_r, a_const)
                profile = scan_survival(grid, protocol, f_r, atom, ic,
                                        workers, provenance)
                rows.append(SweepRow(r, protocol, addressing_report(
                    profile, lat, trap, params)))
            except (IntegrationFailure, ValueError) as problem:
                DEFAULT_LOGGER.warning('Sweep row R=%s %s failed: %s', r,
                                       protocol.value, problem)
                rows.append(SweepRow(r, protocol, None,
                                     f'{type(problem).__name__}: {problem}'))
    return rows
