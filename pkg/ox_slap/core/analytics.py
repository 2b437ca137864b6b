"""Closed-form resolution, feasibility and efficiency estimates.

Widths are in m and Rabi frequencies in rad/s. The SLAP width follows
from linearizing the global adiabaticity condition

    (Omega_S0 e^{-x^2/w_s^2})^2 + (Omega_P0 (1 - e^{-x^2/w_p^2}))^2 >= (A/T)^2

about the pump node, while the CPT width follows from requiring
|<1|D>|^2 = 1/2 with coincident pulses.

>>> from ox_slap.core import analytics
>>> p = analytics.AnalyticParams.build(
...     r=10, w_p=795e-9, w_s=32 * 795e-9, omega_s0=19 / 0.28e-6,
...     adiabatic=analytics.AdiabaticityConfig(a_const=20, t_delay=0.28e-6))
>>> round(analytics.slap_fwhm(p) * 1e9, 1)
256.4
>>> round(analytics.cpt_fwhm(p) * 1e9)
894
"""

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy import optimize

from ox_slap.core import model
from ox_slap.core.decorators import watched
from ox_slap.core.dynamics import ProtocolKind
from ox_slap.core.errors import (
    InfeasibleGeometry, NoThreshold, NotRealValued, Unachievable)

DEFAULT_LOGGER = logging.getLogger(__name__)

THRESHOLD_RTOL = 1e-10
INVERSION_LOG_XTOL = 1e-12
R_PRIME_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class AdiabaticityConfig:
    """Adiabaticity constant A and pulse delay T (s).
    """

    a_const: float
    t_delay: float

    def __post_init__(self):
        if not self.a_const > 0:
            raise ValueError(f'Invalid a_const: must be > 0 '
                             f'(got {self.a_const})')
        if not self.t_delay > 0:
            raise ValueError(f'Invalid t_delay: must be > 0 '
                             f'(got {self.t_delay})')


@dataclasses.dataclass(frozen=True)
class AnalyticParams:
    """Parameters of the closed-form layer.

    Use `build` (or `from_field`) rather than the constructor so that
    r_prime is derived consistently.
    """

    r: float
    r_prime: float
    w_p: float
    w_s: float
    omega_s0: float
    adiabatic: AdiabaticityConfig

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f'Invalid r: must be >= 0 (got {self.r})')
        if not (self.w_p > 0 and self.w_s > 0 and self.omega_s0 > 0):
            raise ValueError('Invalid widths/omega_s0: must be > 0')
        expected = self.r * (self.w_s / self.w_p) ** 4
        if abs(self.r_prime - expected) > R_PRIME_TOL * max(expected, 1e-300):
            raise ValueError(
                f'Invalid r_prime {self.r_prime!r}: expected {expected!r}')

    @classmethod
    def build(cls, r, w_p, w_s, omega_s0, adiabatic):
        "Make params deriving r_prime = r (w_s / w_p)**4."
        return cls(r=r, r_prime=r * (w_s / w_p) ** 4, w_p=w_p, w_s=w_s,
                   omega_s0=omega_s0, adiabatic=adiabatic)

    @classmethod
    def from_field(cls, f: model.FieldSpec, a_const):
        "Make params from a SLAP FieldSpec and adiabaticity constant."
        return cls.build(f.r, f.w_p, f.w_s, f.omega_s0,
                         AdiabaticityConfig(a_const, f.t_delay))

    @property
    def a_const(self):
        return self.adiabatic.a_const

    @property
    def t_delay(self):
        return self.adiabatic.t_delay

    @property
    def omega_s0_t(self):
        "Dimensionless product Omega_S0 T."
        return self.omega_s0 * self.adiabatic.t_delay

    @property
    def omega_p0(self):
        return self.omega_s0 * math.sqrt(self.r)

    def with_r(self, r):
        return self.build(r, self.w_p, self.w_s, self.omega_s0,
                          self.adiabatic)

    def with_w_p(self, w_p):
        return self.build(self.r, w_p, self.w_s, self.omega_s0,
                          self.adiabatic)

    def with_omega_s0_t(self, omega_s0_t):
        "Copy with Omega_S0 changed so Omega_S0 T equals `omega_s0_t`."
        return self.build(self.r, self.w_p, self.w_s,
                          omega_s0_t / self.adiabatic.t_delay,
                          self.adiabatic)


class SsaWindow(typing.NamedTuple):
    """Range A zeta_- < Omega_S0 T < A zeta_+ giving single-site addressing.
    """

    lower: float
    upper: float
    x_plus: float
    x_minus: float
    feasible: bool

    def contains(self, omega_s0_t):
        return self.feasible and self.lower < omega_s0_t < self.upper


class SiteProbabilities(typing.NamedTuple):
    """Probabilities of |1> at the target and neighbor sites and efficiency.
    """

    p_x0: float
    p_x1: float
    eta: float


class ResolutionRow(typing.NamedTuple):
    r: float
    dx_slap: float
    dx_cpt: float


class DesignRow(typing.NamedTuple):
    w_p: float
    r: float


class UnresolvedTarget(typing.NamedTuple):
    """Published comparison value whose parameter set is incomplete.
    """

    quantity: str
    value: float
    unit: str
    conditions: str
    missing: str


UNRESOLVED_TARGETS = (
    UnresolvedTarget('dx_slap', 330.66, 'nm', 'R=1, w_p=509 nm',
                     'w_s, A and Omega_S0 T not stated'),
    UnresolvedTarget('dx_slap', 181.86, 'nm', 'R=10, w_p=509 nm',
                     'w_s, A and Omega_S0 T not stated'),
    UnresolvedTarget('dx_slap', 100.82, 'nm', 'R=100, w_p=509 nm',
                     'w_s, A and Omega_S0 T not stated'),
    UnresolvedTarget('addressing_time', 40.0, 'us', 'dx ~ 300 nm',
                     'pulse parameters not stated'),
)


def real_width_bound(p: AnalyticParams):
    """Largest Omega_S0 T for which the SLAP width is real valued.

    Returns infinity when R' = 0.
    """
    if p.r_prime == 0:
        return math.inf
    return p.a_const * math.sqrt((1.0 + p.r_prime) / p.r_prime)


def slap_discriminant(p: AnalyticParams):
    "Inner radicand (R'+1)(A/(T Omega_S0))^2 - R' of the SLAP width."

    ratio = p.a_const / p.omega_s0_t
    return p.r_prime * (ratio * ratio - 1.0) + ratio * ratio


@watched(tag=lambda p: f'r={p.r:.6g}')
def adiabatic_threshold_x(p: AnalyticParams):
    """Smallest x >= 0 where the global adiabaticity condition holds.

    :param p:   AnalyticParams.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Threshold position x_th in m (0 when Omega_S0 T >= A).

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Bracket the first sign change of the adiabaticity excess
              on a geometric grid spanning both beam widths, then refine
              it with bisection to relative tolerance THRESHOLD_RTOL.

    :raises NoThreshold:  If the fields are too weak at every x.

    """
    a_over_t = p.a_const / p.t_delay
    if p.omega_s0 >= a_over_t:
        return 0.0

    def excess(x):
        stokes = p.omega_s0 * np.exp(-np.square(x) / p.w_s ** 2)
        pump = p.omega_p0 * -np.expm1(-np.square(x) / p.w_p ** 2)
        return stokes ** 2 + pump ** 2 - a_over_t ** 2

    w_min, w_max = min(p.w_p, p.w_s), max(p.w_p, p.w_s)
    xs = np.concatenate(([0.0], np.geomspace(w_min * 1e-3, 6 * w_max, 4000)))
    above = np.flatnonzero(excess(xs) >= 0)
    if not above.size:
        raise NoThreshold(
            f'Adiabaticity never reached: Omega_S0 T={p.omega_s0_t:.6g}, '
            f'A={p.a_const:.6g}, R={p.r:.6g}')
    k = above[0]
    return optimize.bisect(lambda x: float(excess(x)), xs[k - 1], xs[k],
                           xtol=1e-30, rtol=THRESHOLD_RTOL)


def slap_fwhm(p: AnalyticParams):
    """Width of the SLAP addressing region in m.

    :raises NotRealValued:  If Omega_S0 T exceeds `real_width_bound(p)`,
                            where the width formula has a negative
                            radicand.

    At the bound itself the radicand is zero and the width is
    w_s / sqrt(R' + 1).
    """
    disc = slap_discriminant(p)
    if disc < 0:
        raise NotRealValued(
            f'Omega_S0 T={p.omega_s0_t:.6g} exceeds the real-valued bound '
            f'{real_width_bound(p):.6g} for R\'={p.r_prime:.6g}')
    return p.w_s * math.sqrt((1.0 + math.sqrt(disc)) / (p.r_prime + 1.0))


def cpt_fwhm(p: AnalyticParams):
    """Width of the CPT addressing region, 2 w_s / sqrt(1 + sqrt(R')).
    """
    if not p.r_prime > 0:
        raise ValueError(f'CPT width needs r_prime > 0 (got {p.r_prime})')
    return 2.0 * p.w_s / math.sqrt(1.0 + math.sqrt(p.r_prime))


def _zeta(p: AnalyticParams, x_edge):
    r_p = p.r_prime
    core = (1.0 + r_p) * (x_edge / p.w_s) ** 2 - 1.0
    return math.sqrt((1.0 + r_p) / (core * core + r_p))


def ssa_window(p: AnalyticParams, x1, dx_at) -> SsaWindow:
    """Range of Omega_S0 T putting the SLAP width between dx_at and x1 - dx_at.

    :param p:      AnalyticParams (the Omega_S0 T in `p` is not used).

    :param x1:     Nearest-neighbor distance in m.

    :param dx_at:  FWHM of the site atomic density in m.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  SsaWindow(lower, upper, x_plus, x_minus, feasible).

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Invert the SLAP width at x_plus = dx_at (upper limit) and
              x_minus = x1 - dx_at (lower limit). The upper limit is
              checked against the real-valued bound instead of being
              assumed tighter.

    :raises InfeasibleGeometry:  If x1 <= dx_at.

    """
    if not x1 > dx_at:
        raise InfeasibleGeometry(
            f'Neighbor distance {x1:.6g} m must exceed dx_at {dx_at:.6g} m')
    x_plus, x_minus = dx_at, x1 - dx_at
    lower = p.a_const * _zeta(p, x_minus)
    upper = p.a_const * _zeta(p, x_plus)
    feasible = bool(lower < upper and upper < real_width_bound(p))
    if not feasible:
        DEFAULT_LOGGER.info('SSA window (%.6g, %.6g) infeasible; bound %.6g',
                            lower, upper, real_width_bound(p))
    return SsaWindow(lower, upper, x_plus, x_minus, feasible)


def analytic_site_probs(dx_slap, dx_at, x1) -> SiteProbabilities:
    """Gaussian-model site probabilities and efficiency.

    >>> probs = analytic_site_probs(142e-9, 142e-9, 532e-9)
    >>> round(probs.eta, 4)
    0.7071
    """
    if not (dx_slap > 0 and dx_at > 0 and x1 > 0):
        raise ValueError('dx_slap, dx_at and x1 must be > 0')
    total = dx_slap ** 2 + dx_at ** 2
    p_x0 = dx_slap / math.sqrt(total)
    p_x1 = p_x0 * math.exp(-4.0 * math.log(2.0) * x1 ** 2 / total)
    return SiteProbabilities(p_x0, p_x1, p_x0 * (1.0 - p_x1))


def _width_function(technique):
    technique = ProtocolKind.from_name(technique)
    return slap_fwhm if technique is ProtocolKind.SLAP else cpt_fwhm


def _largest_r(technique, fixed: AnalyticParams):
    """Largest R keeping the SLAP width real valued (infinite for CPT).
    """
    if ProtocolKind.from_name(technique) is ProtocolKind.CPT:
        return math.inf
    excess = (fixed.omega_s0_t / fixed.a_const) ** 2 - 1.0
    if excess <= 0:
        return math.inf
    return (1.0 / excess) * (fixed.w_p / fixed.w_s) ** 4


@watched(tag=lambda dx_target, technique, fixed: (
    f'{technique}:{dx_target:.6g}'))
def required_r(dx_target, technique, fixed: AnalyticParams):
    """Intensity ratio R giving addressing width `dx_target`.

    :param dx_target:  Desired width in m.

    :param technique:  ProtocolKind.SLAP or ProtocolKind.CPT (or name).

    :param fixed:      AnalyticParams whose r is ignored.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  R such that the technique's width equals dx_target.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    PURPOSE:  Both widths decrease monotonically in R, so bisect on
              log R between a vanishing pump and either the largest
              R allowed by the real-valued bound or a bracket found by
              growing R by decades.

    :raises Unachievable:  If dx_target is outside the attainable range.

    """
    width = _width_function(technique)

    def width_at(r):
        return width(fixed.with_r(r))

    r_lo = 1e-12 * (fixed.w_p / fixed.w_s) ** 4
    if not (dx_target > 0 and width_at(r_lo) > dx_target):
        raise Unachievable(
            f'Target {dx_target:.6g} m not below the no-pump width '
            f'{width_at(r_lo):.6g} m for {technique}')
    r_hi = _largest_r(technique, fixed)
    if math.isfinite(r_hi):
        r_hi *= 1.0 - 1e-12
        if width_at(r_hi) > dx_target:
            raise Unachievable(
                f'Target {dx_target:.6g} m below the smallest width '
                f'{width_at(r_hi):.6g} m allowed for {technique}')
    else:
        r_hi = 1.0
        while width_at(r_hi) > dx_target:
            r_hi *= 10.0
            if r_hi > 1e40:
                raise Unachievable(
                    f'Target {dx_target:.6g} m not reached for R <= 1e40')
    log_r = optimize.bisect(
        lambda s: width_at(math.exp(s)) - dx_target,
        math.log(r_lo), math.log(r_hi), xtol=INVERSION_LOG_XTOL, maxiter=500)
    return math.exp(log_r)


def required_r_cpt_closed_form(dx_target, fixed: AnalyticParams):
    """Exact inversion of the CPT width, used to cross-check `required_r`.
    """
    if not 0 < dx_target < 2.0 * fixed.w_s:
        raise Unachievable(f'CPT target {dx_target:.6g} m not in (0, 2 w_s)')
    return ((fixed.w_p / fixed.w_s) ** 4
            * ((2.0 * fixed.w_s / dx_target) ** 2 - 1.0) ** 2)


def resolution_table(r_values, params: AnalyticParams):
    """Rows of (R, dx_slap, dx_cpt) in m with NaN where a width is undefined.
    """
    rows = []
    for r in r_values:
        p = params.with_r(r)
        try:
            dx_slap = slap_fwhm(p)
        except NotRealValued as problem:
            DEFAULT_LOGGER.info('No SLAP width at R=%s: %s', r, problem)
            dx_slap = math.nan
        dx_cpt = cpt_fwhm(p) if p.r_prime > 0 else math.nan
        rows.append(ResolutionRow(r, dx_slap, dx_cpt))
    return rows


def design_table(w_p_values, dx_target, technique, params: AnalyticParams):
    """Rows of (w_p, required R) with NaN where the target is unachievable.
    """
    rows = []
    for w_p in w_p_values:
        try:
            r = required_r(dx_target, technique, params.with_w_p(w_p))
        except Unachievable as problem:
            DEFAULT_LOGGER.warning('Unachievable at w_p=%s: %s', w_p, problem)
            r = math.nan
        rows.append(DesignRow(w_p, r))
    return rows
