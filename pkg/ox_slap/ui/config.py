"""Load and validate JSON run configurations.

A configuration is one JSON object with the sections `atom`, `lattice`,
`field`, `adiabatic` and the optional `integrator` and `grid`, plus a
top-level `protocol`. Every dimensioned key carries a unit suffix:

    _nm              nanometres
    _us              microseconds
    _mhz             ordinary frequency in MHz (multiplied by 2 pi on load)
    _amu             atomic mass units
    _er              recoil energies
    _over_lambda_l   multiples of the addressing wavelength lambda_l_nm

>>> from ox_slap.ui import config
>>> cfg = config.load_config('rb87_lattice')
>>> round(cfg.derived()['omega_s0_mhz'], 2)
10.8
>>> round(cfg.derived()['dx_at_nm'], 1)
143.3
"""

import copy
import dataclasses
import hashlib
import json
import logging
import math
import pathlib
import typing

from ox_slap.assets import configs as config_assets
from ox_slap.core import analytics, dynamics, model
from ox_slap.core.decorators import watched
from ox_slap.core.dynamics import ProtocolKind
from ox_slap.core.errors import (
    ConfigError, ParseError, UnitError, ValidationError)
from ox_slap.core.scan import SpatialGrid

DEFAULT_LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
OMEGA_S0_CROSS_CHECK = 0.01
DEFAULT_GRID_POINTS = 201

UNIT_SCALES = {
    '_nm': 1e-9,
    '_us': 1e-6,
    '_mhz': TWO_PI * 1e6,
    '_amu': model.AMU,
    '_er': 1.0,
    '_over_lambda_l': 1.0,
}

SCHEMA = {
    'atom': ('mass_amu', 'gamma21_mhz', 'gamma23_mhz'),
    'lattice': ('lambda_nm', 'v0_er', 'n_sites'),
    'field': ('lambda_l_nm', 'w_p_nm', 'w_p_over_lambda_l', 'w_s_nm',
              'w_s_over_lambda_l', 'r', 'omega_p0_mhz', 'sigma_us',
              'delay_factor', 't_delay_us', 't_p_us', 't_s_us', 'omega_s0_t',
              'omega_s0_mhz', 'delta_p_mhz', 'delta_s_mhz'),
    'adiabatic': ('a_const',),
    'integrator': ('rel_tol', 'abs_tol', 'max_step_us'),
    'grid': ('x_min_nm', 'x_max_nm', 'n_points'),
}
REQUIRED_SECTIONS = ('atom', 'lattice', 'field', 'adiabatic')


def _stem(key):
    # longest suffix first so '_over_lambda_l' wins over shorter ones
    for suffix in sorted(UNIT_SCALES, key=len, reverse=True):
        if key.endswith(suffix) and len(key) > len(suffix):
            return key[:-len(suffix)], suffix
    return key, ''


class _Section:
    """Unit-converting reader for one section of a config document.
    """

    def __init__(self, name, values):
        if not isinstance(values, dict):
            raise ValidationError('section must be a JSON object', name)
        self.name = name
        self.values = values
        self.check_keys()

    def path(self, key):
        return f'{self.name}.{key}'

    def check_keys(self):
        known = SCHEMA[self.name]
        stems = {_stem(key)[0]: key for key in known}
        for key in self.values:
            if key in known:
                continue
            stem = _stem(key)[0]
            if stem in stems or key in stems:
                expected = stems.get(stem, stems.get(key))
                raise UnitError(f'missing or wrong unit suffix; expected '
                                f'{expected!r}', self.path(key))
            raise ValidationError('unknown key', self.path(key))

    def has(self, key):
        return key in self.values

    def get(self, key, default=None):
        "Value of `key` converted to SI units, or `default` if absent."
        if key not in self.values:
            return default
        value = self.values[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f'expected a number, got {value!r}',
                                  self.path(key))
        suffix = _stem(key)[1]
        return value * UNIT_SCALES[suffix] if suffix else value

    def require(self, key):
        if key not in self.values:
            raise ValidationError('missing required key', self.path(key))
        return self.get(key)

    def one_of(self, *keys):
        "Return (key, value) for the single key of `keys` present."
        present = [key for key in keys if key in self.values]
        if not present:
            raise ValidationError(
                f'missing required key (or one of {list(keys[1:])})',
                self.path(keys[0]))
        if len(present) > 1:
            raise ValidationError(f'give only one of {present}',
                                  self.path(present[1]))
        return present[0], self.get(present[0])


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated run configuration in SI units.

    `field` holds the configured SLAP timing; `dynamics.schedule` derives
    the CPT timing from it. `document` is the JSON document as loaded and
    `digest` its sha256 over canonical JSON.
    """

    protocol: ProtocolKind
    atom: model.AtomSpec
    lattice: model.LatticeSpec
    field: model.FieldSpec
    a_const: float
    integrator: dynamics.IntegratorConfig
    grid: SpatialGrid
    trap: model.TrapDerived
    document: typing.Dict[str, typing.Any]
    digest: str
    source: str = ''

    def analytic_params(self) -> analytics.AnalyticParams:
        """Closed-form parameters; needs a positive pulse delay.
        """
        return analytics.AnalyticParams.from_field(self.field, self.a_const)

    def derived(self):
        """Derived quantities echoed to the user and to the manifest.
        """
        f = self.field
        result = {
            't_delay_us': f.t_delay * 1e6,
            'r': f.r,
            'r_prime': f.r_prime,
            'omega_s0_mhz': f.omega_s0 / TWO_PI / 1e6,
            'omega_p0_mhz': f.omega_p0 / TWO_PI / 1e6,
            'omega_s0_t': f.omega_s0 * f.t_delay,
            'omega_trap_khz': self.trap.omega_trap / TWO_PI / 1e3,
            'w_at_nm': self.trap.w_at * 1e9,
            'dx_at_nm': self.trap.dx_at * 1e9,
            'x1_nm': self.lattice.x1 * 1e9,
        }
        return result


def config_digest(document):
    """Hex sha256 of the canonical JSON form of `document`.

    >>> config_digest({'b': 1, 'a': 2}) == config_digest({'a': 2, 'b': 1})
    True
    """
    canonical = json.dumps(document, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf8')).hexdigest()


def _validated(path, maker, *args, **kwargs):
    try:
        return maker(*args, **kwargs)
    except ConfigError:
        raise
    except ValueError as problem:
        raise ValidationError(str(problem), path) from problem


def _read_width(sec, stem, lambda_l):
    key, value = sec.one_of(f'{stem}_nm', f'{stem}_over_lambda_l')
    return value * lambda_l if key.endswith('_over_lambda_l') else value


def _read_timing(sec, sigma):
    "Return (t_p, t_s) with the Stokes pulse centered at 0 by default."
    if sec.has('t_p_us') or sec.has('t_s_us'):
        for key in ('delay_factor', 't_delay_us'):
            if sec.has(key):
                raise ValidationError('give either t_p_us/t_s_us or a delay',
                                      sec.path(key))
        return sec.require('t_p_us'), sec.require('t_s_us')
    key, value = sec.one_of('delay_factor', 't_delay_us')
    t_delay = value * sigma if key == 'delay_factor' else value
    return t_delay, 0.0


def _read_omega_s0(sec, t_delay):
    from_product = None
    if sec.has('omega_s0_t'):
        if not t_delay > 0:
            raise ValidationError('omega_s0_t needs a positive pulse delay',
                                  sec.path('omega_s0_t'))
        from_product = _validated(sec.path('omega_s0_t'),
                                  model.rabi_peak_from_product,
                                  sec.get('omega_s0_t'), t_delay)
    if not sec.has('omega_s0_mhz'):
        if from_product is None:
            raise ValidationError('missing required key (or omega_s0_mhz)',
                                  sec.path('omega_s0_t'))
        return from_product
    omega_s0 = sec.get('omega_s0_mhz')
    if from_product is not None and abs(omega_s0 - from_product) > (
            OMEGA_S0_CROSS_CHECK * from_product):
        raise ValidationError(
            f'omega_s0_mhz disagrees with omega_s0_t / T = '
            f'{from_product / TWO_PI / 1e6:.6g} MHz by more than '
            f'{OMEGA_S0_CROSS_CHECK:.0%}', sec.path('omega_s0_mhz'))
    return omega_s0


def _read_field(sec, protocol):
    lambda_l = sec.require('lambda_l_nm')
    w_p = _read_width(sec, 'w_p', lambda_l)
    w_s = _read_width(sec, 'w_s', lambda_l)
    sigma = sec.require('sigma_us')
    t_p, t_s = _read_timing(sec, sigma)
    if protocol is ProtocolKind.SLAP and not t_p - t_s > 0:
        key = next((k for k in ('delay_factor', 't_delay_us', 't_p_us')
                    if sec.has(k)), 'delay_factor')
        raise ValidationError(
            'SLAP needs the Stokes pulse first (pulse delay T > 0)',
            sec.path(key))
    omega_s0 = _read_omega_s0(sec, t_p - t_s)
    key, value = sec.one_of('r', 'omega_p0_mhz')
    if key == 'r':
        if value < 0:
            raise ValidationError('must be >= 0', sec.path('r'))
        omega_p0 = omega_s0 * math.sqrt(value)
    else:
        omega_p0 = value
    return _validated(
        sec.name, model.FieldSpec, omega_p0=omega_p0, omega_s0=omega_s0,
        w_p=w_p, w_s=w_s, t_p=t_p, t_s=t_s, sigma=sigma,
        delta_p=sec.get('delta_p_mhz', 0.0),
        delta_s=sec.get('delta_s_mhz', 0.0), lambda_l=lambda_l)


def config_from_document(document, source='') -> RunConfig:
    """Validate a parsed config `document` and convert it to a RunConfig.

    :raises UnitError:        For keys with a missing or wrong unit suffix.

    :raises ValidationError:  For unknown or missing keys and for values
                              violating a model invariant.
    """
    if not isinstance(document, dict):
        raise ParseError('config must be a JSON object', source)
    for key in document:
        if key != 'protocol' and key not in SCHEMA:
            raise ValidationError('unknown section', key)
    for name in REQUIRED_SECTIONS:
        if name not in document:
            raise ValidationError('missing required section', name)
    protocol = _validated('protocol', ProtocolKind.from_name,
                          document.get('protocol', 'slap'))

    sec = _Section('atom', document['atom'])
    atom = _validated(sec.name, model.AtomSpec, mass=sec.require('mass_amu'),
                      gamma21=sec.require('gamma21_mhz'),
                      gamma23=sec.require('gamma23_mhz'))
    sec = _Section('lattice', document['lattice'])
    lattice = _validated(sec.name, model.LatticeSpec,
                         wavelength=sec.require('lambda_nm'),
                         v0_over_er=sec.require('v0_er'),
                         n_sites=sec.get('n_sites', 3))
    sec = _Section('field', document['field'])
    field = _read_field(sec, protocol)
    sec = _Section('adiabatic', document['adiabatic'])
    a_const = sec.require('a_const')
    if not a_const > 0:
        raise ValidationError('must be > 0', sec.path('a_const'))

    sec = _Section('integrator', document.get('integrator', {}))
    integrator = _validated(
        sec.name, dynamics.IntegratorConfig,
        rel_tol=sec.get('rel_tol', 1e-8), abs_tol=sec.get('abs_tol', 1e-10),
        max_step=sec.get('max_step_us', math.inf))
    sec = _Section('grid', document.get('grid', {}))
    n_points = sec.get('n_points', DEFAULT_GRID_POINTS)
    if n_points != int(n_points):
        raise ValidationError(f'expected an integer, got {n_points!r}',
                              sec.path('n_points'))
    grid = _validated(
        sec.name, SpatialGrid, x_min=sec.get('x_min_nm', -lattice.wavelength),
        x_max=sec.get('x_max_nm', lattice.wavelength),
        n_points=int(n_points))

    trap = model.derive_trap(lattice, atom)
    return RunConfig(protocol=protocol, atom=atom, lattice=lattice,
                     field=field, a_const=a_const, integrator=integrator,
                     grid=grid, trap=trap, document=copy.deepcopy(document),
                     digest=config_digest(document), source=str(source))


def asset_path(name):
    "Path of the packaged config called `name` (with or without .json)."
    if not name.endswith('.json'):
        name += '.json'
    return pathlib.Path(config_assets.__file__).parent / name


@watched(tag=lambda path_or_name, *args, **kwargs: str(path_or_name))
def load_config(path_or_name) -> RunConfig:
    """Load a RunConfig from a JSON file or a packaged config name.

    :param path_or_name:  Path to a JSON file, or the name of a packaged
                          config such as 'rb87_lattice'.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Validated RunConfig.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :raises ParseError:  If the file is missing or is not valid JSON.

    """
    path = pathlib.Path(path_or_name)
    if not path.exists() and not path.suffix and asset_path(
            str(path_or_name)).exists():
        path = asset_path(str(path_or_name))
    if not path.exists():
        raise ParseError('no such config file or packaged config',
                         str(path_or_name))
    try:
        document = json.loads(path.read_text(encoding='utf8'))
    except json.JSONDecodeError as problem:
        raise ParseError(f'invalid JSON at line {problem.lineno} column '
                         f'{problem.colno}: {problem.msg}', str(path)
                         ) from problem
    cfg = config_from_document(document, source=path)
    DEFAULT_LOGGER.info('Loaded config %s (digest %s): %s', path,
                        cfg.digest[:12], cfg.derived())
    return cfg
