"""Exceptions raised by ox_slap.

Each exception subclasses a builtin so callers can catch either the
precise type or the generic one (e.g., ValueError).
"""


class DegenerateFields(ValueError):
    """Both Rabi frequencies vanish so the dark state is undefined.
    """


class NoThreshold(ArithmeticError):
    """The adiabaticity condition is never met for any position.
    """


class NotRealValued(ValueError):
    """The SLAP width formula has a negative radicand.
    """


class InfeasibleGeometry(ValueError):
    """Neighbor distance too small for any single-site addressing window.
    """


class Unachievable(ValueError):
    """Requested resolution lies outside the attainable range.
    """


class IntegrationFailure(RuntimeError):
    """The adaptive integrator gave up (usually step-size underflow).

    :param msg:     Description from the integrator.

    :param t_fail:  Time in seconds where integration stopped.

    :param x=None:  Optional position in meters of the failing site.

    """

    def __init__(self, msg, t_fail, x=None):
        self.msg = msg
        self.t_fail = t_fail
        self.x = x
        where = '' if x is None else f' at x={x:.6g} m'
        super().__init__(f'{msg} (t={t_fail:.6g} s{where})')

    def __reduce__(self):
        return (IntegrationFailure, (self.msg, self.t_fail, self.x))


class NoPeak(ValueError):
    """Profile has no central maximum standing clear of the far field.
    """


class AmbiguousPeak(ValueError):
    """Profile has several interior maxima above half maximum.
    """


class WindowNotCovered(ValueError):
    """Sampling grid does not cover a site integration window.
    """


class ConfigError(ValueError):
    """Base class for configuration problems.

    :param msg:   Description of the problem.

    :param path:  Dotted key path (e.g., 'field.sigma_us') of the problem.

    """

    def __init__(self, msg, path=''):
        self.msg = msg
        self.path = path
        super().__init__(f'{path}: {msg}' if path else msg)

    def __reduce__(self):
        return (type(self), (self.msg, self.path))


class ParseError(ConfigError):
    """Configuration document could not be parsed.
    """


class UnitError(ConfigError):
    """Configuration key lacks a recognized unit suffix.
    """


class ValidationError(ConfigError):
    """Configuration value missing, unknown or violating an invariant.
    """
