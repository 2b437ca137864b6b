"""Tools to run click commands generically (without a command line).

This lets tests and notebooks call a subcommand with a dictionary of
option values while going through the same defaults, type conversion
and callback as the command line.
"""

import logging
import re

from click import core, types

DEFAULT_LOGGER = logging.getLogger(__name__)

# newer click marks options declared without a default with a sentinel
UNSET = getattr(core, 'UNSET', object())


class GenericField:
    """Named option value with the description and type click declares.
    """

    def __init__(self, name, description=None, default=None,
                 type=None,  # pylint: disable=redefined-builtin
                 required=False, multiple=False):
        self.name = name
        self.description = description
        self.data = default
        self.type = type
        self.required = required
        self.multiple = multiple

    def convert(self, value, opt):
        """Convert `value` the way click would for option `opt`.

        Strings are passed through the click type so that '1,2,5' or a
        config name work exactly as on the command line; other values
        (already converted objects) are used as given.
        """
        if self.multiple and isinstance(value, (list, tuple)):
            return tuple(self.convert(item, opt) for item in value)
        if isinstance(value, str) and self.type is not None and (
                self.type != types.STRING):
            return self.type.convert(value, opt, None)
        return value


class ClickToGeneric:
    """Class to run a click command from a dictionary of options.

>>> import click
>>> from ox_slap.core.c2g import ClickToGeneric
>>> @click.command()
... @click.option('--n-points', type=int, default=3)
... @click.option('--scale', type=float, required=True)
... def grid(n_points, scale):
...     'Toy command.'
...     return [scale * i for i in range(n_points)]
...
>>> ClickToGeneric(grid).handle_request({'scale': '2'})
[0.0, 2.0, 4.0]

    """

    def __init__(self, click_cmd, skip_opt_re=None):
        """Initializer.

        :param click_cmd:   A click command to run generically.

        :param skip_opt_re=None:  Regexp for options to leave out (their
                                  callback argument is then not passed).

        """
        self.click_cmd = click_cmd
        self.skip_opt_re = skip_opt_re if not skip_opt_re else re.compile(
            skip_opt_re)

    def fields(self):
        """Return dict of GenericField for the command options.
        """
        result = {}
        ctx = core.Context(self.click_cmd)
        for opt in self.click_cmd.params:
            if self.skip_opt_re and self.skip_opt_re.search(opt.name):
                DEFAULT_LOGGER.debug('Option %s skipped by skip_opt_re',
                                     opt.name)
                continue
            result[opt.name] = self.click_opt_to_field(opt, ctx)
        return result

    @staticmethod
    def click_opt_to_field(opt, ctx=None):
        """Convert given click option to a GenericField.

        Defaults are resolved through click (callables are called) and
        options without a default get None, or () when `multiple`.
        """
        if ctx is None:
            ctx = core.Context(core.Command(opt.name))
        default = opt.get_default(ctx, call=True)
        if default is UNSET:
            default = None
        if opt.multiple and default is None:
            default = ()
        is_flag = getattr(opt, 'is_flag', False)
        if is_flag and default is None:
            default = False
        return GenericField(
            opt.name, description=getattr(opt, 'help', None),
            default=default, type=opt.type,
            required=opt.required, multiple=opt.multiple)

    def process(self, opts):
        """Convert `opts` and run the command callback.

        :param opts:    Dictionary of option names to values.

        ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

        :return:   Result of running the command callback.

        ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

        PURPOSE:   Fill in click defaults, convert string values with the
                   click option types, check required options, and call
                   the callback without a click context.

        """
        fields = self.fields()
        unknown = set(opts) - set(fields)
        if unknown:
            raise TypeError(f'Unknown options for {self.click_cmd.name}: '
                            f'{sorted(unknown)}')
        params = {opt.name: opt for opt in self.click_cmd.params}
        kwargs = {}
        for name, field in fields.items():
            if name in opts and opts[name] is not None:
                value = field.convert(opts[name], params[name])
            else:
                value = field.data
            if field.required and value is None:
                raise ValueError(f'Missing required option {name!r} for '
                                 f'{self.click_cmd.name}')
            if value is not None and field.data is value and isinstance(
                    value, str):
                value = field.convert(value, params[name])
            kwargs[name] = value

        callback = getattr(self.click_cmd.callback, '__wrapped__',
                           self.click_cmd.callback)
        return callback(**kwargs)

    def handle_request(self, opts=None):
        """Run the command with option dictionary `opts` (may be None).
        """
        return self.process(opts or {})
