"""Writers for run artifacts: CSV tables, the run manifest and plot scripts.

Every CSV starts with a `#` comment line naming the tool version and the
config digest, followed by a header row whose numeric column names carry
their unit. Files use `.` as decimal separator and `\\n` line endings.
"""

import csv
import dataclasses
import datetime
import json
import logging
import math
import pathlib
import typing

from dateutil.parser import parse
from jinja2 import Environment, BaseLoader

from ox_slap import VERSION
from ox_slap.assets import plots as plot_assets

DEFAULT_LOGGER = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
PLOT_SCRIPT_NAME = 'plot_results.py'
PLOT_TEMPLATE = 'plot_script.py.jinja'


def format_value(value):
    """Text form of a CSV cell; floats use repr so values round-trip.

    >>> format_value(0.1), format_value(float('nan')), format_value('slap')
    ('0.1', 'nan', 'slap')
    """
    if isinstance(value, float):
        return 'nan' if math.isnan(value) else repr(value)
    return str(value)


def write_csv(path, columns, rows, digest):
    """Write `rows` under header `columns` to `path`.

    :param path:     Output path.

    :param columns:  Sequence of column names.

    :param rows:     Iterable of row sequences matching `columns`.

    :param digest:   Config digest written in the leading comment line.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  The path written.

    """
    path = pathlib.Path(path)
    with open(path, 'w', encoding='utf8', newline='') as my_fd:
        my_fd.write(f'# ox_slap {VERSION} config_digest={digest}\n')
        writer = csv.writer(my_fd, lineterminator='\n')
        writer.writerow(columns)
        count = 0
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f'Row {count} has {len(row)} values for '
                                 f'{len(columns)} columns')
            writer.writerow([format_value(v) for v in row])
            count += 1
    DEFAULT_LOGGER.info('Wrote %i rows to %s', count, path)
    return path


def read_csv(path):
    """Read a file written by `write_csv`.

    :return:  Tuple (digest, columns, rows) with rows as lists of strings.
    """
    with open(path, encoding='utf8', newline='') as my_fd:
        first = my_fd.readline()
        digest = first.strip().rpartition('config_digest=')[2]
        reader = csv.reader(my_fd)
        columns = next(reader)
        rows = list(reader)
    return digest, columns, rows


@dataclasses.dataclass
class RunManifest:
    """Record of one command run, written as JSON next to its outputs.

    `status` is 'ok', 'integration_failure', 'infeasible' or
    'partial' (some sweep rows failed). `errors` holds one entry per
    failed row or position.
    """

    command: str
    digest: str
    config: typing.Dict[str, typing.Any]
    derived: typing.Dict[str, float]
    flags: typing.Dict[str, typing.Any] = dataclasses.field(
        default_factory=dict)
    version: str = VERSION
    created: datetime.datetime = dataclasses.field(
        default_factory=datetime.datetime.now)
    duration_s: float = 0.0
    status: str = 'ok'
    exit_code: int = 0
    outputs: typing.List[str] = dataclasses.field(default_factory=list)
    errors: typing.List[typing.Dict[str, typing.Any]] = dataclasses.field(
        default_factory=list)
    results: typing.Dict[str, typing.Any] = dataclasses.field(
        default_factory=dict)

    def add_error(self, where, problem):
        "Log `problem` (an exception or string) against `where`."
        entry = {'where': where, 'error': str(problem)}
        if isinstance(problem, Exception):
            entry['type'] = type(problem).__name__
        self.errors.append(entry)

    def to_json(self):
        data = dataclasses.asdict(self)
        data['created'] = self.created.isoformat()
        return json.dumps(_json_safe(data), indent=2, sort_keys=True)

    def write(self, outdir):
        "Write to MANIFEST_NAME under `outdir` and return the path."
        path = pathlib.Path(outdir) / MANIFEST_NAME
        path.write_text(self.to_json() + '\n', encoding='utf8')
        DEFAULT_LOGGER.info('Wrote manifest %s (status %s)', path,
                            self.status)
        return path

    @classmethod
    def read(cls, path):
        "Load a manifest written by `write`."
        data = json.loads(pathlib.Path(path).read_text(encoding='utf8'))
        data['created'] = parse(data['created'])
        return cls(**data)


def _json_safe(value):
    # JSON has no NaN/inf; store them as null
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


class PlotSpec(typing.NamedTuple):
    """One figure of a generated plot script.
    """

    csv: str
    x_column: str
    y_columns: typing.Sequence[str]
    title: str
    style: str = '-'
    log_x: bool = False

    @property
    def png(self):
        return pathlib.Path(self.csv).with_suffix('.png').name


def render_plot_script(plots, digest, script_name=PLOT_SCRIPT_NAME):
    """Render the plotting script text for `plots` (list of PlotSpec).
    """
    template_path = pathlib.Path(plot_assets.__file__).parent / PLOT_TEMPLATE
    template = Environment(loader=BaseLoader()).from_string(
        template_path.read_text(encoding='utf8'))
    return template.render(plots=plots, digest=digest, version=VERSION,
                           script_name=script_name)


def write_plot_script(outdir, plots, digest):
    "Write the plotting script into `outdir` and return its path."
    path = pathlib.Path(outdir) / PLOT_SCRIPT_NAME
    path.write_text(render_plot_script(plots, digest), encoding='utf8')
    return path
