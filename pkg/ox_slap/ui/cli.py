"""Command line interface for ox_slap.

Each subcommand takes `--config` (a JSON file or packaged config name),
writes its CSV tables plus a `manifest.json` into `--outdir` and exits
with 0 on success, 2 for configuration errors, 3 when an integration
failed (partial outputs are kept and flagged in the manifest) and 4
when a design target cannot be reached.

Use `run` to invoke a subcommand from python with a dictionary of flags.
"""

import logging
import math
import pathlib
import time

import click

from ox_slap import VERSION
from ox_slap.core import analytics, dynamics, model, scan
from ox_slap.core.c2g import ClickToGeneric
from ox_slap.core.decorators import LockFile, watched
from ox_slap.core.dynamics import ProtocolKind
from ox_slap.core.errors import (
    ConfigError, InfeasibleGeometry, IntegrationFailure, NoThreshold,
    NotRealValued, Unachievable)
from ox_slap.ui import artifacts
from ox_slap.ui.config import RunConfig, load_config

DEFAULT_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_INFEASIBLE = 4

DEFAULT_OUTDIR = 'ox_slap_out'
DEFAULT_R_VALUES = (1, 2, 5, 10, 20, 50, 100)
PROTOCOL_NAMES = [p.value for p in ProtocolKind]
NM = 1e-9


class ConfigParam(click.ParamType):
    """Click type loading a RunConfig from a path or packaged name.
    """

    name = 'config'

    def convert(self, value, param, ctx):
        if isinstance(value, RunConfig):
            return value
        try:
            return load_config(value)
        except ConfigError as problem:
            self.fail(str(problem), param, ctx)
        return None  # not reached; fail raises


class FloatList(click.ParamType):
    """Click type for comma separated floats such as '1,2,5'.
    """

    name = 'floats'

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return tuple(float(v) for v in value)
        try:
            result = tuple(float(item) for item in str(value).split(',')
                           if item.strip())
        except ValueError:
            self.fail(f'{value!r} is not a comma separated list of numbers',
                      param, ctx)
        if not result:
            self.fail('empty list', param, ctx)
        return result


def run_options(func):
    "Add the options shared by every subcommand."

    func = click.option('--plot-script/--no-plot-script', default=False,
                        help='Also write a plotting script for the CSVs.'
                        )(func)
    func = click.option('--outdir', type=click.Path(file_okay=False),
                        default=DEFAULT_OUTDIR,
                        help='Directory for CSV files and the manifest.'
                        )(func)
    func = click.option('--config', type=ConfigParam(), required=True,
                        help='JSON config file or packaged config name '
                        '(e.g. rb87_lattice).')(func)
    return func


def _where(problem):
    if isinstance(problem, IntegrationFailure) and problem.x is not None:
        return f'x_nm={problem.x / NM:.6g}'
    return 'run'


@watched(tag=lambda command, *args, **kwargs: command)
def execute(command, cfg: RunConfig, outdir, flags, body, plot_script=False):
    """Run `body(manifest, outdir)` under a lock and write the manifest.

    :param command:  Subcommand name recorded in the manifest.

    :param cfg:      RunConfig providing digest and derived values.

    :param outdir:   Output directory (created if needed).

    :param flags:    Dictionary of command flags for the manifest.

    :param body:     Callable doing the work. It appends output file names
                     to `manifest.outputs`, may set status and exit code,
                     and returns a list of artifacts.PlotSpec.

    :param plot_script=False:  Whether to write a plotting script.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Exit code.

    """
    outdir = pathlib.Path(outdir)
    manifest = artifacts.RunManifest(
        command=command, digest=cfg.digest, config=cfg.document,
        derived=cfg.derived(), flags=flags)
    start = time.time()
    plots = []
    with LockFile.for_directory(outdir, comment=command):
        try:
            plots = body(manifest, outdir) or []
        except IntegrationFailure as problem:
            manifest.add_error(_where(problem), problem)
            manifest.status, manifest.exit_code = (
                'integration_failure', EXIT_INTEGRATION)
        except Unachievable as problem:
            manifest.add_error('run', problem)
            manifest.status, manifest.exit_code = 'infeasible', EXIT_INFEASIBLE
        except ValueError as problem:
            manifest.add_error('run', problem)
            manifest.status, manifest.exit_code = 'config_error', EXIT_CONFIG
        if plot_script and plots:
            path = artifacts.write_plot_script(outdir, plots, cfg.digest)
            manifest.outputs.append(path.name)
        manifest.duration_s = time.time() - start
        manifest.write(outdir)
    if manifest.exit_code:
        click.echo(f'{command} finished with status {manifest.status}; '
                   f'see {outdir / artifacts.MANIFEST_NAME}', err=True)
    return manifest.exit_code


@click.group()
@click.version_option(VERSION, prog_name='ox_slap')
@click.option('--log-level', default='WARNING', help='Logging level.',
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                                case_sensitive=False))
def cli(log_level):
    """Simulate and design single-site addressing in optical lattices.
    """
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


@cli.result_callback()
def _exit_with(code, **kwargs):
    click.get_current_context().exit(code or EXIT_OK)


def _nm(value):
    return value / NM if math.isfinite(value) else math.nan


@cli.command()
@run_options
@click.option('--r-values', type=FloatList(),
              default=','.join(str(r) for r in DEFAULT_R_VALUES),
              help='Intensity ratios for the resolution table.')
def analytic(config, outdir, plot_script, r_values):
    """Closed-form widths, addressing window and site probabilities.
    """
    cfg = config

    def body(manifest, outdir):
        params = cfg.analytic_params()
        trap, lat = cfg.trap, cfg.lattice
        results = manifest.results
        try:
            dx_slap = analytics.slap_fwhm(params)
        except NotRealValued as problem:
            manifest.add_error('dx_slap', problem)
            dx_slap = math.nan
        dx_cpt = analytics.cpt_fwhm(params) if params.r_prime > 0 else (
            math.nan)
        try:
            x_th = analytics.adiabatic_threshold_x(params)
        except NoThreshold as problem:
            manifest.add_error('x_th', problem)
            x_th = math.nan
        results.update(
            dx_slap_nm=_nm(dx_slap), dx_cpt_nm=_nm(dx_cpt), x_th_nm=_nm(x_th),
            real_width_bound=analytics.real_width_bound(params),
            omega_s0_t=params.omega_s0_t)
        try:
            window = analytics.ssa_window(params, lat.x1, trap.dx_at)
            results['ssa_window'] = {
                'lower': window.lower, 'upper': window.upper,
                'x_plus_nm': _nm(window.x_plus),
                'x_minus_nm': _nm(window.x_minus),
                'feasible': window.feasible,
                'contains_omega_s0_t': window.contains(params.omega_s0_t)}
        except InfeasibleGeometry as problem:
            manifest.add_error('ssa_window', problem)
            results['ssa_window'] = None
        if math.isfinite(dx_slap):
            probs = analytics.analytic_site_probs(dx_slap, trap.dx_at, lat.x1)
            results.update(p_x0=probs.p_x0, p_x1=probs.p_x1, eta=probs.eta)
        results['unresolved_targets'] = [
            target._asdict() for target in analytics.UNRESOLVED_TARGETS]

        rows = analytics.resolution_table(r_values, params)
        path = artifacts.write_csv(
            outdir / 'resolution.csv', ['r', 'dx_slap_nm', 'dx_cpt_nm'],
            [(row.r, _nm(row.dx_slap), _nm(row.dx_cpt)) for row in rows],
            cfg.digest)
        manifest.outputs.append(path.name)

        for name in ('dx_slap_nm', 'dx_cpt_nm', 'x_th_nm', 'p_x0', 'p_x1',
                     'eta'):
            if name in results:
                click.echo(f'{name}: {results[name]:.6g}')
        if results['ssa_window']:
            win = results['ssa_window']
            click.echo(f'ssa_window: ({win["lower"]:.6g}, {win["upper"]:.6g})'
                       f' feasible={win["feasible"]} contains '
                       f'{params.omega_s0_t:.6g}: '
                       f'{win["contains_omega_s0_t"]}')
        for target in analytics.UNRESOLVED_TARGETS:
            click.echo(f'unresolved: {target.quantity}={target.value:g} '
                       f'{target.unit} ({target.conditions}; '
                       f'{target.missing})')
        return [artifacts.PlotSpec('resolution.csv', 'r',
                                   ['dx_slap_nm', 'dx_cpt_nm'],
                                   'Addressing width', log_x=True)]

    return execute('analytic', cfg, outdir, {'r_values': list(r_values)},
                   body, plot_script)


@cli.command()
@run_options
@click.option('--x-nm', '--x', 'x_nm', type=float, required=True,
              help='Atom position in nm.')
@click.option('--protocol', type=click.Choice(PROTOCOL_NAMES), default=None,
              help='Protocol (defaults to the config protocol).')
@click.option('--samples', type=int, default=401,
              help='Number of time samples.')
def simulate(config, outdir, plot_script, x_nm, protocol, samples):
    """Density matrix time series for one atom position.
    """
    cfg = config
    protocol = ProtocolKind.from_name(protocol or cfg.protocol)

    def body(manifest, outdir):
        traj = dynamics.evolve_site(
            x_nm * NM, protocol, cfg.field, cfg.atom, cfg.integrator,
            record=True, n_samples=samples)
        name = f'simulate_{protocol.value}.csv'
        path = artifacts.write_csv(
            outdir / name, ('t_s_us',) + dynamics.REAL_LABELS,
            [(t * 1e6,) + tuple(state) for t, state in zip(
                traj.times.tolist(), traj.states.tolist())], cfg.digest)
        manifest.outputs.append(path.name)
        final = traj.density(-1)
        manifest.results.update(final_populations=list(final.populations()),
                                purity=final.purity())
        click.echo(f'final populations: {list(final.populations())}')
        return [artifacts.PlotSpec(name, 't_s_us', ['rho11', 'rho22', 'rho33'],
                                   f'{protocol.value} at x={x_nm:g} nm')]

    return execute('simulate', cfg, outdir, {
        'x_nm': x_nm, 'protocol': protocol.value, 'samples': samples},
                   body, plot_script)


def _report_dict(report: scan.AddressingReport):
    return {'protocol': report.protocol.value, 'r': report.r,
            'dx_numeric_nm': _nm(report.dx_numeric), 'p_x0': report.p_x0,
            'p_x1': report.p_x1, 'eta_numeric': report.eta_numeric,
            'dx_analytic_nm': _nm(report.dx_analytic),
            'eta_analytic': report.eta_analytic}


@cli.command(name='scan')
@run_options
@click.option('--protocol', type=click.Choice(PROTOCOL_NAMES), default=None,
              help='Protocol (defaults to the config protocol).')
@click.option('--workers', type=int, default=1,
              help='Worker processes for grid points.')
@click.option('--refine/--no-refine', default=False,
              help='Double the grid until site probabilities converge.')
def scan_cmd(config, outdir, plot_script, protocol, workers, refine):
    """Survival probability and final distribution across the lattice.
    """
    cfg = config
    protocol = ProtocolKind.from_name(protocol or cfg.protocol)

    def body(manifest, outdir):
        params = cfg.analytic_params()
        if refine:
            profile, report = scan.refine_report(
                cfg.grid, protocol, cfg.field, cfg.atom, cfg.integrator,
                cfg.lattice, cfg.trap, params, workers=workers,
                provenance=cfg.digest)
        else:
            profile = scan.scan_survival(
                cfg.grid, protocol, cfg.field, cfg.atom, cfg.integrator,
                workers=workers, provenance=cfg.digest)
            report = scan.addressing_report(profile, cfg.lattice, cfg.trap,
                                            params)
        x = profile.x
        rho_lat = model.lattice_density(x, cfg.lattice, cfg.trap)
        rho1 = scan.final_distribution(profile, cfg.lattice, cfg.trap)
        node = model.spatial_profiles(x, cfg.field)[0]
        name = f'scan_{protocol.value}.csv'
        path = artifacts.write_csv(
            outdir / name, ['x_nm', 'p11', 'rho_lat_per_nm', 'rho1_per_nm',
                            'omega_p_rel'],
            zip((x / NM).tolist(), profile.p11.tolist(),
                (rho_lat * NM).tolist(), (rho1 * NM).tolist(),
                node.tolist()), cfg.digest)
        manifest.outputs.append(path.name)
        manifest.results['report'] = _report_dict(report)
        manifest.results['n_points'] = profile.grid.n_points
        for key, value in manifest.results['report'].items():
            click.echo(f'{key}: {value}')
        return [
            artifacts.PlotSpec(name, 'x_nm', ['p11', 'omega_p_rel'],
                               f'{protocol.value} survival'),
            artifacts.PlotSpec(name, 'x_nm', ['rho_lat_per_nm',
                                              'rho1_per_nm'],
                               f'{protocol.value} final distribution')]

    return execute('scan', cfg, outdir, {
        'protocol': protocol.value, 'workers': workers, 'refine': refine},
                   body, plot_script)


SWEEP_COLUMNS = ['r', 'eta_slap_num', 'eta_cpt_num', 'eta_slap_analytic',
                 'eta_cpt_analytic', 'p_x0_slap', 'p_x1_slap', 'p_x0_cpt',
                 'p_x1_cpt']


def sweep_table(rows):
    """Group SweepRow list by R into rows matching SWEEP_COLUMNS.
    """
    by_r = {}
    for row in rows:
        by_r.setdefault(row.r, {})[row.protocol] = row.report
    table = []
    for r, reports in by_r.items():
        slap = reports.get(ProtocolKind.SLAP)
        cpt = reports.get(ProtocolKind.CPT)

        def pick(report, name):
            return getattr(report, name) if report else math.nan

        table.append((r, pick(slap, 'eta_numeric'), pick(cpt, 'eta_numeric'),
                      pick(slap, 'eta_analytic'), pick(cpt, 'eta_analytic'),
                      pick(slap, 'p_x0'), pick(slap, 'p_x1'),
                      pick(cpt, 'p_x0'), pick(cpt, 'p_x1')))
    return table


@cli.command()
@run_options
@click.option('--param', type=click.Choice(['r']), default='r',
              help='Parameter to sweep.')
@click.option('--values', type=FloatList(), required=True,
              help='Comma separated values, e.g. 1,2,5,10.')
@click.option('--workers', type=int, default=1,
              help='Worker processes for grid points.')
def sweep(config, outdir, plot_script, param, values, workers):
    """Numerical and analytic efficiencies of both protocols versus R.
    """
    cfg = config

    def body(manifest, outdir):
        rows = scan.sweep_r(values, cfg.field, cfg.atom, cfg.integrator,
                            cfg.grid, cfg.lattice, cfg.trap, cfg.a_const,
                            workers=workers, provenance=cfg.digest)
        path = artifacts.write_csv(outdir / 'sweep_r.csv', SWEEP_COLUMNS,
                                   sweep_table(rows), cfg.digest)
        manifest.outputs.append(path.name)
        failed = [row for row in rows if row.error]
        for row in failed:
            manifest.add_error(f'r={row.r:g} {row.protocol.value}', row.error)
        if failed:
            integration = any(row.error.startswith(IntegrationFailure.__name__)
                              for row in failed)
            manifest.status = 'partial'
            manifest.exit_code = EXIT_INTEGRATION if integration else (
                EXIT_CONFIG)
        for row in rows:
            if row.report:
                click.echo(f'r={row.r:g} {row.protocol.value}: '
                           f'eta={row.report.eta_numeric:.4f} '
                           f'(analytic {row.report.eta_analytic:.4f})')
        return [artifacts.PlotSpec('sweep_r.csv', 'r', SWEEP_COLUMNS[1:5],
                                   'Addressing efficiency', style='o-',
                                   log_x=True)]

    return execute('sweep', cfg, outdir, {
        'param': param, 'values': list(values), 'workers': workers},
                   body, plot_script)


@cli.command()
@run_options
@click.option('--target-fwhm-nm', type=float, required=True,
              help='Desired addressing width in nm.')
@click.option('--technique', type=click.Choice(PROTOCOL_NAMES),
              default='slap', help='Protocol whose width is inverted.')
@click.option('--w-p-nm', type=FloatList(), default=None,
              help='Pump node widths in nm (defaults to the config w_p).')
def design(config, outdir, plot_script, target_fwhm_nm, technique, w_p_nm):
    """Intensity ratio R needed for a target width.
    """
    cfg = config
    w_p_values = [w * NM for w in w_p_nm] if w_p_nm else [cfg.field.w_p]

    def body(manifest, outdir):
        params = cfg.analytic_params()
        rows = analytics.design_table(w_p_values, target_fwhm_nm * NM,
                                      technique, params)
        name = f'design_{technique}.csv'
        path = artifacts.write_csv(
            outdir / name, ['w_p_nm', 'r'],
            [(row.w_p / NM, row.r) for row in rows], cfg.digest)
        manifest.outputs.append(path.name)
        manifest.results['rows'] = [
            {'w_p_nm': row.w_p / NM, 'r': row.r} for row in rows]
        for row in rows:
            click.echo(f'w_p={row.w_p / NM:.6g} nm: R={row.r:.6g}')
        missing = [row for row in rows if math.isnan(row.r)]
        for row in missing:
            manifest.add_error(f'w_p_nm={row.w_p / NM:.6g}',
                               'target width unachievable')
        if missing:
            manifest.status, manifest.exit_code = (
                'infeasible', EXIT_INFEASIBLE)
        title = f'R for {target_fwhm_nm:g} nm ({technique})'
        return [artifacts.PlotSpec(name, 'w_p_nm', ['r'], title, style='o-')]

    return execute('design', cfg, outdir, {
        'target_fwhm_nm': target_fwhm_nm, 'technique': technique,
        'w_p_nm': list(w_p_nm) if w_p_nm else None}, body, plot_script)


def run(subcommand, config, flags=None):
    """Run `subcommand` programmatically and return its exit code.

    :param subcommand:  Name such as 'analytic', 'scan' or 'design'.

    :param config:      RunConfig, or path/name passed to load_config.

    :param flags=None:  Dictionary of option names (python style, e.g.
                        'x_nm') to values; strings are converted by the
                        same click types as on the command line.

    ~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-~-

    :return:  Exit code as for the command line.

    """
    command = cli.commands.get(subcommand)
    if command is None:
        raise ValueError(f'Unknown subcommand {subcommand!r}; expected one '
                         f'of {sorted(cli.commands)}')
    if not isinstance(config, RunConfig):
        try:
            config = load_config(config)
        except ConfigError as problem:
            DEFAULT_LOGGER.error('Config problem: %s', problem)
            return EXIT_CONFIG
    opts = dict(flags or {})
    opts['config'] = config
    return ClickToGeneric(command).handle_request(opts)


def main(args=None):
    "Console script entry point."
    cli.main(args=args, prog_name='ox_slap')


if __name__ == '__main__':
    main()
