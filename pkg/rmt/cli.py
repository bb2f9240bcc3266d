"""Command-line interface: analyze, compare, synth and eval-keypoints"""
import dataclasses
import functools
import json
import logging
import os

import click
from click.core import ParameterSource
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from rmt.config import Config
from rmt.models.features import FEATURE_NAMES, SUMMARY_NAMES
from rmt.models.run_config import RunConfig
from rmt.models.vertex import AvrParams
from rmt.services.analysis_service import AnalysisService
from rmt.services.ingest_service import IngestService
from rmt.services.report_service import ReportService
from rmt.services.synth_service import SynthService
from rmt.utils.errors import ParseError, RmtError, ValidationError
from rmt.utils.validators import validate_keypoint_pair, validate_recording_id, validate_thresholds

logger = logging.getLogger(__name__)

console = Console(stderr=True)

# Config-file keys accepted for each setting (long flag names, dashes or underscores)
_FILE_KEYS = {
    'gamma_flatness': ('gamma-flatness', 'gamma_flatness'),
    'gamma_window': ('gamma-window', 'gamma_window'),
    'gamma_platform': ('gamma-platform', 'gamma_platform'),
    'subframe': ('subframe', 'subframe-refinement', 'subframe_refinement'),
    'normalize': ('normalize',),
    'keypoints': ('keypoints',),
    'out_dir': ('out', 'out-dir', 'out_dir'),
    'report_format': ('format', 'report-format', 'report_format'),
    'timestamps': ('timestamps',),
    'jobs': ('jobs',),
    'emit_signal': ('emit-signal', 'emit_signal'),
    'method': ('method', 'method-name', 'method_name'),
    'threshold': ('threshold', 'thresholds', 'agreement-thresholds', 'agreement_thresholds'),
    'seed': ('seed',),
    'pck_thresholds': ('pck-thresholds', 'pck_thresholds'),
}
_INVERTED_KEYS = {'no-normalize': 'normalize', 'no_normalize': 'normalize'}


class RmtGroup(click.Group):
    """Click group whose usage errors exit with the input-error code"""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise


def _setup_logging(verbose, quiet):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(message)s',
        handlers=[RichHandler(console=console, show_time=False, show_path=False)],
        force=True,
    )


def _load_config_file(path):
    if not path:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f'{path}: invalid JSON: {e.msg}', line=e.lineno)
    except OSError as e:
        raise ValidationError(f'cannot read config file {path}: {e.strerror or e}')
    if not isinstance(data, dict):
        raise ParseError(f'{path}: config file must hold a JSON object')

    settings = {}
    known = {key: name for name, keys in _FILE_KEYS.items() for key in keys}
    for key, value in data.items():
        if key in _INVERTED_KEYS:
            settings[_INVERTED_KEYS[key]] = not value
        elif key in known:
            settings[known[key]] = value
        else:
            logger.warning("Ignoring unknown config file key '%s'", key)
    return settings


def _resolve(ctx, options, file_settings):
    """Flags given on the command line win over the config file, which wins over defaults"""
    resolved = {}
    for name, value in options.items():
        source = ctx.get_parameter_source(name)
        if source in (ParameterSource.DEFAULT, ParameterSource.DEFAULT_MAP, None) and name in file_settings:
            resolved[name] = file_settings[name]
        else:
            resolved[name] = value
    return resolved


def _parse_thresholds(values):
    """``FEATURE=VALUE`` strings (or a dict) to {feature: float}"""
    if isinstance(values, dict):
        items = list(values.items())
    else:
        items = []
        for text in values:
            if '=' not in str(text):
                raise ValidationError(f"threshold '{text}' must look like FEATURE=VALUE")
            name, _, value = str(text).partition('=')
            items.append((name.strip(), value.strip()))

    thresholds = {}
    for name, value in items:
        if name not in FEATURE_NAMES + SUMMARY_NAMES:
            raise ValidationError(f"unknown feature '{name}' in threshold")
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"threshold for {name} must be a number, got '{value}'")
        is_valid, error = validate_thresholds([value])
        if not is_valid:
            raise ValidationError(error)
        thresholds[name] = value
    return thresholds


def _run_config(settings, **extra):
    pair, error = validate_keypoint_pair(settings['keypoints'])
    if error:
        raise ValidationError(error)
    params = AvrParams(
        gamma_flatness=float(settings['gamma_flatness']),
        gamma_window=float(settings['gamma_window']),
        gamma_platform=float(settings['gamma_platform']),
        subframe_refinement=bool(settings['subframe']),
    )
    if settings['report_format'] not in ('json', 'csv'):
        raise ValidationError(f"report format must be json or csv, got '{settings['report_format']}'")
    return RunConfig(
        keypoints=pair,
        params=params,
        normalize=bool(settings['normalize']),
        out_dir=settings['out_dir'],
        report_format=settings['report_format'],
        timestamps=bool(settings['timestamps']),
        significant_digits=Config.SIGNIFICANT_DIGITS,
        **extra,
    )


def handle_errors(f):
    """Map pipeline errors onto the exit-code contract"""
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return f(*args, **kwargs)
        except RmtError as e:
            logger.error('%s', e)
            ctx.exit(e.exit_code)
    return wrapper


@click.group(cls=RmtGroup)
@click.option('--gamma-flatness', type=float, default=Config.GAMMA_FLATNESS, show_default=True,
              help='Relative slope threshold of fluctuation removal.')
@click.option('--gamma-window', type=float, default=Config.GAMMA_WINDOW, show_default=True,
              help='Moving-mean window as a fraction of the recording length.')
@click.option('--gamma-platform', type=float, default=Config.GAMMA_PLATFORM, show_default=True,
              help='Platform length (fraction of N) above which the central time is used.')
@click.option('--subframe/--no-subframe', default=Config.SUBFRAME_REFINEMENT, show_default=True,
              help='Parabolic sub-frame refinement of short-platform vertices.')
@click.option('--normalize/--no-normalize', default=Config.NORMALIZE, show_default=True,
              help='Normalize the aperture to its maximum.')
@click.option('--keypoints', default=','.join(Config.KEYPOINTS), show_default=True,
              help='Keypoint pair "a,b" whose distance is analyzed.')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default='out', show_default=True,
              help='Output directory.')
@click.option('--format', 'report_format', type=click.Choice(['json', 'csv']),
              default=Config.REPORT_FORMAT, show_default=True, help='Report format.')
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
              help='JSON file mirroring the long flag names.')
@click.option('--timestamps', is_flag=True, help='Include generation times in reports.')
@click.option('-v', '--verbose', is_flag=True, help='Debug logging.')
@click.option('-q', '--quiet', is_flag=True, help='Warnings and errors only.')
@click.pass_context
def cli(ctx, config_file, verbose, quiet, **options):
    """Rapid motion tracking analysis of finger-tapping recordings."""
    _setup_logging(verbose, quiet)
    try:
        file_settings = _load_config_file(config_file)
    except RmtError as e:
        logger.error('%s', e)
        ctx.exit(e.exit_code)
    ctx.obj = {'settings': _resolve(ctx, options, file_settings), 'file': file_settings}


@cli.command()
@click.argument('inputs', nargs=-1, required=True, type=click.Path())
@click.option('--emit-signal', is_flag=True, help='Also write <id>.signal.csv for plotting.')
@click.option('--jobs', type=click.IntRange(min=1), default=1, show_default=True,
              help='Recordings analyzed in parallel.')
@click.pass_context
@handle_errors
def analyze(ctx, inputs, **options):
    """Extract tapping features from trajectory files or directories."""
    local = _resolve(ctx, options, ctx.obj['file'])
    run_config = _run_config(ctx.obj['settings'], input_paths=tuple(inputs),
                             emit_signal=bool(local['emit_signal']), jobs=int(local['jobs']))

    outcomes, code = AnalysisService.run_analyze(run_config)

    table = Table(title='Analysis')
    for column in ('recording', 'status', 'M-TF', 'TTC'):
        table.add_column(column)
    for path, result, error in outcomes:
        if result is not None:
            table.add_row(result.recording_id, 'ok', f'{result.report.m_tf:.3f}', str(result.report.ttc))
        else:
            table.add_row(os.path.basename(path), f'[red]{error}[/red]', '', '')
    console.print(table)

    ok = sum(1 for _, result, _ in outcomes if result is not None)
    console.print(f'Analyzed {ok}/{len(outcomes)} recording(s) into {run_config.out_dir}')
    ctx.exit(code)


@cli.command()
@click.argument('reference', type=click.Path(exists=True, dir_okay=False))
@click.argument('inputs', nargs=-1, required=True, type=click.Path())
@click.option('--method', default=Config.ANALYZED_METHOD_NAME, show_default=True,
              help='Label of the analyzed side.')
@click.option('--threshold', multiple=True, help='Agreement threshold FEATURE=VALUE (repeatable).')
@click.option('--jobs', type=click.IntRange(min=1), default=1, show_default=True)
@click.pass_context
@handle_errors
def compare(ctx, reference, inputs, **options):
    """Compare features of INPUTS against the REFERENCE measurements."""
    local = _resolve(ctx, options, ctx.obj['file'])
    thresholds = dict(Config.AGREEMENT_THRESHOLDS)
    thresholds.update(_parse_thresholds(local['threshold']))
    run_config = _run_config(ctx.obj['settings'], input_paths=tuple(inputs), jobs=int(local['jobs']),
                             method_name=str(local['method']), agreement_thresholds=thresholds)

    with open(reference, 'rb') as f:
        measurements_b = IngestService.parse_reference(f.read())

    files = AnalysisService.collect_inputs(run_config.input_paths)
    outcomes = AnalysisService.analyze_batch(files, run_config)
    results = [result for _, result, _ in outcomes if result is not None]
    measurements_a = AnalysisService.measurements_from_results(results, run_config.method_name)

    groups = AnalysisService.group_by_method(measurements_b)
    for method_b, group in groups.items():
        reports, samples = AnalysisService.compare(
            measurements_a, group, thresholds,
            alpha=Config.WELCH_ALPHA,
            multiplier=Config.BLAND_ALTMAN_MULTIPLIER,
            split_hz=Config.MAXIMAL_SPLIT_HZ,
        )
        out = run_config.out_dir if len(groups) == 1 else os.path.join(run_config.out_dir, method_b)
        ReportService.write_agreement(out, reports, run_config.method_name, method_b,
                                      run_config.significant_digits, run_config.timestamps)
        ReportService.write_xy(out, samples, run_config.method_name, method_b, run_config.significant_digits)

        table = Table(title=f'Welch t-test: {run_config.method_name} vs {method_b}')
        frame = ReportService.welch_table(reports)
        for column in frame.columns:
            table.add_column(str(column))
        for row in frame.itertuples(index=False):
            table.add_row(*(str(value) for value in row))
        console.print(table)

    failed = [error for _, _, error in outcomes if error is not None]
    if failed:
        logger.warning('%d recording(s) could not be analyzed', len(failed))
        ctx.exit(min(error.exit_code for error in failed))


@cli.command()
@click.argument('spec_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--seed', type=int, default=None, help='Override the spec seed.')
@click.pass_context
@handle_errors
def synth(ctx, spec_file, **options):
    """Generate synthetic recordings and their ground truth from SPEC_FILE."""
    local = _resolve(ctx, options, ctx.obj['file'])
    settings = ctx.obj['settings']
    pair, error = validate_keypoint_pair(settings['keypoints'])
    if error:
        raise ValidationError(error)

    with open(spec_file, 'rb') as f:
        content = f.read()
    try:
        document = json.loads(content)
    except json.JSONDecodeError as e:
        raise ParseError(f'invalid JSON: {e.msg}', line=e.lineno)

    specs = [SynthService.load_spec(item) for item in (document if isinstance(document, list) else [document])]
    if local['seed'] is not None:
        specs = [dataclasses.replace(spec, seed=int(local['seed']) + i) for i, spec in enumerate(specs)]

    ids = [spec.recording_id for spec in specs]
    if len(set(ids)) != len(ids):
        raise ValidationError('synth specs must have distinct recording ids')
    for rid in ids:
        if not validate_recording_id(rid):
            raise ValidationError(f"recording id '{rid}' is not usable as a file name")

    fmt = settings['report_format']
    out = settings['out_dir']
    for spec in specs:
        traj, truth = SynthService.generate(spec, keypoints=pair)
        ReportService.write_text(os.path.join(out, f'{spec.recording_id}.{fmt}'),
                                 IngestService.serialize_trajectory(traj, fmt))
        ReportService.write_json(os.path.join(out, f'{spec.recording_id}.truth.json'),
                                 ReportService.stamp(SynthService.truth_document(spec, truth),
                                                     settings['timestamps']),
                                 Config.SIGNIFICANT_DIGITS)
        console.print(f'{spec.recording_id}: {traj.duration_frames} frames, '
                      f'{len(truth.true_peak_times)} true peaks')


@cli.command('eval-keypoints')
@click.argument('predicted', type=click.Path(exists=True, dir_okay=False))
@click.argument('truth', type=click.Path(exists=True, dir_okay=False))
@click.option('--thresholds', 'pck_thresholds', default=','.join(f'{t:g}' for t in Config.PCK_THRESHOLDS),
              show_default=True, help='Comma-separated PCK pixel thresholds.')
@click.pass_context
@handle_errors
def eval_keypoints(ctx, predicted, truth, **options):
    """PCK curve and MPJPE of PREDICTED keypoints against TRUTH."""
    local = _resolve(ctx, options, ctx.obj['file'])
    settings = ctx.obj['settings']
    raw = local['pck_thresholds']
    try:
        thresholds = [float(t) for t in (raw.split(',') if isinstance(raw, str) else raw)]
    except ValueError:
        raise ValidationError(f"thresholds must be numbers, got '{raw}'")

    curve, mpjpe = AnalysisService.evaluate_keypoints(
        IngestService.load_trajectory(predicted), IngestService.load_trajectory(truth), thresholds
    )
    ReportService.write_keypoint_eval(settings['out_dir'], curve, mpjpe, settings['report_format'],
                                      Config.SIGNIFICANT_DIGITS, settings['timestamps'])

    table = Table(title=f'MPJPE {mpjpe:.3f} px')
    table.add_column('threshold (px)')
    table.add_column('PCK')
    for threshold, fraction in curve:
        table.add_row(f'{threshold:g}', f'{fraction:.4f}')
    console.print(table)


def main():
    cli(prog_name='rmt')
