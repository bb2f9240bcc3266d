import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from rmt.cli import cli
from rmt.models.trajectory import KeypointTrack, TrajectorySet
from rmt.models.vertex import AvrParams
from rmt.services.analysis_service import AnalysisService
from rmt.services.ingest_service import IngestService


@pytest.fixture
def runner():
    return CliRunner()


def _read_json(path):
    with open(path, encoding='utf-8') as f:
        return json.load(f)


def _write_flat(directory, name='flat'):
    samples = np.tile([100.0, 100.0], (60, 1))
    traj = TrajectorySet(name, 30.0, (KeypointTrack('thumb-tip', samples),
                                      KeypointTrack('index-fingertip', samples + [40.0, 0.0])))
    path = os.path.join(str(directory), f'{name}.csv')
    with open(path, 'w', encoding='utf-8') as f:
        f.write(IngestService.serialize_trajectory(traj, 'csv'))
    return path


def test_analyze_two_hz(runner, tmp_path, write_synth):
    path, _ = write_synth(tmp_path / 'in', frequency=2.0, recording_id='two')
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'analyze', path])
    assert result.exit_code == 0, result.output

    report = _read_json(out / 'two.features.json')
    assert report['M-TF'] == pytest.approx(2.0, abs=0.05)
    assert report['params']['gamma_flatness'] == 0.1
    assert (out / 'two.vertices.csv').exists()
    assert not (out / 'two.signal.csv').exists()

    index = _read_json(out / 'index.json')
    assert index['analyzed'] == 1 and index['failed'] == 0
    assert 'generated_at' not in index


def test_analyze_flat_recording(runner, tmp_path):
    path = _write_flat(tmp_path)
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'analyze', path])
    assert result.exit_code == 2
    entry = _read_json(out / 'index.json')['recordings'][0]
    assert entry['status'] == 'error'
    assert 'flat recording' in entry['error']


def test_analyze_directory(runner, tmp_path, write_synth):
    inputs = tmp_path / 'in'
    for i, frequency in enumerate((1.0, 1.5, 2.0, 2.5, 3.0)):
        write_synth(inputs, frequency=frequency, recording_id=f'rec{i}')
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'analyze', '--jobs', '2', str(inputs)])
    assert result.exit_code == 0, result.output
    assert len(list(out.glob('*.features.json'))) == 5
    assert _read_json(out / 'index.json')['analyzed'] == 5
    assert 'Analyzed 5/5' in result.output


def test_input_errors_outrank_analysis_errors(runner, tmp_path):
    _write_flat(tmp_path)
    (tmp_path / 'broken.csv').write_text('# fps=30\nframe,keypoint,x,y\n0,thumb-tip,oops,1\n')
    result = runner.invoke(cli, ['--out', str(tmp_path / 'out'), 'analyze', str(tmp_path)])
    assert result.exit_code == 1


def test_missing_input_is_input_error(runner, tmp_path):
    result = runner.invoke(cli, ['--out', str(tmp_path / 'out'), 'analyze', str(tmp_path / 'nope.csv')])
    assert result.exit_code == 1


def test_usage_error_exit_code(runner):
    assert runner.invoke(cli, ['analyze']).exit_code == 1
    assert runner.invoke(cli, ['--gamma-flatness', 'abc', 'analyze', 'x.csv']).exit_code == 1


def test_invalid_params_rejected(runner, tmp_path, write_synth):
    path, _ = write_synth(tmp_path, frequency=2.0)
    result = runner.invoke(cli, ['--gamma-flatness', '1.5', '--out', str(tmp_path / 'out'), 'analyze', path])
    assert result.exit_code == 1


def test_config_precedence(runner, tmp_path, write_synth):
    path, _ = write_synth(tmp_path / 'in', frequency=2.0, recording_id='cfg')
    config = tmp_path / 'rmt.json'
    config.write_text(json.dumps({'gamma-flatness': 0.2, 'format': 'csv', 'emit-signal': True}))

    out = tmp_path / 'from_file'
    result = runner.invoke(cli, ['--config', str(config), '--out', str(out), 'analyze', path])
    assert result.exit_code == 0, result.output
    assert (out / 'cfg.features.csv').exists()
    assert (out / 'cfg.signal.csv').exists()
    with open(out / 'cfg.features.csv', encoding='utf-8') as f:
        header, row = f.read().splitlines()
    assert dict(zip(header.split(','), row.split(',')))['param_gamma_flatness'] == '0.2'

    out = tmp_path / 'from_flag'
    result = runner.invoke(cli, ['--config', str(config), '--gamma-flatness', '0.15', '--format', 'json',
                                 '--out', str(out), 'analyze', path])
    assert result.exit_code == 0, result.output
    assert _read_json(out / 'cfg.features.json')['params']['gamma_flatness'] == 0.15


def test_emit_signal_columns(runner, tmp_path, write_synth):
    path, _ = write_synth(tmp_path / 'in', frequency=1.0, recording_id='sig')
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'analyze', '--emit-signal', path])
    assert result.exit_code == 0, result.output
    with open(out / 'sig.signal.csv', encoding='utf-8') as f:
        lines = f.read().splitlines()
    assert lines[0] == 'frame,t,signal,delta_filtered,reconstructed,moving_mean,section'
    assert len(lines) == 601


def test_analyze_is_deterministic(runner, tmp_path, write_synth):
    path, _ = write_synth(tmp_path / 'in', frequency=2.0, noise_sigma=0.01, seed=3, recording_id='det')
    outputs = []
    for name in ('a', 'b'):
        out = tmp_path / name
        assert runner.invoke(cli, ['--out', str(out), 'analyze', path]).exit_code == 0
        outputs.append([(out / f).read_bytes() for f in ('det.features.json', 'det.vertices.csv', 'index.json')])
    assert outputs[0] == outputs[1]


def test_synth_six_hundred_frames(runner, tmp_path):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps({'frequency': 0.5, 'duration': 20, 'recording_id': 'slow'}))
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'synth', str(spec)])
    assert result.exit_code == 0, result.output

    traj = IngestService.load_trajectory(str(out / 'slow.json'))
    assert traj.duration_frames == 600
    assert traj.fps == 30.0
    truth = _read_json(out / 'slow.truth.json')
    assert len(truth['true_peak_times']) == 9


def test_synth_is_byte_identical(runner, tmp_path):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps([{'frequency': 2, 'noise_sigma': 0.02, 'recording_id': 'n1'},
                                {'frequency': 3, 'noise_sigma': 0.02, 'recording_id': 'n2'}]))
    contents = []
    for name in ('a', 'b'):
        out = tmp_path / name
        assert runner.invoke(cli, ['--out', str(out), 'synth', '--seed', '9', str(spec)]).exit_code == 0
        contents.append(sorted((p.name, p.read_bytes()) for p in out.iterdir()))
    assert contents[0] == contents[1]
    assert len(contents[0]) == 4


def test_synth_csv_format(runner, tmp_path):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps({'frequency': 1, 'duration': 5, 'recording_id': 'js'}))
    out = tmp_path / 'out'
    assert runner.invoke(cli, ['--out', str(out), '--format', 'csv', 'synth', str(spec)]).exit_code == 0
    assert IngestService.load_trajectory(str(out / 'js.csv')).duration_frames == 150


def test_synth_nyquist_error(runner, tmp_path):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps({'frequency': 20}))
    result = runner.invoke(cli, ['--out', str(tmp_path / 'out'), 'synth', str(spec)])
    assert result.exit_code == 1


def test_compare_against_own_features(runner, tmp_path, write_synth):
    inputs = tmp_path / 'in'
    reference = []
    for i, frequency in enumerate((1.0, 1.5, 2.0, 2.5)):
        path, _ = write_synth(inputs, frequency=frequency, noise_sigma=0.01, seed=i, recording_id=f'r{i}')
        result = AnalysisService.analyze_trajectory(IngestService.load_trajectory(path),
                                                    ('thumb-tip', 'index-fingertip'), AvrParams())
        reference.append({'recording_id': f'r{i}', 'method_name': 'optotrak',
                          'features': result.report.feature_values()})
    reference_path = tmp_path / 'reference.json'
    reference_path.write_text(json.dumps(reference))

    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'compare', str(reference_path), str(inputs)])
    assert result.exit_code == 0, result.output

    agreement = _read_json(out / 'agreement.json')
    assert agreement['method_a'] == 'RMT' and agreement['method_b'] == 'optotrak'
    for cell in agreement['cells']:
        assert cell['welch']['decision'] == 'accept'
        assert cell['bland_altman']['bias'] == 0.0
    speed = next(cell for cell in agreement['cells'] if cell['feature'] == 'M-TF')
    assert speed['agreement_fraction'] == {'0.5': 1.0}
    assert speed['n'] == 4

    table = (out / 'welch_table.csv').read_text().splitlines()
    assert table[0] == 'feature,all'
    assert [row.split(',')[0] for row in table[-3:]] == ['speed', 'amplitude', 'rhythm']
    assert (out / 'bland_altman_speed.csv').exists()
    assert (out / 'bland_altman_M_TF.csv').exists()
    assert (out / 'xy_M_TF.csv').read_text().startswith('condition,recording_id,optotrak,RMT\n')


def test_compare_threshold_option(runner, tmp_path, write_synth):
    inputs = tmp_path / 'in'
    reference = []
    for i in range(3):
        write_synth(inputs, frequency=2.0, recording_id=f'r{i}')
        reference.append({'recording_id': f'r{i}', 'features': {'M-TF': 2.0 + 0.3 * i}})
    reference_path = tmp_path / 'reference.json'
    reference_path.write_text(json.dumps(reference))

    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'compare', '--threshold', 'M-TF=0.4',
                                 str(reference_path), str(inputs)])
    assert result.exit_code == 0, result.output
    cell = _read_json(out / 'agreement.json')['cells'][0]
    assert cell['agreement_fraction'] == {'0.4': pytest.approx(2 / 3, abs=1e-5)}

    bad = runner.invoke(cli, ['--out', str(out), 'compare', '--threshold', 'FOO=1', str(reference_path), str(inputs)])
    assert bad.exit_code == 1


def test_compare_empty_intersection(runner, tmp_path, write_synth):
    path, _ = write_synth(tmp_path / 'in', frequency=2.0, recording_id='mine')
    reference_path = tmp_path / 'reference.json'
    reference_path.write_text(json.dumps([{'recording_id': 'theirs', 'features': {'M-TF': 2.0}}]))
    result = runner.invoke(cli, ['--out', str(tmp_path / 'out'), 'compare', str(reference_path), path])
    assert result.exit_code == 1


def _write_points(path, offset=(0.0, 0.0), frames=20):
    rng = np.random.default_rng(4)
    tracks = tuple(KeypointTrack(k, rng.uniform(0, 500, size=(frames, 2)) + offset)
                   for k in ('thumb-tip', 'index-fingertip'))
    # Same seed for both files, so only the offset differs
    with open(path, 'w', encoding='utf-8') as f:
        f.write(IngestService.serialize_trajectory(TrajectorySet('pts', 30.0, tracks), 'csv'))
    return str(path)


def test_eval_keypoints_identity(runner, tmp_path):
    truth = _write_points(tmp_path / 'truth.csv')
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), 'eval-keypoints', truth, truth])
    assert result.exit_code == 0, result.output
    data = _read_json(out / 'keypoints.json')
    assert data['mpjpe'] == 0.0
    assert [p['pck'] for p in data['pck']] == [1.0] * 10


def test_eval_keypoints_offset(runner, tmp_path):
    truth = _write_points(tmp_path / 'truth.csv')
    predicted = _write_points(tmp_path / 'pred.csv', offset=(3.0, 4.0))
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['--out', str(out), '--format', 'csv', 'eval-keypoints',
                                 '--thresholds', '4,4.9,6', predicted, truth])
    assert result.exit_code == 0, result.output
    lines = (out / 'pck.csv').read_text().splitlines()
    assert lines[0] == 'threshold,pck,mpjpe'
    assert [line.split(',')[1] for line in lines[1:]] == ['0', '0', '1']
    assert float(lines[1].split(',')[2]) == pytest.approx(5.0)


def test_eval_keypoints_shape_mismatch(runner, tmp_path):
    truth = _write_points(tmp_path / 'truth.csv')
    short = _write_points(tmp_path / 'short.csv', frames=10)
    result = runner.invoke(cli, ['--out', str(tmp_path / 'out'), 'eval-keypoints', short, truth])
    assert result.exit_code == 1
