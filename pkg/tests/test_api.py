import json

import numpy as np

from rmt.models.synth import SynthSpec
from rmt.models.trajectory import KeypointTrack, TrajectorySet
from rmt.services.ingest_service import IngestService
from rmt.services.synth_service import SynthService


def _trajectory_document(traj):
    return json.loads(IngestService.serialize_trajectory(traj, 'json'))


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    assert response.get_json() == {'success': True, 'status': 'ok'}


def test_analyze(client):
    traj, _ = SynthService.generate(SynthSpec(frequency=2.0, recording_id='api'))
    response = client.post('/api/analyze', json={'trajectory': _trajectory_document(traj)})
    assert response.status_code == 200
    data = response.get_json()
    assert data['success'] is True
    assert data['report']['recording_id'] == 'api'
    assert abs(data['report']['M-TF'] - 2.0) < 0.05
    assert {v['kind'] for v in data['vertices']} == {'peak', 'trough'}


def test_analyze_params_override(client):
    traj, _ = SynthService.generate(SynthSpec(frequency=1.0))
    response = client.post('/api/analyze', json={
        'trajectory': _trajectory_document(traj),
        'params': {'gamma_flatness': 0.2, 'subframe_refinement': False},
    })
    params = response.get_json()['report']['params']
    assert params['gamma_flatness'] == 0.2
    assert params['subframe_refinement'] is False

    response = client.post('/api/analyze', json={'trajectory': _trajectory_document(traj),
                                                  'params': {'gamma_speed': 1}})
    assert response.status_code == 400
    assert 'gamma_speed' in response.get_json()['error']


def test_analyze_flat_recording(client):
    samples = np.tile([10.0, 10.0], (90, 1))
    traj = TrajectorySet('flat', 30.0, (KeypointTrack('thumb-tip', samples),
                                        KeypointTrack('index-fingertip', samples + [0.0, 25.0])))
    response = client.post('/api/analyze', json={'trajectory': _trajectory_document(traj)})
    assert response.status_code == 422
    data = response.get_json()
    assert data['success'] is False
    assert 'flat recording' in data['error']


def test_analyze_requires_trajectory(client):
    response = client.post('/api/analyze', json={'keypoint_pair': ['thumb-tip', 'index-fingertip']})
    assert response.status_code == 400
    assert response.get_json()['success'] is False

    response = client.post('/api/analyze', data='not json', content_type='application/json')
    assert response.status_code == 400


def test_analyze_unknown_keypoint(client):
    traj, _ = SynthService.generate(SynthSpec(frequency=1.0))
    response = client.post('/api/analyze', json={'trajectory': _trajectory_document(traj),
                                                  'keypoint_pair': ['thumb-tip', 'wrist']})
    assert response.status_code == 400


def test_eval_keypoints(client):
    truth = np.random.default_rng(3).uniform(0, 100, size=(2, 5, 2))
    response = client.post('/api/eval-keypoints', json={
        'predicted': (truth + [3.0, 4.0]).tolist(),
        'truth': truth.tolist(),
        'thresholds': [4.9, 5.1],
    })
    data = response.get_json()
    assert response.status_code == 200
    assert abs(data['mpjpe'] - 5.0) < 1e-6
    assert [p['pck'] for p in data['pck']] == [0.0, 1.0]


def test_eval_keypoints_shape_mismatch(client):
    response = client.post('/api/eval-keypoints', json={
        'predicted': np.zeros((1, 3, 2)).tolist(),
        'truth': np.zeros((1, 4, 2)).tolist(),
    })
    assert response.status_code == 400

    response = client.post('/api/eval-keypoints', json={'predicted': [[1, 2], [3]], 'truth': [[1, 2]]})
    assert response.status_code == 400


def _measurements(method, values, shift=0.0):
    return [
        {'recording_id': f'r{i}', 'method_name': method, 'condition': '2Hz',
         'features': {'M-TF': value + shift}}
        for i, value in enumerate(values)
    ]


def test_compare_accepts_identical(client):
    values = [2.0, 2.1, 1.9, 2.05]
    response = client.post('/api/compare', json={
        'measurements_a': _measurements('rmt', values),
        'measurements_b': _measurements('opto', values),
    })
    assert response.status_code == 200
    cell = response.get_json()['cells'][0]
    assert (cell['feature'], cell['condition'], cell['n']) == ('M-TF', '2Hz', 4)
    assert cell['welch']['decision'] == 'accept'
    assert cell['bland_altman']['bias'] == 0.0
    assert cell['agreement_fraction'] == {'0.5': 1.0}


def test_compare_rejects_shift(client):
    values = [2.0, 2.001, 1.999, 2.0005, 1.9995]
    response = client.post('/api/compare', json={
        'measurements_a': _measurements('rmt', values, shift=1.0),
        'measurements_b': _measurements('opto', values),
        'thresholds': {'M-TF': 0.25},
    })
    cell = response.get_json()['cells'][0]
    assert cell['welch']['decision'] == 'reject'
    assert abs(cell['bland_altman']['bias'] - 1.0) < 1e-9
    assert cell['agreement_fraction'] == {'0.25': 0.0}


def test_compare_errors(client):
    response = client.post('/api/compare', json={
        'measurements_a': _measurements('rmt', [1.0]),
        'measurements_b': [{'recording_id': 'other', 'features': {'M-TF': 1.0}}],
    })
    assert response.status_code == 400

    response = client.post('/api/compare', json={
        'measurements_a': _measurements('rmt', [1.0, 2.0]),
        'measurements_b': _measurements('opto', [1.0, 2.0]),
        'thresholds': {'FOO': 1},
    })
    assert response.status_code == 400


def test_compare_summary_measures(client):
    def _side(method):
        return [
            {'recording_id': f'r{i}', 'method_name': method, 'condition': '2Hz',
             'features': {'M-TF': 2.0 + 0.1 * i, 'COV-A': cov_a, 'COV-TF': 0.05 * (i + 1)}}
            for i, cov_a in enumerate([0.0, 0.1, 0.2, 0.3])
        ]

    response = client.post('/api/compare', json={
        'measurements_a': _side('rmt'),
        'measurements_b': _side('opto'),
        'thresholds': {'rhythm': 0.1},
    })
    assert response.status_code == 200
    cells = response.get_json()['cells']
    assert [c['feature'] for c in cells] == ['M-TF', 'COV-A', 'COV-TF', 'speed', 'amplitude', 'rhythm']

    by_name = {c['feature']: c for c in cells}
    assert by_name['speed']['n'] == 4
    assert by_name['speed']['agreement_fraction'] == {'0.5': 1.0}
    # ln of a zero COV-A has no value
    assert by_name['amplitude']['n'] == 3
    assert by_name['rhythm']['agreement_fraction'] == {'0.1': 1.0}
    assert by_name['rhythm']['welch']['decision'] == 'accept'


def test_compare_summary_threshold_names(client):
    response = client.post('/api/compare', json={
        'measurements_a': _measurements('rmt', [1.0, 2.0]),
        'measurements_b': _measurements('opto', [1.0, 2.0]),
        'thresholds': {'speed': 0.2},
    })
    cells = response.get_json()['cells']
    assert [c['feature'] for c in cells] == ['M-TF', 'speed']
    assert cells[1]['agreement_fraction'] == {'0.2': 1.0}
