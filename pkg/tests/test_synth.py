import json
import math

import numpy as np
import pytest

from rmt.models.synth import SynthSpec
from rmt.services.ingest_service import IngestService
from rmt.services.synth_service import SynthService
from rmt.utils.errors import ParseError, ValidationError
from rmt.utils.prng import NoiseSource


def test_two_hz_truth():
    truth = SynthService.oracle_vertices(SynthSpec(frequency=2.0))
    assert len(truth.true_peak_times) == 39
    assert len(truth.true_valley_times) == 38
    assert truth.true_features.m_tf == pytest.approx(2.0)
    assert truth.true_features.cov_tf == pytest.approx(0.0, abs=1e-9)


def test_one_hz_peak_times():
    truth = SynthService.oracle_vertices(SynthSpec(frequency=1.0))
    np.testing.assert_allclose(truth.true_peak_times[:4], [0.5, 1.5, 2.5, 3.5])
    np.testing.assert_allclose(truth.true_valley_times[:3], [1.0, 2.0, 3.0])


def test_waiting_period_translates():
    base = SynthService.oracle_vertices(SynthSpec(frequency=1.0))
    waiting = SynthService.oracle_vertices(SynthSpec(frequency=1.0, waiting_period=2.0))
    np.testing.assert_allclose(waiting.true_peak_times[:5], np.array(base.true_peak_times[:5]) + 2.0)
    np.testing.assert_allclose(waiting.true_valley_times[:5], np.array(base.true_valley_times[:5]) + 2.0)
    assert waiting.true_peak_times[-1] < 18.0


def test_waiting_period_keeps_waveform_closed():
    spec = SynthSpec(frequency=1.0, waiting_period=2.0)
    times = np.array([0.0, 1.0, 1.99, 18.01, 19.5])
    np.testing.assert_allclose(SynthService.aperture(spec, times), spec.baseline_px)


def test_hold_reported_at_centre():
    truth = SynthService.oracle_vertices(SynthSpec(frequency=1.0, hold_segments=((5.2, 3.0),)))
    assert 7.0 in [round(t, 9) for t in truth.true_peak_times]
    assert 9.5 in [round(t, 9) for t in truth.true_peak_times]
    assert 5.5 not in [round(t, 9) for t in truth.true_peak_times]


def test_hold_keeps_aperture_open():
    spec = SynthSpec(frequency=1.0, hold_segments=((5.2, 3.0),))
    times = np.linspace(5.5, 8.5, 7)
    np.testing.assert_allclose(SynthService.aperture(spec, times), spec.max_aperture)


@pytest.mark.parametrize('frequency,waiting,expected', [
    (2.0, 0.0, 39),
    (0.5, 0.0, 9),
    (0.75, 0.5, 14),
    (1.3, 0.5, 24),
    (2.0, 1.0, 36),
])
def test_tapping_ends_on_whole_cycle(frequency, waiting, expected):
    spec = SynthSpec(frequency=frequency, waiting_period=waiting)
    truth = SynthService.oracle_vertices(spec)
    assert len(truth.true_peak_times) == expected
    assert len(truth.true_valley_times) == expected - 1

    closing = (truth.true_peak_times[-1] + 0.5 / frequency)
    tail = np.arange(math.ceil(closing * spec.fps), spec.n_frames) / spec.fps
    assert len(tail) >= 2
    np.testing.assert_allclose(SynthService.aperture(spec, tail), spec.baseline_px, atol=1e-9)


@pytest.mark.parametrize('frequency_end,hold_start', [(0.1, 17.0), (0.2, 18.5)])
def test_hold_after_last_tap_ignored(frequency_end, hold_start):
    spec = SynthSpec(frequency=3.0, frequency_end=frequency_end, hold_segments=((hold_start, 0.5),))
    truth = SynthService.oracle_vertices(spec)
    assert len(truth.true_peak_times) > 0
    times = np.arange(spec.n_frames) / spec.fps
    assert np.isfinite(SynthService.aperture(spec, times)).all()


def test_hold_on_last_cycle_still_closes():
    spec = SynthSpec(frequency=1.0, hold_segments=((17.2, 1.0),))
    truth = SynthService.oracle_vertices(spec)
    assert len(truth.true_valley_times) == len(truth.true_peak_times) - 1
    assert truth.true_peak_times[-1] < (spec.n_frames - 1) / spec.fps


def test_frequency_ramp_slows():
    truth = SynthService.oracle_vertices(SynthSpec(frequency=3.0, frequency_end=2.0, duration=10.0))
    assert truth.true_features.dos > 0
    intervals = np.diff(truth.true_peak_times)
    assert (np.diff(intervals) > 0).all()


def test_amplitude_decay_closed_form():
    truth = SynthService.oracle_vertices(SynthSpec(frequency=2.0, amplitude_decay=0.98))
    k_p = len(truth.true_peak_times)
    np.testing.assert_allclose(truth.true_amplitudes, 0.98 ** np.arange(k_p))
    expected = math.log(1 / 0.98 ** (k_p - 1)) / k_p
    assert truth.true_features.doa == pytest.approx(expected)


def test_generate_shape(synth):
    spec, traj, _ = synth(frequency=0.5)
    assert traj.duration_frames == 600
    assert traj.fps == 30.0
    assert traj.keypoint_ids == ('thumb-tip', 'index-fingertip')

    distance = np.linalg.norm(traj.track('index-fingertip').samples - traj.track('thumb-tip').samples, axis=1)
    np.testing.assert_allclose(distance, SynthService.aperture(spec, np.arange(600) / 30.0))


def test_generate_is_deterministic(synth):
    _, first, _ = synth(frequency=2.0, noise_sigma=0.02, seed=42)
    _, second, _ = synth(frequency=2.0, noise_sigma=0.02, seed=42)
    _, other, _ = synth(frequency=2.0, noise_sigma=0.02, seed=43)
    assert IngestService.serialize_trajectory(first, 'csv') == IngestService.serialize_trajectory(second, 'csv')
    assert first != other


def test_nyquist_rejected():
    with pytest.raises(ValidationError, match='Nyquist'):
        SynthSpec(frequency=15.0, fps=30.0)
    with pytest.raises(ValidationError, match='Nyquist'):
        SynthSpec(frequency=2.0, frequency_end=20.0)


def test_spec_leaves_time_to_tap():
    with pytest.raises(ValidationError):
        SynthSpec(frequency=1.0, duration=4.0, waiting_period=2.0)


def test_load_spec():
    spec = SynthService.load_spec('{"frequency_start": 2, "hold_segments": [{"start": 3, "length": 1}], '
                                  '"recording_id": "s1"}')
    assert spec.frequency == 2
    assert spec.hold_segments == ((3.0, 1.0),)
    assert spec.recording_id == 's1'

    with pytest.raises(ValidationError, match='unknown'):
        SynthService.load_spec({'frequency': 1, 'colour': 'red'})
    with pytest.raises(ValidationError, match='frequency'):
        SynthService.load_spec({'duration': 10})
    with pytest.raises(ParseError):
        SynthService.load_spec('{"frequency": ')


def test_truth_document_is_json():
    spec = SynthSpec(frequency=2.0, recording_id='doc')
    document = SynthService.truth_document(spec, SynthService.oracle_vertices(spec))
    decoded = json.loads(json.dumps(document))
    assert decoded['spec']['frequency'] == 2.0
    assert len(decoded['true_peak_times']) == 39
    assert decoded['true_features']['M-TF'] == pytest.approx(2.0)


def test_noise_source_reproducible():
    first = NoiseSource(5).standard_normal(10001)
    second = NoiseSource(5).standard_normal(10001)
    np.testing.assert_array_equal(first, second)
    assert len(first) == 10001
    assert abs(first.mean()) < 0.05
    assert abs(first.std() - 1.0) < 0.05

    u = NoiseSource(6).uniform(1000)
    assert ((u >= 0) & (u < 1)).all()
