"""Shared fixtures"""
import os

import numpy as np
import pytest

from rmt import create_app
from rmt.models.signal import DistanceSignal
from rmt.models.synth import SynthSpec
from rmt.models.vertex import AvrParams
from rmt.services.ingest_service import IngestService
from rmt.services.synth_service import SynthService


@pytest.fixture
def app():
    return create_app('testing')


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def params():
    return AvrParams()


@pytest.fixture
def synth():
    """Generate a synthetic recording from keyword spec fields"""
    def _synth(**fields):
        spec = SynthSpec(**fields)
        traj, truth = SynthService.generate(spec)
        return spec, traj, truth
    return _synth


@pytest.fixture
def write_synth(tmp_path, synth):
    """Write a synthetic recording to disk and return (path, truth)"""
    def _write(directory=None, fmt='csv', **fields):
        directory = directory or tmp_path
        os.makedirs(directory, exist_ok=True)
        spec, traj, truth = synth(**fields)
        path = os.path.join(str(directory), f'{spec.recording_id}.{fmt}')
        with open(path, 'w', encoding='utf-8') as f:
            f.write(IngestService.serialize_trajectory(traj, fmt))
        return path, truth
    return _write


@pytest.fixture
def mean_removed():
    """DistanceSignal of ``values`` minus their mean"""
    def _signal(values, fps=30.0):
        values = np.asarray(values, dtype=float)
        return DistanceSignal(values - values.mean(), fps, mean_removed=True)
    return _signal
