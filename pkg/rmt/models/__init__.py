"""Models package - exports all models for easy importing"""
from rmt.models.features import FEATURE_NAMES, SUMMARY_NAMES, FeatureReport, TapGeometry
from rmt.models.trajectory import CONDITION_LABELS, KeypointTrack, ReferenceMeasurement, TrajectorySet
from rmt.models.signal import DistanceSignal
from rmt.models.vertex import AvrParams, Section, SignalTrace, Vertex, VertexSeries
from rmt.models.agreement import (
    AgreementReport,
    BlandAltmanResult,
    KeypointPredictionSet,
    PairedFeatureSample,
    WelchResult,
)
from rmt.models.synth import GroundTruth, SynthSpec
from rmt.models.run_config import RunConfig

__all__ = [
    'FEATURE_NAMES',
    'SUMMARY_NAMES',
    'CONDITION_LABELS',
    'FeatureReport',
    'TapGeometry',
    'KeypointTrack',
    'ReferenceMeasurement',
    'TrajectorySet',
    'DistanceSignal',
    'AvrParams',
    'Section',
    'SignalTrace',
    'Vertex',
    'VertexSeries',
    'AgreementReport',
    'BlandAltmanResult',
    'KeypointPredictionSet',
    'PairedFeatureSample',
    'WelchResult',
    'GroundTruth',
    'SynthSpec',
    'RunConfig',
]
