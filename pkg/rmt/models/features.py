"""Tap geometry and feature report models"""
from dataclasses import dataclass, field

import numpy as np

# Canonical serialization order
FEATURE_NAMES = ('M-TF', 'TTC', 'MS', 'M-ITI', 'DoS', 'COV-A', 'DoA', 'COV-TF', 'IIV')

# Aggregate measures of the method comparison: M-TF, ln COV-A, ln COV-TF
SUMMARY_NAMES = ('speed', 'amplitude', 'rhythm')

_ATTRIBUTES = {
    'M-TF': 'm_tf',
    'TTC': 'ttc',
    'MS': 'ms',
    'M-ITI': 'm_iti',
    'DoS': 'dos',
    'COV-A': 'cov_a',
    'DoA': 'doa',
    'COV-TF': 'cov_tf',
    'IIV': 'iiv',
}


@dataclass(frozen=True, eq=False)
class TapGeometry:
    """Peak/valley times (s) and normalized peak amplitudes of one recording"""

    peak_times: np.ndarray
    valley_times: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        for name in ('peak_times', 'valley_times', 'amplitudes'):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k_p(self):
        return len(self.peak_times)

    @property
    def k_v(self):
        return len(self.valley_times)


@dataclass(frozen=True)
class FeatureReport:
    """The nine tapping features plus provenance"""

    m_tf: float
    ttc: int
    ms: float
    m_iti: float
    dos: float
    cov_a: float
    doa: float
    cov_tf: float
    iiv: float
    recording_id: str = None
    params: dict = field(default_factory=dict)
    k_p: int = None
    k_v: int = None
    flags: tuple = ()

    def value(self, feature_name):
        """Feature value by canonical name"""
        return getattr(self, _ATTRIBUTES[feature_name])

    def feature_values(self):
        return {name: self.value(name) for name in FEATURE_NAMES}

    def to_dict(self):
        """Flat report: canonical feature names plus provenance keys"""
        data = {'recording_id': self.recording_id}
        data.update(self.feature_values())
        data['K_p'] = self.k_p
        data['K_v'] = self.k_v
        data['params'] = dict(self.params)
        data['flags'] = list(self.flags)
        return data

    def __hash__(self):
        return hash((self.recording_id,) + tuple(self.feature_values().values()))
