"""Synthetic recording spec and ground truth"""
from dataclasses import dataclass, field, asdict

from rmt.utils.errors import ValidationError
from rmt.utils.validators import validate_synth_spec


@dataclass(frozen=True)
class SynthSpec:
    """
    Generating parameters of a synthetic tapping recording.

    ``frequency`` is the start of a linear frequency profile;
    ``frequency_end`` defaults to it (constant rate). ``noise_sigma`` is a
    fraction of the maximum aperture. Holds are (start s, length s) pairs.
    """

    frequency: float
    duration: float = 20.0
    fps: float = 30.0
    frequency_end: float = None
    amplitude_decay: float = 1.0
    noise_sigma: float = 0.0
    hold_segments: tuple = ()
    waiting_period: float = 0.0
    seed: int = 0
    baseline_px: float = 20.0
    amplitude_px: float = 100.0
    origin: tuple = (320.0, 240.0)
    direction_deg: float = 0.0
    recording_id: str = 'synth'

    def __post_init__(self):
        if self.frequency_end is None:
            object.__setattr__(self, 'frequency_end', self.frequency)
        holds = tuple((float(start), float(length)) for start, length in self.hold_segments)
        object.__setattr__(self, 'hold_segments', tuple(sorted(holds)))
        object.__setattr__(self, 'origin', tuple(float(v) for v in self.origin))

        is_valid, error = validate_synth_spec({
            'fps': self.fps,
            'duration': self.duration,
            'frequency_start': self.frequency,
            'frequency_end': self.frequency_end,
            'amplitude_decay': self.amplitude_decay,
            'noise_sigma': self.noise_sigma,
            'waiting_period': self.waiting_period,
            'hold_segments': self.hold_segments,
            'baseline_px': self.baseline_px,
            'amplitude_px': self.amplitude_px,
        })
        if not is_valid:
            raise ValidationError(error)

    @property
    def n_frames(self):
        return int(round(self.duration * self.fps))

    @property
    def max_aperture(self):
        return self.baseline_px + self.amplitude_px

    def to_dict(self):
        data = asdict(self)
        data['hold_segments'] = [list(h) for h in self.hold_segments]
        data['origin'] = list(self.origin)
        return data


@dataclass(frozen=True)
class GroundTruth:
    """Exact vertex times and features of the noiseless generating waveform"""

    true_peak_times: tuple
    true_valley_times: tuple
    true_amplitudes: tuple
    true_features: object = None  # FeatureReport
    peak_heights: tuple = field(default=(), repr=False)
