"""Adaptive vertex recognition models"""
from dataclasses import dataclass, field, asdict

import numpy as np

from rmt.utils.errors import ValidationError
from rmt.utils.validators import validate_avr_params

PLATFORM = 'platform'
TRANSITION = 'transition'

PEAK = 'peak'
TROUGH = 'trough'
NONE = 'none'


@dataclass(frozen=True)
class AvrParams:
    """Thresholds of the adaptive vertex recognition chain"""

    gamma_flatness: float = 0.1
    gamma_window: float = 0.1
    gamma_platform: float = 0.01
    subframe_refinement: bool = True

    def __post_init__(self):
        is_valid, error = validate_avr_params(self.gamma_flatness, self.gamma_window, self.gamma_platform)
        if not is_valid:
            raise ValidationError(error)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Section:
    """Inclusive frame range classified as platform or transition"""

    start_frame: int
    end_frame: int
    kind: str
    polarity: str = NONE

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValidationError(f'section start {self.start_frame} after end {self.end_frame}')
        if self.kind == TRANSITION and self.polarity != NONE:
            raise ValidationError('transition sections carry no polarity')

    @property
    def length(self):
        return self.end_frame - self.start_frame + 1

    @property
    def is_platform(self):
        return self.kind == PLATFORM


@dataclass(frozen=True)
class Vertex:
    """A recognized peak or trough"""

    t_vertex: float
    frame: int
    height: float
    kind: str


@dataclass(frozen=True)
class VertexSeries:
    """Time-ordered vertices and the parameters that produced them"""

    vertices: tuple
    source_params: AvrParams = field(default_factory=AvrParams)

    def __post_init__(self):
        vertices = tuple(self.vertices)
        times = [v.t_vertex for v in vertices]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError('vertex times must be strictly increasing')
        object.__setattr__(self, 'vertices', vertices)

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    @property
    def peaks(self):
        return [v for v in self.vertices if v.kind == PEAK]

    @property
    def troughs(self):
        return [v for v in self.vertices if v.kind == TROUGH]

    @property
    def alternates(self):
        kinds = [v.kind for v in self.vertices]
        return all(a != b for a, b in zip(kinds, kinds[1:]))


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """Intermediate series of one recognition run, for plotting"""

    signal: np.ndarray
    delta_filtered: np.ndarray
    reconstructed: np.ndarray
    moving_mean: np.ndarray
    sections: tuple
    vertices: VertexSeries
    fps: float
