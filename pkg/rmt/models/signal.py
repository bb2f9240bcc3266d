"""Distance signal model"""
from dataclasses import dataclass

import numpy as np

from rmt.utils.errors import ValidationError


@dataclass(frozen=True, eq=False)
class DistanceSignal:
    """
    Scalar aperture signal S sampled at ``fps``.

    ``raw_max`` is the maximum raw inter-keypoint distance, kept so the
    max-aperture normalization stays defined after mean removal.
    ``range_R`` is cached on construction.
    """

    values: np.ndarray
    fps: float
    mean_removed: bool = False
    normalized: bool = False
    raw_max: float = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 1 or len(values) < 2:
            raise ValidationError('distance signal needs at least 2 samples')
        if not np.isfinite(values).all():
            raise ValidationError('distance signal contains non-finite values')
        if self.fps <= 0:
            raise ValidationError(f'fps must be positive, got {self.fps}')

        values.flags.writeable = False
        range_r = float(values.max() - values.min())
        if self.mean_removed and abs(values.mean()) > 1e-9 * max(range_r, 1.0):
            raise ValidationError('mean_removed signal does not have zero mean')

        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'fps', float(self.fps))
        object.__setattr__(self, 'range_R', range_r)
        if self.raw_max is None:
            object.__setattr__(self, 'raw_max', float(values.max()))

    def __len__(self):
        return len(self.values)

    @property
    def times(self):
        return np.arange(len(self.values)) / self.fps

    def __repr__(self):
        return (f'<DistanceSignal N={len(self)} fps={self.fps:g} R={self.range_R:.4g} '
                f'mean_removed={self.mean_removed} normalized={self.normalized}>')
