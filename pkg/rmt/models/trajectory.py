"""Trajectory and reference measurement models"""
from dataclasses import dataclass, field

import numpy as np

from rmt.models.features import FEATURE_NAMES
from rmt.utils.errors import ValidationError

CONDITION_LABELS = ('0.5Hz', '1Hz', '2Hz', '3Hz', 'maximal')


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class KeypointTrack:
    """
    Per-frame 2D pixel positions of one keypoint.

    Missing samples are NaN unless the track has been ``filled``, in which
    case every sample is finite and ``missing_mask`` records which ones were
    interpolated.
    """

    keypoint_id: str
    samples: np.ndarray
    missing_mask: np.ndarray = None
    filled: bool = False

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float, copy=True)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise ValidationError(f"keypoint '{self.keypoint_id}': samples must be (N, 2)")

        if self.missing_mask is None:
            mask = ~np.isfinite(samples).all(axis=1)
        else:
            mask = np.array(self.missing_mask, dtype=bool, copy=True)
            if mask.shape != (samples.shape[0],):
                raise ValidationError(f"keypoint '{self.keypoint_id}': mask length mismatch")

        if self.filled:
            if not np.isfinite(samples).all():
                raise ValidationError(f"keypoint '{self.keypoint_id}': filled track has gaps")
        else:
            # Missing samples are NaN so they can never leak into a computation
            samples[mask] = np.nan
            if not np.isfinite(samples[~mask]).all():
                raise ValidationError(f"keypoint '{self.keypoint_id}': non-finite coordinate")

        samples.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, 'samples', samples)
        object.__setattr__(self, 'missing_mask', mask)

    @property
    def n_frames(self):
        return self.samples.shape[0]

    @property
    def has_missing(self):
        return bool(self.missing_mask.any())

    @property
    def has_gaps(self):
        return bool(np.isnan(self.samples).any())

    def __eq__(self, other):
        if not isinstance(other, KeypointTrack):
            return NotImplemented
        return (
            self.keypoint_id == other.keypoint_id
            and np.array_equal(self.missing_mask, other.missing_mask)
            and np.array_equal(self.samples, other.samples, equal_nan=True)
        )

    __hash__ = None

    def __repr__(self):
        return f'<KeypointTrack {self.keypoint_id} n={self.n_frames} missing={int(self.missing_mask.sum())}>'


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """Named keypoint tracks sampled at a fixed frame rate"""

    recording_id: str
    fps: float
    keypoints: tuple
    duration_frames: int = None

    def __post_init__(self):
        keypoints = tuple(self.keypoints)
        if not keypoints:
            raise ValidationError('trajectory has zero keypoints')
        if not np.isfinite(self.fps) or self.fps <= 0:
            raise ValidationError(f'fps must be positive, got {self.fps}')

        n = keypoints[0].n_frames if self.duration_frames is None else int(self.duration_frames)
        if n < 2:
            raise ValidationError(f'trajectory needs at least 2 frames, got {n}')

        seen = set()
        for track in keypoints:
            if track.keypoint_id in seen:
                raise ValidationError(f"duplicate keypoint id '{track.keypoint_id}'")
            seen.add(track.keypoint_id)
            if track.n_frames != n:
                raise ValidationError(
                    f"keypoint '{track.keypoint_id}' has {track.n_frames} samples, expected {n}"
                )

        object.__setattr__(self, 'fps', float(self.fps))
        object.__setattr__(self, 'keypoints', keypoints)
        object.__setattr__(self, 'duration_frames', n)

    @property
    def keypoint_ids(self):
        return tuple(track.keypoint_id for track in self.keypoints)

    @property
    def duration_seconds(self):
        return self.duration_frames / self.fps

    def track(self, keypoint_id):
        """Look up a track by id, raising ValidationError for unknown ids"""
        for track in self.keypoints:
            if track.keypoint_id == keypoint_id:
                return track
        raise ValidationError(
            f"unknown keypoint id '{keypoint_id}' (have: {', '.join(self.keypoint_ids)})"
        )

    def replace_tracks(self, tracks):
        return TrajectorySet(self.recording_id, self.fps, tuple(tracks), self.duration_frames)

    def __eq__(self, other):
        if not isinstance(other, TrajectorySet):
            return NotImplemented
        return (
            self.recording_id == other.recording_id
            and self.fps == other.fps
            and self.duration_frames == other.duration_frames
            and self.keypoints == other.keypoints
        )

    __hash__ = None

    def __repr__(self):
        return f'<TrajectorySet {self.recording_id} fps={self.fps:g} N={self.duration_frames}>'


@dataclass(frozen=True)
class ReferenceMeasurement:
    """Feature values reported by one measurement method for one recording"""

    recording_id: str
    method_name: str
    feature_values: dict = field(default_factory=dict)
    condition_label: str = None

    def __post_init__(self):
        unknown = sorted(set(self.feature_values) - set(FEATURE_NAMES))
        if unknown:
            raise ValidationError(f"unknown feature name(s): {', '.join(unknown)}")
        if self.condition_label is not None and self.condition_label not in CONDITION_LABELS:
            raise ValidationError(f"unknown condition '{self.condition_label}'")
        object.__setattr__(self, 'feature_values', dict(self.feature_values))

    def __hash__(self):
        return hash((self.recording_id, self.method_name))
