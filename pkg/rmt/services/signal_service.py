"""Signal service: trajectories to the aperture signal S"""
import logging

import numpy as np

from rmt.models.signal import DistanceSignal
from rmt.utils.errors import DegenerateSignalError, ValidationError

logger = logging.getLogger(__name__)


class SignalService:
    """Service for building the mean-removed distance-versus-time signal"""

    @staticmethod
    def distance_signal(traj, a, b):
        """
        Euclidean distance between two keypoints on every frame.

        Args:
            traj (TrajectorySet): Gap-free trajectories
            a (str): First keypoint id
            b (str): Second keypoint id

        Returns:
            DistanceSignal: Raw aperture in pixels
        """
        track_a = traj.track(a)
        track_b = traj.track(b)
        if track_a.has_gaps or track_b.has_gaps:
            raise ValidationError('fill missing samples before computing distances')

        values = np.linalg.norm(track_a.samples - track_b.samples, axis=1)
        return DistanceSignal(values, traj.fps)

    @staticmethod
    def mean_remove(s):
        """
        Subtract the time-averaged mean.

        Args:
            s (DistanceSignal): Signal not yet mean-removed

        Returns:
            DistanceSignal: Zero-mean signal with the same range
        """
        if s.mean_removed:
            raise ValidationError('signal is already mean-removed')

        return DistanceSignal(s.values - s.values.mean(), s.fps, mean_removed=True,
                              normalized=s.normalized, raw_max=s.raw_max)

    @staticmethod
    def normalize_max_aperture(s):
        """
        Scale so the maximum raw aperture maps to 1.0.

        Args:
            s (DistanceSignal): Signal not yet normalized

        Returns:
            DistanceSignal: Normalized signal
        """
        if s.normalized:
            raise ValidationError('signal is already normalized')
        if s.range_R <= 0 or s.raw_max <= 0:
            raise DegenerateSignalError()

        return DistanceSignal(s.values / s.raw_max, s.fps, mean_removed=s.mean_removed,
                              normalized=True, raw_max=1.0)

    @staticmethod
    def prepare_signal(traj, a, b, normalize=True):
        """
        Distance, then optional max-aperture normalization, then mean removal.

        Args:
            traj (TrajectorySet): Gap-free trajectories
            a (str): First keypoint id
            b (str): Second keypoint id
            normalize (bool): Apply max-aperture normalization

        Returns:
            DistanceSignal: The signal S handed to vertex recognition
        """
        s = SignalService.distance_signal(traj, a, b)
        if s.range_R <= 0:
            raise DegenerateSignalError()

        if normalize:
            s = SignalService.normalize_max_aperture(s)
        s = SignalService.mean_remove(s)

        logger.debug('Prepared signal for %s (%s-%s): %r', traj.recording_id, a, b, s)
        return s
