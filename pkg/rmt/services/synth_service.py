"""Synth service: synthetic tapping recordings with exact ground truth"""
import json
import logging
import math

import numpy as np

from rmt.models.features import TapGeometry
from rmt.models.synth import GroundTruth, SynthSpec
from rmt.models.trajectory import KeypointTrack, TrajectorySet
from rmt.services.feature_service import FeatureService
from rmt.utils.errors import AnalysisError, ParseError, ValidationError
from rmt.utils.prng import NoiseSource

logger = logging.getLogger(__name__)

DEFAULT_KEYPOINTS = ('thumb-tip', 'index-fingertip')

_SPEC_KEYS = {
    'frequency', 'duration', 'fps', 'frequency_end', 'amplitude_decay', 'noise_sigma',
    'hold_segments', 'waiting_period', 'seed', 'baseline_px', 'amplitude_px', 'origin',
    'direction_deg', 'recording_id',
}


class _Schedule:
    """
    Tapping phase as a function of wall-clock time.

    Active tapping time tau excludes the waiting periods and the holds. The
    frequency is linear in tau, so the phase is quadratic and its level
    crossings have a closed form. Tapping stops on the last whole cycle
    that closes at least one frame before the end of the recording, so the
    hand rests closed from there on.
    """

    def __init__(self, spec):
        self.spec = spec
        self.f0 = spec.frequency
        nominal = spec.duration - 2 * spec.waiting_period - sum(length for _, length in spec.hold_segments)
        self.curvature = (spec.frequency_end - spec.frequency) / (2.0 * nominal)
        self.span = nominal
        self.holds = self._place_holds(self.phase(nominal))

        # Last closing valley, one frame of rest at least
        latest = (spec.n_frames - 2) / spec.fps
        cycles = math.floor(self.phase(nominal) + 1e-9)
        while cycles > 0 and self.wall_time(self.tau_at_phase(cycles)) > latest + 1e-9:
            cycles -= 1
        self.cycles = cycles
        self.span = self.tau_at_phase(cycles)

        for hold_tau, _, _ in self.holds:
            if hold_tau >= self.span:
                logger.warning('Hold at tapping time %.3f s falls after the last whole cycle and is ignored',
                               hold_tau)
        self.holds = [hold for hold in self.holds if hold[0] < self.span]

    def phase(self, tau):
        return self.f0 * tau + self.curvature * tau * tau

    def tau_at_phase(self, level):
        # Stable root of curvature * tau^2 + f0 * tau - level = 0; needs level <= phase(nominal span)
        return 2.0 * level / (self.f0 + math.sqrt(self.f0 * self.f0 + 4.0 * self.curvature * level))

    def _place_holds(self, end_phase):
        holds = []
        offset = 0.0
        previous = -1.0
        for start, length in self.spec.hold_segments:
            earliest = max(start - self.spec.waiting_period - offset, previous + 1e-12, 0.0)
            level = None
            if earliest < self.span:
                k = max(0, math.ceil(self.phase(earliest) - 0.5))
                level = k + 0.5
                if level <= end_phase and self.tau_at_phase(level) < earliest:
                    level += 1.0
            if level is None or level > end_phase:
                logger.warning('Hold at %.3f s starts after the last tap and is ignored', start)
                continue
            tau = self.tau_at_phase(level)
            holds.append((tau, offset, length))
            offset += length
            previous = tau
        return holds

    def wall_time(self, tau):
        """Wall-clock time of active time tau (before any hold starting at tau)"""
        shift = sum(length for hold_tau, _, length in self.holds if hold_tau < tau)
        return self.spec.waiting_period + tau + shift

    def tau(self, t):
        """Active time at wall-clock times ``t``, frozen during waits and holds"""
        rel = np.asarray(t, dtype=float) - self.spec.waiting_period
        tau = rel.copy()
        for hold_tau, offset, length in self.holds:
            start = hold_tau + offset
            tau = np.where(rel >= start + length, tau - length, tau)
            tau = np.where((rel >= start) & (rel < start + length), hold_tau, tau)
        return np.clip(tau, 0.0, self.span)


class SynthService:
    """Service for generating synthetic recordings and their ground truth"""

    @staticmethod
    def aperture(spec, times):
        """Noiseless thumb-index distance in pixels at ``times`` seconds"""
        schedule = _Schedule(spec)
        phase = schedule.phase(schedule.tau(times))
        tap = np.floor(phase)
        amplitude = spec.amplitude_px * spec.amplitude_decay ** tap
        return spec.baseline_px + amplitude * (1.0 - np.cos(2.0 * np.pi * phase)) / 2.0

    @staticmethod
    def oracle_vertices(spec):
        """
        Exact peak and valley times of the noiseless waveform.

        Every peak of active tapping counts. Valleys count from the first
        closing after the tapping onset up to, but not including, the last
        closing: that one runs into the closed rest that ends the recording
        and is no turning point. A peak that starts a hold is reported at
        the hold's centre.

        Args:
            spec (SynthSpec): Generating spec

        Returns:
            GroundTruth: Vertex times, amplitudes and analytic features
        """
        schedule = _Schedule(spec)
        last_frame = (spec.n_frames - 1) / spec.fps
        held = {hold_tau: (offset, length) for hold_tau, offset, length in schedule.holds}
        cycles = schedule.cycles

        peaks, heights, amplitudes = [], [], []
        k = 0
        while k < cycles:
            tau = schedule.tau_at_phase(k + 0.5)
            hold = next((held[h] for h in held if abs(h - tau) < 1e-12), None)
            if hold is not None:
                t = spec.waiting_period + tau + hold[0] + hold[1] / 2.0
            else:
                t = schedule.wall_time(tau)
            if 0.0 < t < last_frame:
                amplitude = spec.amplitude_px * spec.amplitude_decay ** k
                peaks.append(t)
                amplitudes.append(amplitude)
                heights.append(spec.baseline_px + amplitude)
            k += 1

        valleys = []
        k = 1
        while k < cycles:
            t = schedule.wall_time(schedule.tau_at_phase(k))
            if spec.waiting_period < t < last_frame:
                valleys.append(t)
            k += 1

        normalized = [a / max(amplitudes) for a in amplitudes] if amplitudes else []
        features = None
        if len(peaks) >= 2 and len(valleys) >= 2:
            try:
                features = FeatureService.extract_features(
                    TapGeometry(peaks, valleys, normalized), recording_id=spec.recording_id
                )
            except AnalysisError as e:
                logger.warning('No analytic features for %s: %s', spec.recording_id, e)

        return GroundTruth(
            true_peak_times=tuple(peaks),
            true_valley_times=tuple(valleys),
            true_amplitudes=tuple(normalized),
            true_features=features,
            peak_heights=tuple(heights),
        )

    @staticmethod
    def generate(spec, keypoints=DEFAULT_KEYPOINTS):
        """
        Synthesize a two-keypoint recording.

        The thumb sits at ``spec.origin``; the index fingertip moves along
        ``direction_deg`` at the waveform distance. Gaussian noise of
        noise_sigma * max aperture pixels is added to every coordinate.

        Args:
            spec (SynthSpec): Generating spec
            keypoints (tuple): Ids of the thumb and index keypoints

        Returns:
            tuple: (TrajectorySet, GroundTruth)
        """
        n = spec.n_frames
        times = np.arange(n) / spec.fps
        distance = SynthService.aperture(spec, times)

        angle = math.radians(spec.direction_deg)
        thumb = np.tile(np.array(spec.origin), (n, 1))
        index = thumb + np.column_stack((distance * math.cos(angle), distance * math.sin(angle)))

        if spec.noise_sigma > 0:
            sigma = spec.noise_sigma * spec.max_aperture
            noise = NoiseSource(spec.seed).standard_normal(4 * n).reshape(2, n, 2) * sigma
            thumb = thumb + noise[0]
            index = index + noise[1]

        traj = TrajectorySet(
            recording_id=spec.recording_id,
            fps=spec.fps,
            keypoints=(KeypointTrack(keypoints[0], thumb), KeypointTrack(keypoints[1], index)),
        )
        truth = SynthService.oracle_vertices(spec)
        logger.info('Synthesized %s: %d frames, %d true peaks', spec.recording_id, n,
                    len(truth.true_peak_times))
        return traj, truth

    @staticmethod
    def load_spec(content):
        """
        Build a SynthSpec from a JSON document.

        ``frequency_start`` is accepted as an alias of ``frequency``; holds
        may be [start, length] pairs or {start, length} objects.

        Args:
            content (str, bytes or dict): JSON text or an already decoded object

        Returns:
            SynthSpec: Validated spec
        """
        if isinstance(content, (str, bytes)):
            try:
                data = json.loads(content)
            except json.JSONDecodeError as e:
                raise ParseError(f'invalid JSON: {e.msg}', line=e.lineno)
        else:
            data = content
        if not isinstance(data, dict):
            raise ParseError('synth spec must be a JSON object')

        data = dict(data)
        if 'frequency_start' in data:
            data['frequency'] = data.pop('frequency_start')
        unknown = sorted(set(data) - _SPEC_KEYS)
        if unknown:
            raise ValidationError(f"unknown synth spec key(s): {', '.join(unknown)}")
        if 'frequency' not in data:
            raise ValidationError('synth spec needs a frequency')

        holds = []
        for hold in data.get('hold_segments', []):
            if isinstance(hold, dict):
                holds.append((hold.get('start'), hold.get('length')))
            else:
                holds.append(tuple(hold))
        data['hold_segments'] = tuple(holds)
        if 'origin' in data:
            data['origin'] = tuple(data['origin'])

        try:
            return SynthSpec(**data)
        except (TypeError, ValueError) as e:
            raise ValidationError(f'invalid synth spec: {e}')

    @staticmethod
    def truth_document(spec, truth):
        """Ground truth plus the generating spec as a JSON-ready dict"""
        return {
            'recording_id': spec.recording_id,
            'spec': spec.to_dict(),
            'true_peak_times': list(truth.true_peak_times),
            'true_valley_times': list(truth.true_valley_times),
            'true_amplitudes': list(truth.true_amplitudes),
            'peak_heights': list(truth.peak_heights),
            'true_features': truth.true_features.feature_values() if truth.true_features else None,
        }
