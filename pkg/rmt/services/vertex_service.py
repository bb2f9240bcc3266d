"""Vertex service: adaptive recognition of tapping peaks and troughs"""
import logging

import numpy as np

from rmt.models.signal import DistanceSignal
from rmt.models.vertex import (
    PEAK,
    PLATFORM,
    TRANSITION,
    TROUGH,
    Section,
    SignalTrace,
    Vertex,
    VertexSeries,
)
from rmt.utils.errors import UnanalyzableRecordingError, ValidationError

logger = logging.getLogger(__name__)

# Relative tolerance under which a platform mean equals the moving-mean mean
_TIE_TOLERANCE = 1e-12

# Half-width of the mean used to decide which side of mu a frame is on
_SIDE_HALF_WIDTH = 1


def _values(signal):
    if isinstance(signal, DistanceSignal):
        return signal.values
    return np.asarray(signal, dtype=float)


def _zero_runs(delta):
    """Maximal runs of exact zeros as (first, last) delta indices"""
    padded = np.concatenate(([0], (delta == 0).astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[0::2], edges[1::2] - 1))


def _centered_mean(values, half):
    """Mean over [i - half, i + half], truncated at the ends"""
    n = len(values)
    index = np.arange(n)
    lo = np.maximum(0, index - half)
    hi = np.minimum(n - 1, index + half)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)


def _hysteresis_state(excess, band):
    """+1/-1 side of every frame, or None when no frame leaves the band"""
    outside = np.abs(excess) > band
    if not outside.any():
        return None

    first = int(np.argmax(outside))
    current = 1 if excess[first] > 0 else -1
    state = np.empty(len(excess), dtype=int)
    state[:first + 1] = current
    for k in range(first + 1, len(excess)):
        if current > 0 and excess[k] < -band:
            current = -1
        elif current < 0 and excess[k] > band:
            current = 1
        state[k] = current
    return state


def _tile(platforms, n_frames):
    """Interleave transitions between sorted, disjoint platforms"""
    sections = []
    prev_end = None
    for platform in platforms:
        if prev_end is None:
            if platform.start_frame > 0:
                sections.append(Section(0, platform.start_frame, TRANSITION))
        elif platform.start_frame > prev_end + 1:
            sections.append(Section(prev_end, platform.start_frame, TRANSITION))
        sections.append(platform)
        prev_end = platform.end_frame

    if prev_end is None:
        return [Section(0, n_frames - 1, TRANSITION)]
    if prev_end < n_frames - 1:
        sections.append(Section(prev_end, n_frames - 1, TRANSITION))
    return sections


def _parabolic_offset(values, k, polarity):
    """Sub-frame offset of a local extremum from a three-point parabola"""
    if k <= 0 or k >= len(values) - 1:
        return 0.0
    y0, y1, y2 = values[k - 1], values[k], values[k + 1]

    # Only refine a genuine local extremum of the full signal
    if polarity == PEAK and not (y1 >= y0 and y1 >= y2):
        return 0.0
    if polarity == TROUGH and not (y1 <= y0 and y1 <= y2):
        return 0.0

    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return 0.0
    return float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))


class VertexService:
    """Service implementing the adaptive vertex recognition chain"""

    @staticmethod
    def fluctuation_removal(S, p):
        """
        Zero every frame-to-frame change smaller than gamma_flatness * R.

        Args:
            S (DistanceSignal): Mean-removed signal
            p (AvrParams): Recognition parameters

        Returns:
            np.ndarray: Filtered differences, length N - 1
        """
        if not S.mean_removed:
            raise ValidationError('fluctuation removal needs a mean-removed signal')

        delta = np.diff(S.values)
        threshold = p.gamma_flatness * S.range_R
        return np.where(np.abs(delta) < threshold, 0.0, delta)

    @staticmethod
    def reconstruct(S, delta_filtered):
        """
        Rebuild S' from the filtered differences.

        Transitions follow the cumulative sum of the differences; each
        platform (maximal zero run) is anchored to the mean of S over its
        frames.

        Args:
            S (DistanceSignal or array): Original signal
            delta_filtered (np.ndarray): Output of fluctuation_removal

        Returns:
            np.ndarray: Reconstructed signal, length N
        """
        values = _values(S)
        delta = np.asarray(delta_filtered, dtype=float)
        n = len(values)
        if len(delta) != n - 1:
            raise ValidationError(f'expected {n - 1} differences, got {len(delta)}')

        runs = {int(first): int(last) for first, last in _zero_runs(delta)}
        out = np.empty(n)
        out[0] = values[0]
        i = 0
        while i < n - 1:
            if i in runs:
                last = runs[i]
                out[i:last + 2] = values[i:last + 2].mean()
                i = last + 1
            else:
                out[i + 1] = out[i] + delta[i]
                i += 1
        return out

    @staticmethod
    def moving_mean(reconstructed, p):
        """
        Centered moving average with a window of gamma_window * N frames.

        Windows are truncated at the signal ends.

        Args:
            reconstructed (np.ndarray): S'
            p (AvrParams): Recognition parameters

        Returns:
            np.ndarray: mu, length N
        """
        values = _values(reconstructed)
        window = max(1, int(np.floor(p.gamma_window * len(values) + 0.5)))
        return _centered_mean(values, window // 2)

    @staticmethod
    def segment_and_classify(reconstructed, delta_filtered, mu):
        """
        Split S' into platforms and transitions and give platforms a polarity.

        Zero runs of the filtered differences are platforms; a frame where
        two non-zero differences change sign is a one-frame platform. A
        platform is a peak when its mean S' exceeds its mean mu, otherwise
        a trough.

        Args:
            reconstructed (np.ndarray): S'
            delta_filtered (np.ndarray): Filtered differences
            mu (np.ndarray): Moving mean

        Returns:
            list: Sections tiling the signal in time order
        """
        values = _values(reconstructed)
        delta = np.asarray(delta_filtered, dtype=float)
        mu = np.asarray(mu, dtype=float)
        n = len(values)
        if len(delta) != n - 1 or len(mu) != n:
            raise ValidationError('reconstructed signal, differences and moving mean lengths disagree')

        bounds = [(int(first), int(last) + 1) for first, last in _zero_runs(delta)]

        # Apex of a fast tap: no zero difference, just a sign change
        sign = np.sign(delta)
        turning = np.flatnonzero((sign[:-1] * sign[1:]) < 0) + 1
        bounds.extend((int(k), int(k)) for k in turning)
        bounds.sort()

        tolerance = _TIE_TOLERANCE * max(1.0, float(np.abs(values).max()))
        platforms = []
        for start, end in bounds:
            gap = values[start:end + 1].mean() - mu[start:end + 1].mean()
            polarity = PEAK if gap > tolerance else TROUGH
            platforms.append(Section(start, end, PLATFORM, polarity))

        return _tile(platforms, n)

    @staticmethod
    def refine_sections(sections, S, mu, p):
        """
        Split platforms where S changes side of mu and merge equal neighbours.

        The side of every frame follows a hysteresis state over the
        three-frame mean of S minus mu: it turns "above" only when that
        excess exceeds h = gamma_flatness * R / 2 and "below" only when it
        drops under -h. Frames before the first departure from the band take
        the first side reached. Platforms are cut where the state changes and
        each piece takes the state as its polarity; if S never leaves the band
        the polarities from segment_and_classify are kept. Consecutive
        platforms of equal polarity are then merged across the transitions
        between them.

        Args:
            sections (list): Output of segment_and_classify
            S (DistanceSignal): Original signal
            mu (np.ndarray): Moving mean
            p (AvrParams): Recognition parameters

        Returns:
            list: Refined sections tiling the signal
        """
        values = _values(S)
        mu = np.asarray(mu, dtype=float)
        band = p.gamma_flatness * float(np.ptp(values)) / 2.0
        state = _hysteresis_state(_centered_mean(values, _SIDE_HALF_WIDTH) - mu, band)

        pieces = []
        for section in sections:
            if not section.is_platform:
                continue
            if state is None:
                pieces.append(section)
                continue

            a, b = section.start_frame, section.end_frame
            cuts = np.flatnonzero(np.diff(state[a:b + 1])) + 1
            starts = np.concatenate(([0], cuts)) + a
            ends = np.concatenate((cuts - 1, [b - a])) + a
            for start, end in zip(starts, ends):
                polarity = PEAK if state[start] > 0 else TROUGH
                pieces.append(Section(int(start), int(end), PLATFORM, polarity))

        merged = []
        for piece in pieces:
            if merged and merged[-1].polarity == piece.polarity:
                last = merged[-1]
                merged[-1] = Section(last.start_frame, piece.end_frame, PLATFORM, last.polarity)
            else:
                merged.append(piece)

        return _tile(merged, len(values))

    @staticmethod
    def locate_vertices(sections, S, p, fps=None):
        """
        Place one vertex on every platform except the first and the last.

        Platforms no longer than gamma_platform * N use the extremum of S
        inside them (optionally refined to sub-frame time); longer ones use
        their central time. The height is the platform extremum when the
        vertex lies strictly inside the platform, otherwise S at the vertex.

        Args:
            sections (list): Refined sections
            S (DistanceSignal or array): Original signal
            p (AvrParams): Recognition parameters
            fps (float, optional): Frame rate; taken from S when omitted

        Returns:
            VertexSeries: Vertices in time order
        """
        values = _values(S)
        if fps is None:
            fps = S.fps
        n = len(values)

        platforms = [s for s in sections if s.is_platform]
        if len(platforms) < 3:
            raise UnanalyzableRecordingError(
                f'only {len(platforms)} platform(s) found; need one between the first and last'
            )

        limit = p.gamma_platform * n
        vertices = []
        for section in platforms[1:-1]:
            a, b = section.start_frame, section.end_frame
            segment = values[a:b + 1]
            is_peak = section.polarity == PEAK

            if section.length <= limit:
                frame = a + int(np.argmax(segment) if is_peak else np.argmin(segment))
                position = float(frame)
                if p.subframe_refinement:
                    position += _parabolic_offset(values, frame, section.polarity)
            else:
                position = (a + b) / 2.0
                frame = (a + b) // 2

            if a < position < b:
                height = float(segment.max() if is_peak else segment.min())
            else:
                height = float(values[frame])

            t_vertex = position / fps
            if vertices and t_vertex <= vertices[-1].t_vertex:
                logger.debug('Dropping vertex at frame %d: not after the previous vertex', frame)
                continue
            vertices.append(Vertex(t_vertex, frame, height, section.polarity))

        return VertexSeries(tuple(vertices), p)

    @staticmethod
    def enforce_alternation(v):
        """
        Collapse runs of same-kind vertices to their most extreme member.

        Args:
            v (VertexSeries): Time-ordered vertices

        Returns:
            VertexSeries: Strictly alternating vertices (ties keep the earliest)
        """
        kept = []
        for vertex in v.vertices:
            if kept and kept[-1].kind == vertex.kind:
                previous = kept[-1]
                if vertex.kind == PEAK:
                    better = vertex.height > previous.height
                else:
                    better = vertex.height < previous.height
                if better:
                    kept[-1] = vertex
            else:
                kept.append(vertex)
        return VertexSeries(tuple(kept), v.source_params)

    @staticmethod
    def _drop_inverted(v):
        # A peak not above its neighbouring troughs is removed, then runs collapse again
        while True:
            vertices = list(v.vertices)
            inverted = None
            for i, vertex in enumerate(vertices):
                if vertex.kind != PEAK:
                    continue
                neighbours = [vertices[j] for j in (i - 1, i + 1) if 0 <= j < len(vertices)]
                if any(vertex.height <= other.height for other in neighbours):
                    inverted = i
                    break
            if inverted is None:
                return v
            logger.debug('Dropping peak at frame %d below a neighbouring trough', vertices[inverted].frame)
            del vertices[inverted]
            v = VertexService.enforce_alternation(VertexSeries(tuple(vertices), v.source_params))

    @staticmethod
    def trace(S, p):
        """
        Run the full recognition chain and keep every intermediate series.

        Args:
            S (DistanceSignal): Mean-removed signal
            p (AvrParams): Recognition parameters

        Returns:
            SignalTrace: S, filtered differences, S', mu, sections and vertices
        """
        delta = VertexService.fluctuation_removal(S, p)
        reconstructed = VertexService.reconstruct(S, delta)
        mu = VertexService.moving_mean(reconstructed, p)
        sections = VertexService.segment_and_classify(reconstructed, delta, mu)
        sections = VertexService.refine_sections(sections, S, mu, p)
        series = VertexService.locate_vertices(sections, S, p)
        series = VertexService.enforce_alternation(series)
        series = VertexService._drop_inverted(series)

        n_peaks, n_troughs = len(series.peaks), len(series.troughs)
        if n_peaks < 2 or n_troughs < 1:
            raise UnanalyzableRecordingError(
                f'recognized {n_peaks} peak(s) and {n_troughs} trough(s); need at least 2 and 1'
            )

        logger.debug('Recognized %d peaks and %d troughs over %d sections', n_peaks, n_troughs, len(sections))
        return SignalTrace(S.values, delta, reconstructed, mu, tuple(sections), series, S.fps)

    @staticmethod
    def recognize(S, p):
        """Full recognition chain returning only the vertex series"""
        return VertexService.trace(S, p).vertices
