"""Feature service: speed, amplitude and rhythm features of a tapping recording"""
import logging
import math

import numpy as np

from rmt.models.features import FeatureReport, TapGeometry
from rmt.models.vertex import PEAK
from rmt.utils.errors import CorruptVertexSeriesError, InsufficientVerticesError

logger = logging.getLogger(__name__)

IIV_INTERVAL_MISMATCH = 'iiv_interval_mismatch'


class FeatureService:
    """Service for turning recognized vertices into tapping features"""

    @staticmethod
    def tap_geometry(v):
        """
        Peak and valley times plus normalized peak amplitudes.

        The amplitude of a peak is its height minus the mean height of the
        troughs next to it (only one at the series ends), divided by the
        largest such value.

        Args:
            v (VertexSeries): Alternating vertices

        Returns:
            TapGeometry: Inputs of extract_features
        """
        if not v.alternates:
            raise CorruptVertexSeriesError('vertex kinds do not alternate')

        vertices = list(v.vertices)
        peaks = [i for i, vertex in enumerate(vertices) if vertex.kind == PEAK]
        troughs = [vertex for vertex in vertices if vertex.kind != PEAK]
        if len(peaks) < 2 or len(troughs) < 2:
            raise InsufficientVerticesError(
                f'need at least 2 peaks and 2 troughs, got {len(peaks)} and {len(troughs)}'
            )

        raw = []
        for i in peaks:
            neighbours = [vertices[j].height for j in (i - 1, i + 1) if 0 <= j < len(vertices)]
            raw.append(vertices[i].height - float(np.mean(neighbours)))
        raw = np.array(raw)
        if (raw <= 0).any():
            raise CorruptVertexSeriesError('a peak is not above its neighbouring troughs')

        return TapGeometry(
            peak_times=[vertices[i].t_vertex for i in peaks],
            valley_times=[vertex.t_vertex for vertex in troughs],
            amplitudes=raw / raw.max(),
        )

    @staticmethod
    def extract_features(g, recording_id=None, params=None, mismatch_tolerance=0.1):
        """
        Compute the nine tapping features.

        Args:
            g (TapGeometry): Peak/valley times and amplitudes
            recording_id (str, optional): Carried into the report
            params (dict, optional): Recognition parameters used
            mismatch_tolerance (float): Relative gap between the mean peak
                interval and M-ITI above which IIV is flagged

        Returns:
            FeatureReport: The feature values
        """
        if g.k_p < 2 or g.k_v < 2:
            raise InsufficientVerticesError(
                f'need at least 2 peaks and 2 valleys, got {g.k_p} and {g.k_v}'
            )

        peak_intervals = np.diff(g.peak_times)
        valley_intervals = np.diff(g.valley_times)
        if (peak_intervals <= 0).any() or (valley_intervals <= 0).any():
            raise CorruptVertexSeriesError('vertex times are not strictly increasing')

        amplitudes = g.amplitudes
        if (amplitudes <= 0).any():
            raise CorruptVertexSeriesError('amplitudes must be positive')

        frequencies = 1.0 / peak_intervals
        k_p = g.k_p
        m_tf = float(frequencies.mean())
        m_iti = float(valley_intervals.mean())

        # Both dispersions divide by the number of intervals, K_p - 1
        cov_tf = float(np.sqrt(np.mean((frequencies - m_tf) ** 2)) / m_tf)
        iiv = float(np.sqrt(np.mean((peak_intervals - m_iti) ** 2)))

        flags = []
        if abs(peak_intervals.mean() - m_iti) > mismatch_tolerance * m_iti:
            flags.append(IIV_INTERVAL_MISMATCH)

        report = FeatureReport(
            m_tf=m_tf,
            ttc=int(min(k_p, g.k_v)),
            ms=float(1.0 / peak_intervals.min()),
            m_iti=m_iti,
            dos=float(math.log(frequencies[0] / frequencies[-1]) / (k_p - 1)),
            cov_a=float(amplitudes.std() / amplitudes.mean()),
            doa=float(math.log(amplitudes[0] / amplitudes[-1]) / k_p),
            cov_tf=cov_tf,
            iiv=iiv,
            recording_id=recording_id,
            params=dict(params or {}),
            k_p=k_p,
            k_v=g.k_v,
            flags=tuple(flags),
        )
        logger.debug('Features for %s: M-TF=%.4f TTC=%d', recording_id, report.m_tf, report.ttc)
        return report

    @staticmethod
    def summary_measures(report):
        """
        The three aggregate measures used when comparing methods.

        Args:
            report (FeatureReport): Extracted features

        Returns:
            dict: speed (M-TF), amplitude (ln COV-A), rhythm (ln COV-TF);
                a zero COV has no logarithm and maps to None
        """
        return FeatureService.summary_values(report.feature_values())

    @staticmethod
    def summary_values(feature_values):
        """
        Aggregate measures from a feature dict, such as a reference measurement.

        A measure whose source feature is absent is left out.
        """
        def _log(value):
            return math.log(value) if value is not None and value > 0 else None

        sources = (('speed', 'M-TF', lambda v: v), ('amplitude', 'COV-A', _log), ('rhythm', 'COV-TF', _log))
        return {
            name: transform(feature_values[source])
            for name, source, transform in sources
            if source in feature_values
        }
