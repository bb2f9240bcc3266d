"""Report service: deterministic JSON/CSV output written atomically"""
import json
import logging
import math
import os
import tempfile
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from rmt.models.features import FEATURE_NAMES, SUMMARY_NAMES

logger = logging.getLogger(__name__)


def round_significant(value, digits=6):
    """
    Round every float in a JSON-ready structure to ``digits`` significant digits.

    Non-finite floats become None. Dicts keep their key order.
    """
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f'{value:.{digits}g}')
    if isinstance(value, dict):
        return {str(k): round_significant(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [round_significant(v, digits) for v in value]
    return value


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


class ReportService:
    """Service for writing reports and plot-ready CSV files"""

    @staticmethod
    def to_json(data, digits=6):
        return json.dumps(round_significant(data, digits), indent=2, allow_nan=False) + '\n'

    @staticmethod
    def to_csv(frame, digits=6):
        return frame.to_csv(index=False, float_format=f'%.{digits}g', lineterminator='\n')

    @staticmethod
    def write_text(path, text):
        """Replace ``path`` atomically with ``text``"""
        return _atomic_write(path, text)

    @staticmethod
    def write_json(path, data, digits=6):
        """Write ``data`` as indented JSON, replacing any existing file atomically"""
        return _atomic_write(path, ReportService.to_json(data, digits))

    @staticmethod
    def write_csv(path, frame, digits=6):
        """Write a DataFrame as CSV, replacing any existing file atomically"""
        return _atomic_write(path, ReportService.to_csv(frame, digits))

    @staticmethod
    def stamp(data, timestamps):
        """Append a UTC generation time when timestamps are requested"""
        if timestamps:
            data = dict(data)
            data['generated_at'] = datetime.now(timezone.utc).isoformat(timespec='seconds')
        return data

    @staticmethod
    def write_feature_report(out_dir, report, fmt='json', digits=6, timestamps=False):
        """
        Write ``<id>.features.json`` or ``<id>.features.csv``.

        Args:
            out_dir (str): Output directory
            report (FeatureReport): Extracted features
            fmt (str): json or csv
            digits (int): Significant digits
            timestamps (bool): Include a generation time

        Returns:
            str: Path written
        """
        data = ReportService.stamp(report.to_dict(), timestamps)
        if fmt == 'csv':
            row = {key: value for key, value in data.items() if key not in ('params', 'flags')}
            row.update({f'param_{k}': v for k, v in report.params.items()})
            row['flags'] = ';'.join(report.flags)
            path = os.path.join(out_dir, f'{report.recording_id}.features.csv')
            return ReportService.write_csv(path, pd.DataFrame([row]), digits)

        path = os.path.join(out_dir, f'{report.recording_id}.features.json')
        return ReportService.write_json(path, data, digits)

    @staticmethod
    def vertex_frame(series):
        return pd.DataFrame(
            [(v.kind, v.frame, v.t_vertex, v.height) for v in series.vertices],
            columns=['kind', 'frame', 't_vertex', 'height'],
        )

    @staticmethod
    def write_vertices(out_dir, recording_id, series, digits=6):
        path = os.path.join(out_dir, f'{recording_id}.vertices.csv')
        return ReportService.write_csv(path, ReportService.vertex_frame(series), digits)

    @staticmethod
    def signal_frame(trace):
        """Per-frame S, filtered difference, S', mu and section label"""
        n = len(trace.signal)
        labels = [''] * n
        for section in trace.sections:
            label = section.polarity if section.is_platform else section.kind
            for frame in range(section.start_frame, section.end_frame + 1):
                if not labels[frame]:
                    labels[frame] = label

        # The filtered difference of frame i is S[i+1] - S[i]; the last frame has none
        delta = np.append(trace.delta_filtered, np.nan)
        return pd.DataFrame({
            'frame': np.arange(n),
            't': np.arange(n) / trace.fps,
            'signal': trace.signal,
            'delta_filtered': delta,
            'reconstructed': trace.reconstructed,
            'moving_mean': trace.moving_mean,
            'section': labels,
        })

    @staticmethod
    def write_signal(out_dir, recording_id, trace, digits=6):
        path = os.path.join(out_dir, f'{recording_id}.signal.csv')
        return ReportService.write_csv(path, ReportService.signal_frame(trace), digits)

    @staticmethod
    def write_index(out_dir, entries, timestamps=False, digits=6):
        """Write index.json listing every processed recording; call last"""
        ok = sum(1 for entry in entries if entry.get('status') == 'ok')
        data = {'recordings': entries, 'analyzed': ok, 'failed': len(entries) - ok}
        return ReportService.write_json(os.path.join(out_dir, 'index.json'),
                                        ReportService.stamp(data, timestamps), digits)

    @staticmethod
    def agreement_dict(report):
        """JSON-ready form of one AgreementReport"""
        welch = report.welch
        ba = report.bland_altman
        return {
            'feature': report.feature_name,
            'condition': report.condition_label,
            'n': report.n,
            'welch': {'t': welch.t, 'df': welch.df, 'p': welch.p, 'decision': welch.decision},
            'bland_altman': {'bias': ba.bias, 'loa_low': ba.loa_low, 'loa_high': ba.loa_high, 'sd': ba.sd},
            'agreement_fraction': {f'{t:g}': f for t, f in report.agreement_fraction.items()},
            'pearson_r': report.pearson_r,
        }

    @staticmethod
    def welch_table(reports):
        """Decision table: one row per feature, one column per condition"""
        rows = {}
        conditions = []
        for report in reports:
            if report.condition_label not in conditions:
                conditions.append(report.condition_label)
            rows.setdefault(report.feature_name, {})[report.condition_label] = report.welch.decision

        order = [name for name in FEATURE_NAMES + SUMMARY_NAMES if name in rows]
        table = pd.DataFrame([rows[name] for name in order], columns=conditions)
        table.insert(0, 'feature', order)
        return table.fillna('')

    @staticmethod
    def write_agreement(out_dir, reports, method_a, method_b, digits=6, timestamps=False):
        """
        Write agreement.json, welch_table.csv and per-feature plot points.

        Returns:
            list: Paths written
        """
        data = {
            'method_a': method_a,
            'method_b': method_b,
            'cells': [ReportService.agreement_dict(report) for report in reports],
        }
        paths = [
            ReportService.write_json(os.path.join(out_dir, 'agreement.json'),
                                     ReportService.stamp(data, timestamps), digits),
            ReportService.write_csv(os.path.join(out_dir, 'welch_table.csv'),
                                    ReportService.welch_table(reports), digits),
        ]

        by_feature = {}
        for report in reports:
            by_feature.setdefault(report.feature_name, []).append(report)

        for feature, cells in by_feature.items():
            safe = feature.replace('-', '_')
            points = []
            for report in cells:
                points.extend((report.condition_label, mean, diff) for mean, diff in report.bland_altman.points)
            paths.append(ReportService.write_csv(
                os.path.join(out_dir, f'bland_altman_{safe}.csv'),
                pd.DataFrame(points, columns=['condition', 'mean', 'diff']), digits))

        return paths

    @staticmethod
    def write_xy(out_dir, samples, method_a, method_b, digits=6):
        """Per-feature scatter data: method B on x, method A on y"""
        paths = []
        by_feature = {}
        for sample in samples:
            for a, b, rid in sample.pairs:
                by_feature.setdefault(sample.feature_name, []).append((sample.condition_label, rid, b, a))

        for feature, rows in by_feature.items():
            frame = pd.DataFrame(rows, columns=['condition', 'recording_id', method_b, method_a])
            paths.append(ReportService.write_csv(
                os.path.join(out_dir, f"xy_{feature.replace('-', '_')}.csv"), frame, digits))
        return paths

    @staticmethod
    def write_keypoint_eval(out_dir, curve, mpjpe, fmt='json', digits=6, timestamps=False):
        """Write the PCK curve and MPJPE as keypoints.json or pck.csv"""
        if fmt == 'csv':
            frame = pd.DataFrame(curve, columns=['threshold', 'pck'])
            frame['mpjpe'] = mpjpe
            return ReportService.write_csv(os.path.join(out_dir, 'pck.csv'), frame, digits)

        data = {'mpjpe': mpjpe, 'pck': [{'threshold': t, 'pck': f} for t, f in curve]}
        return ReportService.write_json(os.path.join(out_dir, 'keypoints.json'),
                                        ReportService.stamp(data, timestamps), digits)
