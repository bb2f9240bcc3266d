"""Analysis service: end-to-end pipeline used by the CLI and the API"""
import glob
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from rmt.models.agreement import KeypointPredictionSet
from rmt.models.features import SUMMARY_NAMES
from rmt.models.trajectory import ReferenceMeasurement
from rmt.services.feature_service import FeatureService
from rmt.services.ingest_service import IngestService
from rmt.services.report_service import ReportService
from rmt.services.signal_service import SignalService
from rmt.services.stats_service import StatsService
from rmt.services.vertex_service import VertexService
from rmt.utils.errors import InputError, RmtError, ShapeMismatchError, ValidationError

logger = logging.getLogger(__name__)

TRAJECTORY_PATTERNS = ('*.csv', '*.json')


@dataclass(frozen=True)
class AnalysisResult:
    """Features of one recording plus the recognition trace behind them"""

    recording_id: str
    report: object  # FeatureReport
    trace: object  # SignalTrace


def _error_code(errors):
    # Input errors outrank analysis errors
    codes = {e.exit_code for e in errors if e is not None}
    if 1 in codes:
        return 1
    return max(codes, default=0)


class AnalysisService:
    """Service wiring ingest, signal, vertex and feature stages together"""

    @staticmethod
    def analyze_trajectory(traj, keypoints, params, normalize=True, mismatch_tolerance=0.1):
        """
        Fill gaps, build S, recognize vertices and extract features.

        Args:
            traj (TrajectorySet): Parsed trajectories
            keypoints (tuple): (a, b) keypoint ids
            params (AvrParams): Recognition parameters
            normalize (bool): Apply max-aperture normalization
            mismatch_tolerance (float): IIV interval mismatch tolerance

        Returns:
            AnalysisResult: Report and trace
        """
        a, b = keypoints
        tracks = [traj.track(a), traj.track(b)]
        for track in tracks:
            if track.has_missing:
                logger.debug('%s: filling %d missing %s sample(s)', traj.recording_id,
                             int(track.missing_mask.sum()), track.keypoint_id)
        filled = traj.replace_tracks([IngestService.fill_missing(track) for track in tracks])
        signal = SignalService.prepare_signal(filled, a, b, normalize=normalize)
        trace = VertexService.trace(signal, params)
        geometry = FeatureService.tap_geometry(trace.vertices)
        report = FeatureService.extract_features(
            geometry,
            recording_id=traj.recording_id,
            params=params.to_dict(),
            mismatch_tolerance=mismatch_tolerance,
        )
        return AnalysisResult(traj.recording_id, report, trace)

    @staticmethod
    def analyze_file(path, run_config):
        """
        Analyze one trajectory file.

        Returns:
            tuple: (AnalysisResult, None) or (None, RmtError)
        """
        try:
            traj = IngestService.load_trajectory(path)
            result = AnalysisService.analyze_trajectory(
                traj, run_config.keypoints, run_config.params, run_config.normalize
            )
            return result, None
        except RmtError as e:
            logger.warning('%s: %s', path, e)
            return None, e
        except OSError as e:
            logger.warning('%s: %s', path, e)
            return None, InputError(f'cannot read {path}: {e.strerror or e}')

    @staticmethod
    def collect_inputs(paths):
        """
        Expand directories into their trajectory files.

        Args:
            paths (iterable): Files and/or directories

        Returns:
            list: Sorted, de-duplicated file paths
        """
        files = []
        for path in paths:
            if os.path.isdir(path):
                for pattern in TRAJECTORY_PATTERNS:
                    files.extend(glob.glob(os.path.join(path, pattern)))
            elif os.path.isfile(path):
                files.append(path)
            else:
                raise ValidationError(f'input path does not exist: {path}')

        files = sorted(set(files))
        if not files:
            raise ValidationError('no trajectory files found')
        return files

    @staticmethod
    def analyze_batch(paths, run_config):
        """
        Analyze files, in parallel when ``run_config.jobs`` > 1.

        Returns:
            list: (path, AnalysisResult or None, RmtError or None) in input order
        """
        def _one(path):
            return (path,) + AnalysisService.analyze_file(path, run_config)

        if run_config.jobs > 1 and len(paths) > 1:
            with ThreadPoolExecutor(max_workers=run_config.jobs) as pool:
                return list(pool.map(_one, paths))
        return [_one(path) for path in paths]

    @staticmethod
    def write_result(result, run_config):
        """Write the feature report, vertex list and optional signal trace of one recording"""
        out = run_config.out_dir
        digits = run_config.significant_digits
        paths = [
            ReportService.write_feature_report(out, result.report, run_config.report_format,
                                               digits, run_config.timestamps),
            ReportService.write_vertices(out, result.recording_id, result.trace.vertices, digits),
        ]
        if run_config.emit_signal:
            paths.append(ReportService.write_signal(out, result.recording_id, result.trace, digits))
        return paths

    @staticmethod
    def run_analyze(run_config):
        """
        Analyze every input, write per-recording files, then index.json.

        Returns:
            tuple: (list of (path, result, error), exit code)
        """
        files = AnalysisService.collect_inputs(run_config.input_paths)
        outcomes = AnalysisService.analyze_batch(files, run_config)

        entries = []
        for path, result, error in outcomes:
            entry = {'input': os.path.basename(path)}
            if result is not None:
                written = AnalysisService.write_result(result, run_config)
                entry.update({'recording_id': result.recording_id, 'status': 'ok',
                              'outputs': [os.path.basename(p) for p in written]})
            else:
                entry.update({'status': 'error', 'exit_code': error.exit_code, 'error': str(error)})
            entries.append(entry)

        ReportService.write_index(run_config.out_dir, entries, run_config.timestamps,
                                  run_config.significant_digits)
        return outcomes, _error_code(error for _, _, error in outcomes)

    @staticmethod
    def measurements_from_results(results, method_name):
        """ReferenceMeasurement per analyzed recording, labelled ``method_name``"""
        return [
            ReferenceMeasurement(r.recording_id, method_name, r.report.feature_values())
            for r in results
        ]

    @staticmethod
    def compare(measurements_a, measurements_b, thresholds=None, alpha=0.05, multiplier=1.96, split_hz=4.0):
        """
        Agreement tables between two methods.

        Every feature is compared, then the speed, amplitude and rhythm
        summary measures. Cells with fewer than two pairs are skipped.

        Args:
            measurements_a (list): Method A measurements
            measurements_b (list): Method B (reference) measurements
            thresholds (dict): Feature or summary name -> agreement threshold(s)
            alpha (float): Welch significance level
            multiplier (float): Bland-Altman multiplier
            split_hz (float): M-TF boundary of the maximal-speed split

        Returns:
            tuple: (list of AgreementReport, list of PairedFeatureSample)
        """
        thresholds = thresholds or {}
        samples = StatsService.paired_samples(measurements_a, measurements_b, split_hz=split_hz)
        samples += StatsService.paired_samples(measurements_a, measurements_b, SUMMARY_NAMES, split_hz,
                                               values=lambda m: FeatureService.summary_values(m.feature_values))

        reports = []
        for sample in samples:
            if len(sample) < 2:
                logger.warning('Skipping %s/%s: only %d pair(s)', sample.feature_name,
                               sample.condition_label, len(sample))
                continue
            cell_thresholds = thresholds.get(sample.feature_name, ())
            if isinstance(cell_thresholds, (int, float)):
                cell_thresholds = (cell_thresholds,)
            reports.append(StatsService.compare_methods(sample, cell_thresholds, alpha, multiplier))
        return reports, samples

    @staticmethod
    def group_by_method(measurements):
        """Split reference measurements by method name, keeping first-seen order"""
        groups = {}
        for m in measurements:
            groups.setdefault(m.method_name, []).append(m)
        return groups

    @staticmethod
    def prediction_set(predicted, truth):
        """
        Pair two trajectory sets keypoint by keypoint.

        Args:
            predicted (TrajectorySet): Tracker output
            truth (TrajectorySet): Ground truth

        Returns:
            KeypointPredictionSet: Positions shaped (J, N, 2)
        """
        if set(predicted.keypoint_ids) != set(truth.keypoint_ids):
            raise ShapeMismatchError(
                f"keypoints differ: {', '.join(predicted.keypoint_ids)} vs {', '.join(truth.keypoint_ids)}"
            )
        if predicted.duration_frames != truth.duration_frames:
            raise ShapeMismatchError(
                f'frame counts differ: {predicted.duration_frames} vs {truth.duration_frames}'
            )

        ids = truth.keypoint_ids
        p = np.stack([predicted.track(k).samples for k in ids])
        y = np.stack([truth.track(k).samples for k in ids])
        if np.isnan(p).any() or np.isnan(y).any():
            raise ValidationError('keypoint evaluation needs complete tracks on both sides')
        return KeypointPredictionSet(p, y)

    @staticmethod
    def evaluate_keypoints(predicted, truth, thresholds):
        """
        PCK curve and MPJPE of a predicted trajectory against the truth.

        Returns:
            tuple: (list of (threshold, pck), mpjpe)
        """
        k = AnalysisService.prediction_set(predicted, truth)
        return StatsService.pck_curve(k, thresholds), StatsService.mpjpe(k)
