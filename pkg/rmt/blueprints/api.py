"""API blueprint exposing analysis, keypoint evaluation and method comparison"""
import json

from flask import Blueprint, current_app, jsonify, request

from rmt.extensions import limiter
from rmt.models.agreement import KeypointPredictionSet
from rmt.models.features import FEATURE_NAMES, SUMMARY_NAMES
from rmt.models.vertex import AvrParams
from rmt.services.analysis_service import AnalysisService
from rmt.services.ingest_service import IngestService
from rmt.services.report_service import ReportService, round_significant
from rmt.services.stats_service import StatsService
from rmt.utils.errors import RmtError, ValidationError
from rmt.utils.validators import validate_feature_thresholds, validate_json_structure, validate_keypoint_pair

bp = Blueprint('api', __name__)


def _json_body():
    """Decoded JSON object of the request, or a ValidationError"""
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise ValidationError('Request body must be a JSON object')
    if not validate_json_structure(data, max_depth=8):
        raise ValidationError('Request body is nested too deeply')
    return data


def _error(e):
    current_app.logger.info(f"API request rejected: {e}")
    return jsonify({'success': False, 'error': str(e)}), e.http_status


def _params(overrides):
    values = {
        'gamma_flatness': current_app.config['GAMMA_FLATNESS'],
        'gamma_window': current_app.config['GAMMA_WINDOW'],
        'gamma_platform': current_app.config['GAMMA_PLATFORM'],
        'subframe_refinement': current_app.config['SUBFRAME_REFINEMENT'],
    }
    if overrides:
        if not isinstance(overrides, dict):
            raise ValidationError('params must be an object')
        unknown = sorted(set(overrides) - set(values))
        if unknown:
            raise ValidationError(f"Unknown parameter(s): {', '.join(unknown)}")
        values.update(overrides)
    return AvrParams(**values)


@bp.route('/health', methods=['GET'])
def health():
    """Liveness probe"""
    return jsonify({'success': True, 'status': 'ok'})


@bp.route('/analyze', methods=['POST'])
@limiter.limit("30 per minute")
def analyze():
    """
    Extract tapping features from one trajectory.

    Body: ``{trajectory, keypoint_pair, params, normalize}`` where
    ``trajectory`` uses the trajectory JSON format.
    """
    try:
        data = _json_body()
        if 'trajectory' not in data:
            raise ValidationError('trajectory is required')

        pair, error = validate_keypoint_pair(data.get('keypoint_pair', current_app.config['KEYPOINTS']))
        if error:
            raise ValidationError(error)

        traj = IngestService.parse_trajectory(json.dumps(data['trajectory']), 'json')
        result = AnalysisService.analyze_trajectory(
            traj, pair, _params(data.get('params')),
            normalize=bool(data.get('normalize', current_app.config['NORMALIZE'])),
            mismatch_tolerance=current_app.config['IIV_MISMATCH_TOLERANCE'],
        )
    except RmtError as e:
        return _error(e)

    digits = current_app.config['SIGNIFICANT_DIGITS']
    vertices = ReportService.vertex_frame(result.trace.vertices).to_dict(orient='records')
    return jsonify({
        'success': True,
        'report': round_significant(result.report.to_dict(), digits),
        'vertices': round_significant(vertices, digits),
    })


@bp.route('/eval-keypoints', methods=['POST'])
@limiter.limit("30 per minute")
def eval_keypoints():
    """PCK curve and MPJPE of ``predicted`` against ``truth`` (both J x N x 2)"""
    try:
        data = _json_body()
        try:
            k = KeypointPredictionSet(data.get('predicted'), data.get('truth'))
        except (TypeError, ValueError):
            raise ValidationError('predicted and truth must be numeric J x N x 2 arrays')

        thresholds = data.get('thresholds', list(current_app.config['PCK_THRESHOLDS']))
        curve = StatsService.pck_curve(k, thresholds)
        mpjpe = StatsService.mpjpe(k)
    except RmtError as e:
        return _error(e)

    digits = current_app.config['SIGNIFICANT_DIGITS']
    return jsonify({
        'success': True,
        'mpjpe': round_significant(mpjpe, digits),
        'pck': round_significant([{'threshold': t, 'pck': f} for t, f in curve], digits),
    })


@bp.route('/compare', methods=['POST'])
@limiter.limit("30 per minute")
def compare():
    """
    Agreement tables between two sets of measurements.

    Body: ``{measurements_a, measurements_b, thresholds}``; the measurement
    lists use the reference JSON format.
    """
    try:
        data = _json_body()
        measurements_a = IngestService.parse_reference(json.dumps(data.get('measurements_a', [])))
        measurements_b = IngestService.parse_reference(json.dumps(data.get('measurements_b', [])))

        overrides = data.get('thresholds') or {}
        is_valid, error = validate_feature_thresholds(overrides, FEATURE_NAMES + SUMMARY_NAMES)
        if not is_valid:
            raise ValidationError(error)
        thresholds = dict(current_app.config['AGREEMENT_THRESHOLDS'])
        thresholds.update(overrides)
        reports, _ = AnalysisService.compare(
            measurements_a, measurements_b, thresholds,
            alpha=current_app.config['WELCH_ALPHA'],
            multiplier=current_app.config['BLAND_ALTMAN_MULTIPLIER'],
            split_hz=current_app.config['MAXIMAL_SPLIT_HZ'],
        )
    except RmtError as e:
        return _error(e)

    cells = [ReportService.agreement_dict(report) for report in reports]
    return jsonify({
        'success': True,
        'cells': round_significant(cells, current_app.config['SIGNIFICANT_DIGITS']),
    })
