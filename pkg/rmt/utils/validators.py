"""Input validation utilities"""
import math
import re


def validate_avr_params(gamma_flatness, gamma_window, gamma_platform):
    """
    Validate adaptive vertex recognition thresholds.

    Args:
        gamma_flatness (float): Relative slope threshold, in (0, 1)
        gamma_window (float): Relative moving-mean window, in (0, 1]
        gamma_platform (float): Relative platform length, in (0, 1)

    Returns:
        tuple: (is_valid, error_message)
    """
    for name, value in (('gamma_flatness', gamma_flatness),
                        ('gamma_window', gamma_window),
                        ('gamma_platform', gamma_platform)):
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            return False, f"{name} must be a finite number"

    if not 0 < gamma_flatness < 1:
        return False, "gamma_flatness must lie in (0, 1)"

    if not 0 < gamma_window <= 1:
        return False, "gamma_window must lie in (0, 1]"

    if not 0 < gamma_platform < 1:
        return False, "gamma_platform must lie in (0, 1)"

    return True, None


def validate_keypoint_pair(value):
    """
    Parse and validate a ``a,b`` keypoint pair.

    Args:
        value (str or sequence): Comma separated ids or a 2-item sequence

    Returns:
        tuple: (pair_or_None, error_message)
    """
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(',')]
    else:
        parts = [str(part).strip() for part in value]

    if len(parts) != 2:
        return None, "Keypoint pair must name exactly two keypoints"

    if not all(parts):
        return None, "Keypoint ids must be nonempty"

    return (parts[0], parts[1]), None


def validate_recording_id(recording_id):
    """
    Validate that a recording id is usable as a file stem.

    Args:
        recording_id (str): The recording id

    Returns:
        bool: True if valid
    """
    if not recording_id:
        return False

    # Letters, digits, dot, dash and underscore; no path separators
    return bool(re.match(r'^[A-Za-z0-9][A-Za-z0-9._-]*$', recording_id))


def validate_synth_spec(data):
    """
    Validate the invariants of a synthetic recording spec.

    Args:
        data (dict): Spec fields (frequency_start, frequency_end, duration,
            fps, amplitude_decay, noise_sigma, waiting_period, hold_segments)

    Returns:
        tuple: (is_valid, error_message)
    """
    fps = data.get('fps')
    duration = data.get('duration')

    if fps is None or fps <= 0:
        return False, "fps must be positive"

    if duration is None or duration <= 0:
        return False, "duration must be positive"

    nyquist = fps / 2.0
    for key in ('frequency_start', 'frequency_end'):
        frequency = data.get(key)
        if frequency is None or frequency <= 0:
            return False, "frequency must be positive"
        if frequency >= nyquist:
            return False, f"frequency {frequency:g} Hz is at or above Nyquist ({nyquist:g} Hz)"

    decay = data.get('amplitude_decay', 1.0)
    if not 0 < decay <= 1:
        return False, "amplitude_decay must lie in (0, 1]"

    if data.get('noise_sigma', 0.0) < 0:
        return False, "noise_sigma must be non-negative"

    waiting = data.get('waiting_period', 0.0)
    if waiting < 0:
        return False, "waiting_period must be non-negative"

    holds = data.get('hold_segments', ())
    hold_total = 0.0
    for start, length in holds:
        if start < 0 or length <= 0:
            return False, "hold segments need start >= 0 and length > 0"
        hold_total += length

    if duration - 2 * waiting - hold_total <= 0:
        return False, "waiting periods and holds leave no time for tapping"

    if data.get('baseline_px', 0.0) < 0 or data.get('amplitude_px', 1.0) <= 0:
        return False, "baseline_px must be >= 0 and amplitude_px > 0"

    return True, None


def validate_thresholds(thresholds):
    """
    Validate a list of positive thresholds.

    Args:
        thresholds (iterable): Threshold values

    Returns:
        tuple: (is_valid, error_message)
    """
    values = list(thresholds)
    if not values:
        return False, "At least one threshold is required"

    for value in values:
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
            return False, f"Threshold {value!r} must be a positive number"

    return True, None


def validate_json_structure(data, max_depth=10, current_depth=0):
    """
    Validate JSON structure to prevent deeply nested documents.

    Args:
        data: JSON data to validate
        max_depth (int): Maximum nesting depth allowed
        current_depth (int): Current recursion depth

    Returns:
        bool: True if valid depth
    """
    if current_depth > max_depth:
        return False

    if isinstance(data, dict):
        for value in data.values():
            if not validate_json_structure(value, max_depth, current_depth + 1):
                return False
    elif isinstance(data, list):
        for item in data:
            if not validate_json_structure(item, max_depth, current_depth + 1):
                return False

    return True


def validate_feature_thresholds(thresholds, feature_names):
    """
    Validate a {feature name: agreement threshold} mapping.

    Args:
        thresholds (dict): Threshold per feature
        feature_names (iterable): Allowed feature names

    Returns:
        tuple: (is_valid, error_message)
    """
    if not isinstance(thresholds, dict):
        return False, "Thresholds must map feature names to numbers"

    allowed = set(feature_names)
    for name, value in thresholds.items():
        if name not in allowed:
            return False, f"Unknown feature '{name}' in thresholds"
        if isinstance(value, bool):
            return False, f"Threshold for {name} must be a number"
        is_valid, error = validate_thresholds([value])
        if not is_valid:
            return False, f"{name}: {error}"

    return True, None
