"""Ingest service for trajectory and reference files"""
import io
import json
import logging
import os
import re

import numpy as np
import pandas as pd

from rmt.models.features import FEATURE_NAMES
from rmt.models.trajectory import CONDITION_LABELS, KeypointTrack, ReferenceMeasurement, TrajectorySet
from rmt.utils.errors import ParseError, ValidationError
from rmt.utils.validators import validate_json_structure

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('frame', 'keypoint', 'x', 'y')
OPTIONAL_CSV_COLUMNS = ('t',)
FORMATS = ('csv', 'json')

_HEADER_FPS = re.compile(r'\bfps=(\S+)')
_HEADER_RECORDING = re.compile(r'\brecording=("(?:[^"\\]|\\.)*"|\S+)')
_PANDAS_LINE = re.compile(r'line (\d+)')


def _decode(content):
    if isinstance(content, bytes):
        try:
            return content.decode('utf-8-sig')
        except UnicodeDecodeError as e:
            raise ParseError(f'content is not UTF-8: {e}')
    return content


def _format_float(value):
    # Shortest repr that round-trips exactly
    return repr(float(value))


def _format_recording(recording_id):
    """Header token for a recording id; quoted as a JSON string when bare text would not survive"""
    if recording_id and re.fullmatch(r'[^\s"]+', recording_id):
        return recording_id
    return json.dumps(recording_id)


def _parse_recording(token):
    if token.startswith('"'):
        try:
            return json.loads(token)
        except json.JSONDecodeError:
            raise ParseError(f'malformed recording id {token}', line=1)
    return token


def _reject_constant(name):
    raise ParseError(f"malformed JSON: '{name}' is not a finite number")


def _normalize_condition(label):
    if label is None:
        return None
    text = str(label).strip().replace(' ', '')
    for known in CONDITION_LABELS:
        if text.lower() == known.lower():
            return known
    raise ParseError(f"unknown condition '{label}' (expected one of {', '.join(CONDITION_LABELS)})")


class IngestService:
    """Service for reading and writing trajectories and reference measurements"""

    @staticmethod
    def parse_trajectory(content, fmt, fps=None, recording_id=None):
        """
        Parse trajectory content into a validated TrajectorySet.

        Args:
            content (bytes or str): File content
            fmt (str): 'csv' or 'json'
            fps (float, optional): Frame rate when the file does not declare one;
                must agree with the file's declaration if both are present
            recording_id (str, optional): Fallback recording id

        Returns:
            TrajectorySet: Parsed trajectories (gaps not yet filled)
        """
        if fmt not in FORMATS:
            raise ParseError(f"unsupported trajectory format '{fmt}'")

        text = _decode(content)
        if fmt == 'csv':
            return IngestService._parse_trajectory_csv(text, fps, recording_id)
        return IngestService._parse_trajectory_json(text, fps, recording_id)

    @staticmethod
    def _parse_trajectory_csv(text, fps, recording_id):
        lines = text.splitlines()
        offset = 0
        header_fps = None

        # Optional "# fps=<real> recording=<id>" comment line
        if lines and lines[0].lstrip().startswith('#'):
            comment = lines[0]
            match = _HEADER_FPS.search(comment)
            if match:
                try:
                    header_fps = float(match.group(1))
                except ValueError:
                    raise ParseError(f"inconsistent fps header: '{match.group(1)}' is not a number", line=1)
            match = _HEADER_RECORDING.search(comment)
            if match:
                recording_id = _parse_recording(match.group(1))
            lines = lines[1:]
            offset = 1

        if header_fps is not None and fps is not None and not np.isclose(header_fps, fps):
            raise ParseError(f'inconsistent fps header: file declares {header_fps:g}, caller gave {fps:g}', line=1)
        fps = header_fps if header_fps is not None else fps
        if fps is None:
            raise ParseError('missing fps: add a "# fps=<real>" comment line', line=1)
        if not np.isfinite(fps) or fps <= 0:
            raise ParseError(f'inconsistent fps header: fps must be positive, got {fps:g}', line=1)

        body = '\n'.join(lines)
        if not body.strip():
            raise ParseError('zero keypoints: no header or data rows', line=offset + 1)

        try:
            df = pd.read_csv(io.StringIO(body), dtype=str, keep_default_na=False,
                             skipinitialspace=True, skip_blank_lines=True)
        except pd.errors.ParserError as e:
            match = _PANDAS_LINE.search(str(e))
            line = int(match.group(1)) + offset if match else None
            raise ParseError(f'malformed row: {e}', line=line)
        except pd.errors.EmptyDataError:
            raise ParseError('zero keypoints: empty file', line=offset + 1)

        df.columns = [str(c).strip() for c in df.columns]
        missing = [c for c in CSV_COLUMNS if c not in df.columns]
        unknown = [c for c in df.columns if c not in CSV_COLUMNS + OPTIONAL_CSV_COLUMNS]
        if missing or unknown:
            raise ParseError(
                f"header must be {','.join(CSV_COLUMNS)}[,t]; "
                f"missing {missing or 'none'}, unexpected {unknown or 'none'}",
                line=offset + 1,
            )
        if df.empty:
            raise ParseError('zero keypoints: no data rows', line=offset + 2)

        # Physical line of each data row: comment + header precede the first row.
        # Blank lines are skipped by pandas, so map through the surviving lines.
        data_lines = [i + 1 + offset for i, line in enumerate(lines) if line.strip()][1:]
        row_line = np.array(data_lines[:len(df)], dtype=int)

        frames = pd.to_numeric(df['frame'], errors='coerce')
        bad = frames.isna() | (frames < 0) | (frames != np.floor(frames))
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            raise ParseError(f"malformed row: frame '{df['frame'].iloc[i]}' is not a non-negative integer",
                             line=int(row_line[i]))
        frames = frames.astype(np.int64).to_numpy()

        keypoints = df['keypoint'].str.strip()
        empty_ids = (keypoints == '').to_numpy()
        if empty_ids.any():
            i = int(np.flatnonzero(empty_ids)[0])
            raise ParseError('malformed row: empty keypoint id', line=int(row_line[i]))

        xs_text = df['x'].str.strip()
        ys_text = df['y'].str.strip()
        x_empty = (xs_text == '').to_numpy()
        y_empty = (ys_text == '').to_numpy()
        half_empty = x_empty != y_empty
        if half_empty.any():
            i = int(np.flatnonzero(half_empty)[0])
            raise ParseError('malformed row: x and y must both be present or both empty', line=int(row_line[i]))

        present = ~x_empty
        for column, values in (('x', xs_text), ('y', ys_text)):
            numeric = pd.to_numeric(values.where(present, '0'), errors='coerce').to_numpy(dtype=float)
            bad = present & ~np.isfinite(numeric)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise ParseError(f"malformed row: {column} '{values.iloc[i]}' is not a finite number",
                                 line=int(row_line[i]))

        xs = np.full(len(df), np.nan)
        ys = np.full(len(df), np.nan)
        xs[present] = np.array(xs_text[present].tolist(), dtype=float)
        ys[present] = np.array(ys_text[present].tolist(), dtype=float)

        duplicated = pd.DataFrame({'frame': frames, 'keypoint': keypoints}).duplicated().to_numpy()
        if duplicated.any():
            i = int(np.flatnonzero(duplicated)[0])
            raise ParseError(f"duplicate (frame, keypoint) = ({frames[i]}, {keypoints.iloc[i]})",
                             line=int(row_line[i]))

        if 't' in df.columns:
            times = pd.to_numeric(df['t'].str.strip(), errors='coerce').to_numpy(dtype=float)
            off = ~np.isfinite(times) | (np.abs(times - frames / fps) > 0.5 / fps)
            if off.any():
                i = int(np.flatnonzero(off)[0])
                raise ParseError(f"timestamp '{df['t'].iloc[i]}' disagrees with frame {frames[i]} at {fps:g} fps",
                                 line=int(row_line[i]))

        n_frames = int(frames.max()) + 1
        tracks = []
        for keypoint_id in pd.unique(keypoints):
            rows = (keypoints == keypoint_id).to_numpy()
            samples = np.full((n_frames, 2), np.nan)
            samples[frames[rows], 0] = xs[rows]
            samples[frames[rows], 1] = ys[rows]
            tracks.append(KeypointTrack(str(keypoint_id), samples))

        traj = TrajectorySet(recording_id or 'recording', fps, tuple(tracks), n_frames)
        logger.debug('Parsed CSV trajectory %s: %d keypoints, %d frames', traj.recording_id,
                     len(tracks), n_frames)
        return traj

    @staticmethod
    def _parse_trajectory_json(text, fps, recording_id):
        try:
            data = json.loads(text, parse_constant=_reject_constant)
        except json.JSONDecodeError as e:
            raise ParseError(f'malformed JSON: {e.msg}', line=e.lineno)

        if not isinstance(data, dict) or not validate_json_structure(data, max_depth=6):
            raise ParseError('trajectory JSON must be an object {recording_id, fps, keypoints}')

        file_fps = data.get('fps')
        if file_fps is not None:
            if not isinstance(file_fps, (int, float)) or isinstance(file_fps, bool) or file_fps <= 0:
                raise ParseError(f'inconsistent fps header: {file_fps!r} is not a positive number')
            if fps is not None and not np.isclose(file_fps, fps):
                raise ParseError(f'inconsistent fps header: file declares {file_fps:g}, caller gave {fps:g}')
            fps = float(file_fps)
        if fps is None:
            raise ParseError('missing fps')

        entries = data.get('keypoints')
        if not isinstance(entries, list) or not entries:
            raise ParseError('zero keypoints')

        tracks = []
        for index, entry in enumerate(entries):
            if not isinstance(entry, dict) or not isinstance(entry.get('id'), str) or not entry['id']:
                raise ParseError(f'keypoints[{index}] needs a nonempty string id')
            xy = entry.get('xy')
            if not isinstance(xy, list):
                raise ParseError(f"keypoint '{entry['id']}': xy must be a list")

            samples = np.full((len(xy), 2), np.nan)
            for frame, point in enumerate(xy):
                if point is None:
                    continue
                if (not isinstance(point, list) or len(point) != 2
                        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in point)):
                    raise ParseError(f"keypoint '{entry['id']}' frame {frame}: expected [x, y] or null")
                samples[frame] = point
            try:
                tracks.append(KeypointTrack(entry['id'], samples))
            except ValidationError as e:
                raise ParseError(str(e))

        try:
            traj = TrajectorySet(data.get('recording_id') or recording_id or 'recording', fps, tuple(tracks))
        except ValidationError as e:
            raise ParseError(str(e))

        logger.debug('Parsed JSON trajectory %s: %d keypoints, %d frames', traj.recording_id,
                     len(tracks), traj.duration_frames)
        return traj

    @staticmethod
    def serialize_trajectory(traj, fmt):
        """
        Serialize a TrajectorySet in the CSV or JSON trajectory format.

        Args:
            traj (TrajectorySet): Trajectories to write
            fmt (str): 'csv' or 'json'

        Returns:
            str: Serialized content
        """
        if fmt == 'csv':
            # Every (frame, keypoint) gets a row, missing ones with empty x,y, so the
            # frame count and keypoint order survive a round trip
            rows = []
            for frame in range(traj.duration_frames):
                for track in traj.keypoints:
                    if track.missing_mask[frame] and not track.filled:
                        rows.append((frame, track.keypoint_id, '', ''))
                        continue
                    x, y = track.samples[frame]
                    rows.append((frame, track.keypoint_id, _format_float(x), _format_float(y)))
            df = pd.DataFrame(rows, columns=list(CSV_COLUMNS))
            header = f'# fps={_format_float(traj.fps)} recording={_format_recording(traj.recording_id)}\n'
            return header + df.to_csv(index=False, lineterminator='\n')

        if fmt == 'json':
            keypoints = []
            for track in traj.keypoints:
                xy = [None if np.isnan(x) else [float(x), float(y)] for x, y in track.samples]
                keypoints.append({'id': track.keypoint_id, 'xy': xy})
            document = {'recording_id': traj.recording_id, 'fps': traj.fps, 'keypoints': keypoints}
            return json.dumps(document, separators=(',', ':')) + '\n'

        raise ParseError(f"unsupported trajectory format '{fmt}'")

    @staticmethod
    def load_trajectory(path, fps=None):
        """
        Read a trajectory file; the format comes from the extension.

        Args:
            path (str): Path to a .csv or .json file
            fps (float, optional): Frame rate for files that do not declare one

        Returns:
            TrajectorySet: Parsed trajectories
        """
        ext = os.path.splitext(path)[1].lower().lstrip('.')
        if ext not in FORMATS:
            raise ParseError(f"unsupported trajectory extension '.{ext}' ({path})")

        stem = os.path.basename(path).split('.')[0]
        with open(path, 'rb') as f:
            content = f.read()
        return IngestService.parse_trajectory(content, ext, fps=fps, recording_id=stem)

    @staticmethod
    def fill_missing(track):
        """
        Fill gaps by linear interpolation between the nearest observed samples.

        Leading and trailing gaps take the nearest observed value. The
        missing mask is kept for audit.

        Args:
            track (KeypointTrack): Track possibly containing gaps

        Returns:
            KeypointTrack: Track with every sample finite
        """
        observed = ~np.isnan(track.samples).any(axis=1)
        if not observed.any():
            raise ValidationError(f"keypoint '{track.keypoint_id}': all samples missing")
        if observed.all():
            if track.filled:
                return track
            return KeypointTrack(track.keypoint_id, track.samples, track.missing_mask, filled=True)

        frames = np.arange(track.n_frames)
        known = np.flatnonzero(observed)
        samples = np.array(track.samples, copy=True)
        for axis in range(2):
            # np.interp clamps outside [known[0], known[-1]] to the end values
            samples[~observed, axis] = np.interp(frames[~observed], known, track.samples[known, axis])

        return KeypointTrack(track.keypoint_id, samples, track.missing_mask, filled=True)

    @staticmethod
    def parse_reference(content):
        """
        Parse a reference-measurement JSON document.

        Args:
            content (bytes or str): ``[{recording_id, method_name, condition, features}]``

        Returns:
            list: ReferenceMeasurement per (recording, method) pair, in document order
        """
        text = _decode(content)
        try:
            data = json.loads(text, parse_constant=_reject_constant)
        except json.JSONDecodeError as e:
            raise ParseError(f'malformed JSON: {e.msg}', line=e.lineno)

        if not isinstance(data, list) or not validate_json_structure(data, max_depth=4):
            raise ParseError('reference document must be a list of measurements')

        merged = {}
        for index, item in enumerate(data):
            if not isinstance(item, dict):
                raise ParseError(f'measurement [{index}] must be an object')

            recording_id = item.get('recording_id')
            if not isinstance(recording_id, str) or not recording_id:
                raise ParseError(f'measurement [{index}] is missing recording_id')

            features = item.get('features', {})
            if not isinstance(features, dict):
                raise ParseError(f'measurement [{index}]: features must be an object')
            unknown = sorted(name for name in features if name not in FEATURE_NAMES)
            if unknown:
                raise ParseError(f"measurement [{index}]: unknown feature name(s): {', '.join(unknown)}")
            for name, value in features.items():
                if not isinstance(value, (int, float)) or isinstance(value, bool) or not np.isfinite(value):
                    raise ParseError(f'measurement [{index}]: {name} must be a finite number')

            method = str(item.get('method_name') or 'reference')
            condition = _normalize_condition(item.get('condition'))
            key = (recording_id, method)

            if key in merged:
                entry = merged[key]
                if condition is not None and entry['condition'] not in (None, condition):
                    raise ParseError(f'measurement [{index}]: conflicting condition for {recording_id}/{method}')
                for name, value in features.items():
                    if name in entry['features'] and entry['features'][name] != value:
                        raise ParseError(f'measurement [{index}]: conflicting {name} for {recording_id}/{method}')
                entry['features'].update(features)
                entry['condition'] = entry['condition'] or condition
            else:
                merged[key] = {'features': dict(features), 'condition': condition}

        return [
            ReferenceMeasurement(recording_id, method, entry['features'], entry['condition'])
            for (recording_id, method), entry in merged.items()
        ]

    @staticmethod
    def serialize_reference(measurements):
        """Inverse of parse_reference"""
        document = [{
            'recording_id': m.recording_id,
            'method_name': m.method_name,
            'condition': m.condition_label,
            'features': {name: m.feature_values[name] for name in FEATURE_NAMES if name in m.feature_values},
        } for m in measurements]
        return json.dumps(document, indent=2) + '\n'
