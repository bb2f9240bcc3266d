"""Exception hierarchy shared by services, the CLI and the API"""


class RmtError(Exception):
    """Base class for every error raised by the analysis pipeline"""

    exit_code = 1
    http_status = 400


class InputError(RmtError):
    """Input could not be read or does not satisfy its contract (exit code 1)"""


class ParseError(InputError):
    """Malformed trajectory or reference content"""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(InputError):
    """Parameters or specs outside their allowed ranges"""


class ShapeMismatchError(InputError):
    """Predicted and true keypoint sets do not have the same shape"""


class EmptyIntersectionError(InputError):
    """No recording id is shared by the two sides of a comparison"""


class AnalysisError(RmtError):
    """Input was valid but the recording cannot be analyzed (exit code 2)"""

    exit_code = 2
    http_status = 422


class DegenerateSignalError(AnalysisError):
    """The distance signal has zero range"""

    def __init__(self, message='flat recording'):
        super().__init__(message)


class UnanalyzableRecordingError(AnalysisError):
    """Vertex recognition found too few platforms or vertices"""


class InsufficientVerticesError(AnalysisError):
    """Too few peaks or troughs to compute tapping features"""


class CorruptVertexSeriesError(AnalysisError):
    """Vertex times or heights violate the series invariants"""
