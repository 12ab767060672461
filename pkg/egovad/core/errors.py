"""
Exception hierarchy shared by every egovad module.

Each exception carries the process exit code the CLI maps it to.
"""
from typing import Optional


class EgovadError(Exception):
    """Base class for toolkit errors"""

    exit_code: int = 1


class UsageError(EgovadError):
    """Bad command-line usage or argument value"""

    exit_code = 2


class ConfigError(UsageError):
    """Inconsistent model, training or synthesis configuration"""


class ValidationFailed(EgovadError):
    """A manifest failed validation; the report is attached"""

    exit_code = 3

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ShapeError(EgovadError, ValueError):
    """Array shapes disagree with each other or with the configuration"""

    exit_code = 3


class FeatureInvariantError(EgovadError, ValueError):
    """A feature sequence violates T >= 1, D >= 1 or finiteness"""

    exit_code = 3


class ManifestFormatError(EgovadError):
    """A manifest line is not a valid entry record"""

    exit_code = 3

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.line_number = line_number


class DatasetBuildError(EgovadError):
    """Sources cannot be assembled into a valid manifest"""

    exit_code = 3


class EvaluationError(EgovadError):
    """Scores and manifest cannot be evaluated together"""

    exit_code = 3


class UndefinedMetricError(EvaluationError, ValueError):
    """ROC-AUC requested with only one label class present"""


class FeatureDecodeError(EgovadError):
    """A .ftbf file cannot be decoded"""

    exit_code = 4


class BadMagicError(FeatureDecodeError):
    pass


class UnsupportedVersionError(FeatureDecodeError):
    pass


class TruncatedPayloadError(FeatureDecodeError):
    pass


class PayloadSizeError(FeatureDecodeError):
    """Payload longer than the header declares"""


class NonFiniteValueError(FeatureDecodeError):
    pass


class CheckpointError(EgovadError):
    """A checkpoint container is malformed or incompatible"""

    exit_code = 4
