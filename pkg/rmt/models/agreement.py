"""Method agreement and keypoint accuracy models"""
from dataclasses import dataclass, field

import numpy as np

from rmt.utils.errors import ShapeMismatchError, ValidationError

ACCEPT = 'accept'
REJECT = 'reject'


@dataclass(frozen=True)
class PairedFeatureSample:
    """Paired values of one feature from two methods, one pair per recording"""

    pairs: tuple
    feature_name: str
    condition_label: str = None

    def __post_init__(self):
        pairs = tuple((float(a), float(b), str(rid)) for a, b, rid in self.pairs)
        if not pairs:
            raise ValidationError(f'{self.feature_name}: paired sample is empty')
        if not all(np.isfinite(a) and np.isfinite(b) for a, b, _ in pairs):
            raise ValidationError(f'{self.feature_name}: paired sample has non-finite values')
        object.__setattr__(self, 'pairs', pairs)

    @property
    def a(self):
        return np.array([p[0] for p in self.pairs])

    @property
    def b(self):
        return np.array([p[1] for p in self.pairs])

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class KeypointPredictionSet:
    """Predicted P and true Y positions, both shaped (J, N, 2)"""

    predicted: np.ndarray
    truth: np.ndarray

    def __post_init__(self):
        predicted = np.array(self.predicted, dtype=float, copy=True)
        truth = np.array(self.truth, dtype=float, copy=True)
        if predicted.shape != truth.shape:
            raise ShapeMismatchError(f'predicted {predicted.shape} vs truth {truth.shape}')
        if predicted.ndim != 3 or predicted.shape[2] != 2:
            raise ShapeMismatchError(f'expected (J, N, 2) positions, got {predicted.shape}')
        if predicted.shape[0] < 1 or predicted.shape[1] < 1:
            raise ShapeMismatchError('need at least one keypoint and one frame')
        predicted.flags.writeable = False
        truth.flags.writeable = False
        object.__setattr__(self, 'predicted', predicted)
        object.__setattr__(self, 'truth', truth)

    @property
    def J(self):
        return self.predicted.shape[0]

    @property
    def N(self):
        return self.predicted.shape[1]

    def errors(self):
        """Euclidean error per (j, n)"""
        return np.linalg.norm(self.predicted - self.truth, axis=-1)


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p: float
    decision: str


@dataclass(frozen=True)
class BlandAltmanResult:
    bias: float
    loa_low: float
    loa_high: float
    sd: float
    points: tuple = ()  # (mean_i, diff_i)


@dataclass(frozen=True)
class AgreementReport:
    """Agreement statistics for one feature/condition cell"""

    feature_name: str
    condition_label: str
    n: int
    welch: WelchResult
    bland_altman: BlandAltmanResult
    agreement_fraction: dict = field(default_factory=dict)  # threshold -> fraction
    pearson_r: float = None
