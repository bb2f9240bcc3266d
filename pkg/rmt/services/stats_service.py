"""Stats service: keypoint accuracy and method agreement statistics"""
import logging
import math

import numpy as np

from rmt.models.agreement import (
    ACCEPT,
    REJECT,
    AgreementReport,
    BlandAltmanResult,
    PairedFeatureSample,
    WelchResult,
)
from rmt.models.features import FEATURE_NAMES
from rmt.utils.errors import EmptyIntersectionError, ValidationError
from rmt.utils.special import student_t_two_tailed
from rmt.utils.validators import validate_thresholds

logger = logging.getLogger(__name__)

MAXIMAL = 'maximal'
UNLABELLED = 'all'


class StatsService:
    """Service for PCK/MPJPE and two-method agreement statistics"""

    @staticmethod
    def pck(k, threshold):
        """
        Fraction of keypoints whose error is strictly below ``threshold`` pixels.

        Args:
            k (KeypointPredictionSet): Predicted and true positions
            threshold (float): Pixel threshold, > 0

        Returns:
            float: Fraction over all J * N positions
        """
        if not threshold > 0:
            raise ValidationError(f'PCK threshold must be positive, got {threshold}')
        return float(np.mean(k.errors() < threshold))

    @staticmethod
    def pck_curve(k, thresholds):
        """PCK at every threshold, as (threshold, fraction) pairs in the given order"""
        try:
            thresholds = [float(t) for t in thresholds]
        except (TypeError, ValueError):
            raise ValidationError('PCK thresholds must be numbers')
        is_valid, error = validate_thresholds(thresholds)
        if not is_valid:
            raise ValidationError(error)

        errors = k.errors()
        return [(t, float(np.mean(errors < t))) for t in thresholds]

    @staticmethod
    def mpjpe(k):
        """Mean Euclidean error over all keypoints and frames, in pixels"""
        return float(np.mean(k.errors()))

    @staticmethod
    def welch_t_test(a, b, alpha=0.05):
        """
        Two-sample t-test without the equal-variance assumption.

        Zero variance on both sides is resolved by convention: equal means
        give t = 0 and p = 1, different means give an infinite t and p = 0.

        Args:
            a (sequence): First sample, at least 2 values
            b (sequence): Second sample, at least 2 values
            alpha (float): Significance level; accept iff p > alpha

        Returns:
            WelchResult: t, Welch-Satterthwaite df, two-tailed p and decision
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        n_a, n_b = len(a), len(b)
        if n_a < 2 or n_b < 2:
            raise ValidationError(f'Welch test needs at least 2 values per sample, got {n_a} and {n_b}')

        var_a = a.var(ddof=1)
        var_b = b.var(ddof=1)
        if not (np.isfinite(var_a) and np.isfinite(var_b)):
            raise ValidationError('sample variances must be finite')

        se_a = var_a / n_a
        se_b = var_b / n_b
        se2 = se_a + se_b
        diff = a.mean() - b.mean()

        if se2 == 0:
            df = float(n_a + n_b - 2)
            if diff == 0:
                return WelchResult(0.0, df, 1.0, ACCEPT)
            return WelchResult(math.copysign(math.inf, diff), df, 0.0, REJECT)

        t = float(diff / math.sqrt(se2))
        df = float(se2 ** 2 / (se_a ** 2 / (n_a - 1) + se_b ** 2 / (n_b - 1)))
        p = student_t_two_tailed(t, df)
        return WelchResult(t, df, p, ACCEPT if p > alpha else REJECT)

    @staticmethod
    def bland_altman(s, multiplier=1.96):
        """
        Bias and limits of agreement of paired differences a - b.

        Args:
            s (PairedFeatureSample): Paired values, at least 2 pairs
            multiplier (float): Standard deviations spanned by each limit

        Returns:
            BlandAltmanResult: bias, limits, sd and (mean, difference) points
        """
        if len(s) < 2:
            raise ValidationError('Bland-Altman analysis needs at least 2 pairs')

        a, b = s.a, s.b
        diff = a - b
        bias = float(diff.mean())
        sd = float(diff.std(ddof=1))
        points = tuple(zip(((a + b) / 2.0).tolist(), diff.tolist()))
        return BlandAltmanResult(bias, bias - multiplier * sd, bias + multiplier * sd, sd, points)

    @staticmethod
    def agreement_fraction(s, threshold):
        """Fraction of pairs whose absolute difference is at most ``threshold``"""
        if not threshold > 0:
            raise ValidationError(f'agreement threshold must be positive, got {threshold}')
        return float(np.mean(np.abs(s.a - s.b) <= threshold))

    @staticmethod
    def pearson_r(s):
        """Correlation between the two methods; None when either side is constant"""
        a, b = s.a, s.b
        if len(s) < 2 or a.std() == 0 or b.std() == 0:
            return None
        return float(np.corrcoef(b, a)[0, 1])

    @staticmethod
    def compare_methods(s, thresholds=(), alpha=0.05, multiplier=1.96):
        """
        All agreement statistics for one feature/condition cell.

        Args:
            s (PairedFeatureSample): Method A on the first side, B on the second
            thresholds (iterable): Agreement thresholds to evaluate
            alpha (float): Welch significance level
            multiplier (float): Bland-Altman multiplier

        Returns:
            AgreementReport: Welch, Bland-Altman, agreement fractions and r
        """
        return AgreementReport(
            feature_name=s.feature_name,
            condition_label=s.condition_label,
            n=len(s),
            welch=StatsService.welch_t_test(s.a, s.b, alpha),
            bland_altman=StatsService.bland_altman(s, multiplier),
            agreement_fraction={float(t): StatsService.agreement_fraction(s, t) for t in thresholds},
            pearson_r=StatsService.pearson_r(s),
        )

    @staticmethod
    def paired_samples(measurements_a, measurements_b, feature_names=FEATURE_NAMES, split_hz=4.0, values=None):
        """
        Pair two methods' measurements by recording and group them by condition.

        The condition comes from the second (reference) side when it has
        one. The maximal-speed condition is additionally split by the
        reference M-TF at ``split_hz``.

        Args:
            measurements_a (list): ReferenceMeasurement of method A
            measurements_b (list): ReferenceMeasurement of method B
            feature_names (iterable): Features to pair
            split_hz (float): M-TF boundary of the maximal-speed split
            values (callable, optional): Maps a measurement to the dict the
                feature names index; defaults to its feature values

        Returns:
            list: PairedFeatureSample per (feature, condition), in feature
                order then condition order of first appearance
        """
        values = values or (lambda m: m.feature_values)
        by_id_a = {m.recording_id: m for m in measurements_a}
        by_id_b = {m.recording_id: m for m in measurements_b}
        shared = sorted(set(by_id_a) & set(by_id_b))
        if not shared:
            raise EmptyIntersectionError('the two methods share no recording id')

        dropped = len(set(by_id_a) ^ set(by_id_b))
        if dropped:
            logger.warning('%d recording(s) present on only one side were ignored', dropped)

        cells = {}
        for rid in shared:
            ma, mb = by_id_a[rid], by_id_b[rid]
            condition = mb.condition_label or ma.condition_label or UNLABELLED
            labels = [condition]
            if condition == MAXIMAL and mb.feature_values.get('M-TF') is not None:
                side = '<' if mb.feature_values['M-TF'] < split_hz else '>'
                labels.append(f'{MAXIMAL} ({side}{split_hz:g}Hz)')

            fa, fb = values(ma), values(mb)
            for name in feature_names:
                if name not in fa or name not in fb:
                    continue
                va, vb = fa[name], fb[name]
                if va is None or vb is None or not (math.isfinite(va) and math.isfinite(vb)):
                    continue
                for label in labels:
                    cells.setdefault((name, label), []).append((va, vb, rid))

        order = {name: i for i, name in enumerate(feature_names)}
        keys = sorted(cells, key=lambda key: order[key[0]])
        return [PairedFeatureSample(tuple(cells[key]), key[0], key[1]) for key in keys]
