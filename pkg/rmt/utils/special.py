"""Special functions for the Student-t distribution"""
import math

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITERATIONS = 500


def _betacf(a, b, x):
    # Modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d

    for m in range(1, _MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h

    raise ArithmeticError(f'incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})')


def betainc(a, b, x):
    """
    Regularized incomplete beta function I_x(a, b).

    Args:
        a (float): First shape parameter, > 0
        b (float): Second shape parameter, > 0
        x (float): Upper integration limit in [0, 1]

    Returns:
        float: I_x(a, b) in [0, 1]
    """
    if a <= 0 or b <= 0:
        raise ValueError('shape parameters must be positive')
    if not 0.0 <= x <= 1.0:
        raise ValueError('x must lie in [0, 1]')
    if x == 0.0 or x == 1.0:
        return x

    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)

    # The continued fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_tailed(t, df):
    """
    Two-tailed tail probability P(|T| >= |t|) of Student's t.

    Args:
        t (float): Statistic
        df (float): Degrees of freedom, > 0 (need not be an integer)

    Returns:
        float: p-value in [0, 1]
    """
    if df <= 0:
        raise ValueError('degrees of freedom must be positive')
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0

    x = df / (df + t * t)
    p = betainc(df / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))
