"""
Log-gamma, digamma and trigamma on the positive real axis, and the
log-ratio ``log G(x) = log Gamma(k x) - k log Gamma(x)`` with its first two
derivatives.

All functions accept a Python float or an array-like of positive reals and
return the same shape.
"""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = ["log_gamma", "digamma", "trigamma", "log_g", "log_g_multiplication", "LogGRatio"]

# Arguments below this are shifted upward by the recurrence before the
# asymptotic series is applied.
_ASYMPTOTIC_THRESHOLD = 10.0

# B_2n / (2n) for the digamma series, B_2n for the trigamma series
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)

_LOG_2PI = math.log(2.0 * math.pi)


def _check(x):
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"argument must be a finite positive real, got {x!r}")


def _elementwise(scalar_fn):
    def wrapper(x):
        if np.ndim(x) == 0:
            return scalar_fn(float(x))
        arr = np.asarray(x, dtype=float)
        out = np.empty(arr.shape)
        for idx, v in np.ndenumerate(arr):
            out[idx] = scalar_fn(float(v))
        return out

    wrapper.__name__ = scalar_fn.__name__.lstrip("_")
    wrapper.__doc__ = scalar_fn.__doc__
    return wrapper


def _log_gamma(x):
    """Natural log of the Gamma function for x > 0."""
    _check(x)
    return math.lgamma(x)


def _digamma(x):
    """Digamma function Psi(x) = d/dx log Gamma(x) for x > 0."""
    _check(x)
    terms = []
    while x < _ASYMPTOTIC_THRESHOLD:
        terms.append(-1.0 / x)
        x += 1.0
    inv2 = 1.0 / (x * x)
    # Horner evaluation of sum_n c_n x^{-2n}
    series = 0.0
    for c in reversed(_DIGAMMA_COEFFS):
        series = (series + c) * inv2
    terms.append(math.log(x) - 0.5 / x - series)
    return math.fsum(terms)


def _trigamma(x):
    """Trigamma function Psi'(x) = sum_{h>=0} 1/(x+h)^2 for x > 0."""
    _check(x)
    terms = []
    while x < _ASYMPTOTIC_THRESHOLD:
        terms.append(1.0 / (x * x))
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    for c in reversed(_TRIGAMMA_COEFFS):
        series = (series + c) * inv2
    # 1/x + 1/(2x^2) + sum_n B_2n / x^{2n+1}
    terms.append(1.0 / x + 0.5 * inv2 + series / x)
    return math.fsum(terms)


log_gamma = _elementwise(_log_gamma)
digamma = _elementwise(_digamma)
trigamma = _elementwise(_trigamma)


def _check_k(k):
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    return int(k)


def log_g(x, k):
    """
    Value, first and second derivative of ``log Gamma(k x) - k log Gamma(x)``.

    Parameters
    ----------
    x : float
        Positive evaluation point.
    k : int
        Number of mixture components, ``k >= 1``.

    Returns
    -------
    value, d1, d2 : float
        ``d1 = k Psi(k x) - k Psi(x)`` and ``d2 = k^2 Psi'(k x) - k Psi'(x)``;
        ``d2`` is strictly negative for every ``k >= 2``.
    """
    k = _check_k(k)
    x = float(x)
    _check(x)
    if k == 1:
        return 0.0, 0.0, 0.0
    kx = k * x
    value = math.lgamma(kx) - k * math.lgamma(x)
    d1 = k * (_digamma(kx) - _digamma(x))
    d2 = _log_g_d2(x, k)
    return value, d1, d2


def _log_g_d2(x, k):
    # Sum over the shifted arguments x + i/k rather than k^2 Psi'(k x): the
    # latter cancels catastrophically against k Psi'(x) for large x.
    return math.fsum(_trigamma(x + i / k) - _trigamma(x) for i in range(1, k))


def log_g_multiplication(x, k):
    """
    ``log G(x)`` and its first two derivatives through the Gauss
    multiplication formula for ``Gamma(k x)``.

    Evaluates
    ``(1-k)/2 log(2 pi) + (k x - 1/2) log k + sum_i log Gamma(x + i/k) - k log Gamma(x)``
    with derivatives ``k log k + sum_i Psi(x + i/k) - k Psi(x)`` and
    ``sum_i Psi'(x + i/k) - k Psi'(x)``. Slower than :func:`log_g`; kept as an
    independent evaluation route.
    """
    k = _check_k(k)
    x = float(x)
    _check(x)
    shifts = [x + i / k for i in range(k)]
    value = (
        0.5 * (1 - k) * _LOG_2PI
        + (k * x - 0.5) * math.log(k)
        + math.fsum(math.lgamma(s) for s in shifts)
        - k * math.lgamma(x)
    )
    d1 = k * math.log(k) + math.fsum(_digamma(s) for s in shifts) - k * _digamma(x)
    d2 = math.fsum(_trigamma(s) for s in shifts) - k * _trigamma(x)
    return value, d1, d2


@dataclass(frozen=True)
class LogGRatio:
    """``G(x) = Gamma(k x) / Gamma(x)^k`` for a fixed number of components ``k``."""

    k: int

    def __post_init__(self):
        _check_k(self.k)

    def __call__(self, x):
        return log_g(x, self.k)
