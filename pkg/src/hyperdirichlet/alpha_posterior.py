"""
Conditional posterior of the symmetric Dirichlet concentration.

With ``alpha ~ Gamma(a, b)`` (rate parametrization) and
``pi | alpha ~ Dirichlet(alpha, ..., alpha)`` over ``K`` components,

    log p(alpha | pi) = (a - 1) log alpha - b alpha + (alpha - 1) sum_k log pi_k
                        + log Gamma(K alpha) - K log Gamma(alpha) + const,

which is log-concave in ``alpha`` whenever ``a >= 1``. The weights enter only
through ``sum_k log pi_k``.
"""
import math
from dataclasses import dataclass

from . import ars
from .exceptions import DomainError
from .specfn import digamma, log_g

__all__ = ["GammaHyper", "AlphaConditional", "log_density_and_deriv", "sample_alpha"]


@dataclass(frozen=True)
class GammaHyper:
    """
    Gamma(shape ``a``, rate ``b``) prior on the concentration.

    ``a < 1`` breaks log-concavity of the conditional and is refused unless
    ``allow_nonconcave`` is set.
    """

    a: float = 1.0
    b: float = 1.0
    allow_nonconcave: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise DomainError(f"shape a must be positive, got {self.a!r}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise DomainError(f"rate b must be positive, got {self.b!r}")
        if self.a < 1 and not self.allow_nonconcave:
            raise DomainError(
                f"shape a={self.a!r} < 1 does not give a log-concave conditional; "
                "pass allow_nonconcave=True to use it anyway"
            )

    def log_density(self, alpha):
        """Normalized Gamma log-density at ``alpha``."""
        if not alpha > 0:
            raise DomainError(f"alpha must be positive, got {alpha!r}")
        a, b = self.a, self.b
        return a * math.log(b) - math.lgamma(a) + (a - 1) * math.log(alpha) - b * alpha


@dataclass(frozen=True)
class AlphaConditional:
    """
    Target density of the concentration given the current weights.

    Parameters
    ----------
    hyper : GammaHyper
    k : int
        Number of mixture components.
    sum_log_weights : float
        ``sum_k log pi_k``; finite and at most ``-k log k`` (its value at
        uniform weights), beyond which the density is not normalizable.
    """

    hyper: GammaHyper
    k: int
    sum_log_weights: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k!r}")
        bound = -self.k * math.log(self.k)
        if not math.isfinite(self.sum_log_weights) or self.sum_log_weights > bound + 1e-9 * max(1.0, -bound):
            raise DomainError(
                f"sum of log weights must be finite and <= -k log k = {bound!r}, "
                f"got {self.sum_log_weights!r}"
            )

    @classmethod
    def from_weights(cls, hyper, weights):
        logs = [math.log(w) for w in weights]
        return cls(hyper, len(logs), math.fsum(logs))

    def __call__(self, alpha):
        return log_density_and_deriv(self, alpha)

    def as_target(self):
        return ars.LogConcaveTarget(self, 0.0, math.inf)


def log_density_and_deriv(cond, alpha):
    """
    Unnormalized log-density of the concentration and its derivative.

    Returns
    -------
    value, deriv : float
    """
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be a finite positive real, got {alpha!r}")
    a, b = cond.hyper.a, cond.hyper.b
    k = cond.k
    s = cond.sum_log_weights
    log_alpha = math.log(alpha)
    value = (a - 1) * log_alpha - b * alpha + (alpha - 1) * s
    deriv = (a - 1) / alpha - b + s
    if k > 1:
        value += math.lgamma(k * alpha) - k * math.lgamma(alpha)
        deriv += k * (digamma(k * alpha) - digamma(alpha))
    return value, deriv


def log_density_second_derivative(cond, alpha):
    """Analytic second derivative of :func:`log_density_and_deriv`'s value."""
    return -(cond.hyper.a - 1) / alpha**2 + log_g(alpha, cond.k)[2]


def sample_alpha(cond, current_alpha, rng, max_points=ars.MAX_ABSCISSAE):
    """
    One exact draw of the concentration by adaptive rejection sampling.

    The hull starts from ``current_alpha / 2`` and ``2 * current_alpha`` and
    is widened outward until it brackets the mode.
    """
    if not (math.isfinite(current_alpha) and current_alpha > 0):
        raise DomainError(f"current alpha must be positive, got {current_alpha!r}")
    target = cond.as_target()
    hull = ars.hull_init(target, [0.5 * current_alpha, 2.0 * current_alpha], max_points=max_points)
    draw, _ = ars.sample(hull, target, rng)
    return draw
