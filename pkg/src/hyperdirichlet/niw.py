"""
Normal-Inverse-Wishart prior, per-cluster sufficient statistics and the
collapsed multivariate Student-t posterior predictive.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneracyError

__all__ = [
    "NIWParams",
    "ClusterStats",
    "add_point",
    "remove_point",
    "posterior",
    "log_predictive",
]

log = logging.getLogger(__name__)

JITTER = 1e-10


@dataclass(frozen=True)
class NIWParams:
    """
    Hyperparameters of ``mu, Sigma ~ NIW(mean0, kappa0, nu0, psi0)``.

    ``Sigma ~ InvWishart(nu0, psi0)`` and ``mu | Sigma ~ N(mean0, Sigma / kappa0)``.
    """

    mean0: np.ndarray
    kappa0: float
    nu0: float
    psi0: np.ndarray

    def __post_init__(self):
        mean0 = np.atleast_1d(np.asarray(self.mean0, dtype=float))
        psi0 = np.atleast_2d(np.asarray(self.psi0, dtype=float))
        d = mean0.shape[0]
        if mean0.ndim != 1 or psi0.shape != (d, d):
            raise ValueError(f"mean0 shape {mean0.shape} and psi0 shape {psi0.shape} disagree")
        if not self.kappa0 > 0:
            raise ValueError(f"kappa0 must be positive, got {self.kappa0!r}")
        if not self.nu0 > d - 1:
            raise ValueError(f"nu0 must exceed D - 1 = {d - 1}, got {self.nu0!r}")
        if not np.allclose(psi0, psi0.T):
            raise ValueError("psi0 must be symmetric")
        try:
            np.linalg.cholesky(psi0)
        except np.linalg.LinAlgError:
            raise ValueError("psi0 must be positive definite") from None
        object.__setattr__(self, "mean0", mean0)
        object.__setattr__(self, "psi0", psi0)
        object.__setattr__(self, "kappa0", float(self.kappa0))
        object.__setattr__(self, "nu0", float(self.nu0))

    @property
    def dim(self):
        return self.mean0.shape[0]

    @classmethod
    def from_data(cls, data, kappa0=0.01):
        """
        Empirical defaults: prior mean at the sample mean, ``nu0 = D + 2`` and
        ``psi0`` the sample covariance.
        """
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        d = data.shape[1]
        cov = np.atleast_2d(np.cov(data, rowvar=False))
        return cls(data.mean(axis=0), kappa0, d + 2.0, cov)

    def to_dict(self):
        return {
            "mean0": self.mean0.tolist(),
            "kappa0": self.kappa0,
            "nu0": self.nu0,
            "psi0": self.psi0.tolist(),
        }


@dataclass(frozen=True)
class ClusterStats:
    """Count, sum and raw second moment ``sum x x^T`` of the points in a cluster."""

    n: int
    sum: np.ndarray
    scatter: np.ndarray

    @classmethod
    def empty(cls, dim):
        return cls(0, np.zeros(dim), np.zeros((dim, dim)))

    @classmethod
    def from_points(cls, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        return cls(points.shape[0], points.sum(axis=0), points.T @ points)

    @property
    def dim(self):
        return self.sum.shape[0]

    @property
    def mean(self):
        return self.sum / self.n if self.n else np.zeros(self.dim)

    def centered_scatter(self):
        if self.n == 0:
            return np.zeros_like(self.scatter)
        return self.scatter - np.outer(self.sum, self.sum) / self.n


def _as_point(x, dim):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise ValueError(f"point of shape {x.shape} does not match dimension {dim}")
    return x


def add_point(stats, x):
    x = _as_point(x, stats.dim)
    return ClusterStats(stats.n + 1, stats.sum + x, stats.scatter + np.outer(x, x))


def remove_point(stats, x):
    if stats.n < 1:
        raise ValueError("cannot remove a point from an empty cluster")
    x = _as_point(x, stats.dim)
    if stats.n == 1:
        return ClusterStats.empty(stats.dim)
    return ClusterStats(stats.n - 1, stats.sum - x, stats.scatter - np.outer(x, x))


def posterior(stats, prior):
    """
    Posterior NIW parameters ``(mean_n, kappa_n, nu_n, psi_n)`` given a cluster.
    """
    n = stats.n
    kappa_n = prior.kappa0 + n
    nu_n = prior.nu0 + n
    if n == 0:
        return prior.mean0.copy(), kappa_n, nu_n, prior.psi0.copy()
    xbar = stats.sum / n
    mean_n = (prior.kappa0 * prior.mean0 + stats.sum) / kappa_n
    dev = xbar - prior.mean0
    psi_n = (
        prior.psi0
        + stats.centered_scatter()
        + (prior.kappa0 * n / kappa_n) * np.outer(dev, dev)
    )
    return mean_n, kappa_n, nu_n, 0.5 * (psi_n + psi_n.T)


def posterior_mean_params(stats, prior):
    """Posterior expectations of the component mean and covariance."""
    mean_n, _, nu_n, psi_n = posterior(stats, prior)
    d = prior.dim
    denom = nu_n - d - 1
    cov = psi_n / denom if denom > 0 else np.full((d, d), np.nan)
    return mean_n, cov


def _cholesky(mat):
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        pass
    log.warning("posterior scale not positive definite; adding %g jitter", JITTER)
    try:
        return np.linalg.cholesky(mat + JITTER * np.eye(mat.shape[0]))
    except np.linalg.LinAlgError:
        raise DegeneracyError("posterior scale matrix is not positive definite") from None


def student_t_logpdf(x, loc, scale, dof):
    """Multivariate Student-t log-density with ``scale`` the shape matrix."""
    d = loc.shape[0]
    chol = _cholesky(scale)
    sol = np.linalg.solve(chol, x - loc)
    maha = float(sol @ sol)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return (
        math.lgamma(0.5 * (dof + d))
        - math.lgamma(0.5 * dof)
        - 0.5 * d * math.log(dof * math.pi)
        - 0.5 * log_det
        - 0.5 * (dof + d) * math.log1p(maha / dof)
    )


def log_predictive(x, stats, prior):
    """
    ``log p(x | points in the cluster)`` with the component parameters
    integrated out under the NIW prior.
    """
    x = _as_point(x, prior.dim)
    mean_n, kappa_n, nu_n, psi_n = posterior(stats, prior)
    d = prior.dim
    dof = nu_n - d + 1
    scale = psi_n * (kappa_n + 1.0) / (kappa_n * dof)
    return student_t_logpdf(x, mean_n, scale, dof)
