"""
Collapsed Gibbs sampler for a finite Gaussian mixture with a Gamma
hyperprior on the symmetric Dirichlet concentration.

One iteration is: reassign every point with component parameters
integrated out, draw the weights from their Dirichlet conditional, then
draw the concentration given the weights by adaptive rejection sampling.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import niw
from ._sweep import sweep as _compiled_sweep
from .alpha_posterior import AlphaConditional, GammaHyper, sample_alpha
from .exceptions import ChainError, DegeneracyError, DomainError

__all__ = [
    "MixtureState",
    "Trace",
    "ChainConfig",
    "prior_assignment_prob",
    "assignment_log_probs",
    "gibbs_sweep",
    "draw_weights",
    "draw_log_weights",
    "init_state",
    "run_chain",
]

log = logging.getLogger(__name__)

# Below this Dirichlet shape the Gamma variates are drawn in log space.
SMALL_SHAPE = 0.1


def prior_assignment_prob(counts_minus_i, alpha):
    """
    ``p(z_i = k | z_-i, alpha) = (n_k + alpha) / (N - 1 + K alpha)``.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    counts = np.asarray(counts_minus_i, dtype=float)
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    return (counts + alpha) / (counts.sum() + counts.size * alpha)


def draw_log_weights(counts, alpha, rng):
    """Log of one ``Dirichlet(alpha + counts)`` draw."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    shape = np.asarray(counts, dtype=float) + alpha
    small = shape < SMALL_SHAPE
    log_g = np.empty(shape.size)
    if np.any(~small):
        log_g[~small] = np.log(rng.gamma(shape[~small]))
    if np.any(small):
        # G_a = G_{a+1} U^{1/a}
        s = shape[small]
        log_g[small] = np.log(rng.gamma(s + 1.0)) + np.log(rng.random(s.size)) / s
    top = log_g.max()
    return log_g - (top + math.log(np.exp(log_g - top).sum()))


def draw_weights(counts, alpha, rng):
    """
    One draw of the mixture weights given component counts.

    Returns
    -------
    weights : numpy.ndarray
    sum_log_weights : float
        ``sum_k log pi_k`` computed from the log-space draw, finite even when
        some weights underflow.
    """
    log_w = draw_log_weights(counts, alpha, rng)
    return np.exp(log_w), math.fsum(log_w)


@dataclass
class MixtureState:
    """
    Sampler state. Cluster statistics are held as stacked arrays:
    ``counts`` (K,), ``sums`` (K, D) and ``scatters`` (K, D, D).
    """

    assignments: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    scatters: np.ndarray
    alpha: float
    log_weights: np.ndarray
    hyper: GammaHyper
    prior: niw.NIWParams

    @property
    def k_max(self):
        return self.counts.shape[0]

    @property
    def weights(self):
        return np.exp(self.log_weights)

    @property
    def cluster_stats(self):
        return [
            niw.ClusterStats(int(self.counts[k]), self.sums[k].copy(), self.scatters[k].copy())
            for k in range(self.k_max)
        ]

    @classmethod
    def from_assignments(cls, data, assignments, k_max, alpha, log_weights, hyper, prior):
        data = _as_data(data)
        z = np.asarray(assignments, dtype=np.int64).copy()
        counts, sums, scatters = _recount(data, z, k_max)
        return cls(z, counts, sums, scatters, float(alpha), np.asarray(log_weights, float), hyper, prior)

    def check(self, data, atol=1e-8):
        """Raise AssertionError if cached statistics disagree with a full recount."""
        data = _as_data(data)
        counts, sums, scatters = _recount(data, self.assignments, self.k_max)
        assert counts.sum() == data.shape[0]
        assert np.array_equal(counts, self.counts), (counts, self.counts)
        scale = max(1.0, float(np.abs(scatters).max()))
        assert np.allclose(sums, self.sums, rtol=0, atol=atol * scale)
        assert np.allclose(scatters, self.scatters, rtol=0, atol=atol * scale)
        assert abs(self.weights.sum() - 1.0) < 1e-12


def _as_data(data):
    data = np.ascontiguousarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return data


def _recount(data, z, k_max):
    if z.size and (z.min() < 0 or z.max() >= k_max):
        raise ValueError(f"assignments must lie in [0, {k_max})")
    d = data.shape[1]
    counts = np.bincount(z, minlength=k_max).astype(np.int64)
    sums = np.zeros((k_max, d))
    scatters = np.zeros((k_max, d, d))
    np.add.at(sums, z, data)
    np.add.at(scatters, z, data[:, :, None] * data[:, None, :])
    return counts, sums, scatters


def assignment_log_probs(x, cluster_stats, alpha, prior):
    """
    Normalized log-probabilities of the K choices for one point whose own
    statistics have already been removed from ``cluster_stats``.
    """
    counts = np.array([s.n for s in cluster_stats])
    logp = np.log(prior_assignment_prob(counts, alpha))
    logp += np.array([niw.log_predictive(x, s, prior) for s in cluster_stats])
    top = logp.max()
    return logp - (top + math.log(np.exp(logp - top).sum()))


def gibbs_sweep(state, data, rng, uniforms=None):
    """
    Visit every point once in index order and redraw its assignment.

    Mutates and returns ``state``. ``uniforms`` (one per point) replaces
    the draws from ``rng`` when given.
    """
    data = _as_data(data)
    if uniforms is None:
        uniforms = rng.random(data.shape[0])
    prior = state.prior
    status = _compiled_sweep(
        data,
        state.assignments,
        state.counts,
        state.sums,
        state.scatters,
        float(state.alpha),
        prior.mean0,
        prior.kappa0,
        prior.nu0,
        prior.psi0,
        np.asarray(uniforms, dtype=float),
    )
    if status:
        raise DegeneracyError(f"posterior scale not positive definite at point {status - 1}")
    return state


def gibbs_sweep_reference(state, data, uniforms):
    """
    Pure-Python sweep built on :mod:`hyperdirichlet.niw`; same draws as
    :func:`gibbs_sweep` given the same uniforms, orders of magnitude slower.
    """
    data = _as_data(data)
    stats = state.cluster_stats
    z = state.assignments
    for i in range(data.shape[0]):
        x = data[i]
        stats[z[i]] = niw.remove_point(stats[z[i]], x)
        p = np.exp(assignment_log_probs(x, stats, state.alpha, state.prior))
        k_new = int(np.searchsorted(np.cumsum(p), uniforms[i] * p.sum(), side="right"))
        k_new = min(k_new, state.k_max - 1)
        z[i] = k_new
        stats[k_new] = niw.add_point(stats[k_new], x)
    state.counts = np.array([s.n for s in stats], dtype=np.int64)
    state.sums = np.array([s.sum for s in stats])
    state.scatters = np.array([s.scatter for s in stats])
    return state


def init_state(data, k_max, hyper, prior, rng, alpha=1.0):
    """Uniform random assignments, ``alpha = 1`` and one weight draw."""
    data = _as_data(data)
    z = rng.integers(0, k_max, size=data.shape[0])
    counts = np.bincount(z, minlength=k_max)
    log_w = draw_log_weights(counts, alpha, rng)
    return MixtureState.from_assignments(data, z, k_max, alpha, log_w, hyper, prior)


@dataclass(frozen=True)
class ChainConfig:
    """
    Settings for one chain. ``burn_in=None`` discards the first 20% of
    iterations; ``prior=None`` derives the NIW prior from the data.
    Assignment snapshots are kept every ``snapshot_every``-th retained
    iteration.
    """

    k_max: int
    hyper: GammaHyper = field(default_factory=GammaHyper)
    prior: niw.NIWParams = None
    iterations: int = 5000
    burn_in: int = None
    thinning: int = 1
    seed: int = 0
    snapshot_every: int = 1

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError(f"k_max must be positive, got {self.k_max}")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.thinning < 1 or self.snapshot_every < 1:
            raise ValueError("thinning and snapshot_every must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")

    @property
    def effective_burn_in(self):
        return self.iterations // 5 if self.burn_in is None else self.burn_in


@dataclass
class Trace:
    """
    Post-burn-in record of a chain.

    Per retained iteration: ``iteration``, ``alpha``, ``weights`` (T, K),
    ``occupied`` (T,), posterior-mean component ``means`` (T, K, D) and
    ``covs`` (T, K, D, D). Assignment snapshots ``assignments`` (S, N) were
    taken at ``snapshot_iterations``.
    """

    k_max: int
    dim: int
    iteration: np.ndarray
    alpha: np.ndarray
    weights: np.ndarray
    occupied: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    snapshot_iterations: np.ndarray
    assignments: np.ndarray

    def __len__(self):
        return self.iteration.shape[0]


class _TraceBuilder:
    def __init__(self, k_max, dim, n_points):
        self.k_max, self.dim, self.n_points = k_max, dim, n_points
        self.rows = []
        self.snapshots = []

    def record(self, t, state, snapshot):
        prior = state.prior
        kappa_n = prior.kappa0 + state.counts
        means = (prior.kappa0 * prior.mean0 + state.sums) / kappa_n[:, None]
        covs = np.empty((self.k_max, self.dim, self.dim))
        for k, stats in enumerate(state.cluster_stats):
            covs[k] = niw.posterior_mean_params(stats, prior)[1]
        occupied = int(np.count_nonzero(state.counts))
        self.rows.append((t, state.alpha, state.weights, occupied, means, covs))
        if snapshot:
            self.snapshots.append((t, state.assignments.copy()))

    def build(self):
        k, d, n = self.k_max, self.dim, self.n_points
        rows = self.rows
        return Trace(
            k_max=k,
            dim=d,
            iteration=np.array([r[0] for r in rows], dtype=np.int64),
            alpha=np.array([r[1] for r in rows], dtype=float),
            weights=np.array([r[2] for r in rows]).reshape(len(rows), k),
            occupied=np.array([r[3] for r in rows], dtype=np.int64),
            means=np.array([r[4] for r in rows]).reshape(len(rows), k, d),
            covs=np.array([r[5] for r in rows]).reshape(len(rows), k, d, d),
            snapshot_iterations=np.array([s[0] for s in self.snapshots], dtype=np.int64),
            assignments=np.array([s[1] for s in self.snapshots], dtype=np.int64).reshape(
                len(self.snapshots), n
            ),
        )


def gibbs_iteration(state, data, rng):
    """Sweep, weight draw, concentration update."""
    gibbs_sweep(state, data, rng)
    state.log_weights = draw_log_weights(state.counts, state.alpha, rng)
    cond = AlphaConditional(state.hyper, state.k_max, math.fsum(state.log_weights))
    state.alpha = sample_alpha(cond, state.alpha, rng)
    return state


def run_chain(data, config):
    """
    Run one chain and return its post-burn-in :class:`Trace`.

    Iterations are numbered from 1. Any failure is re-raised as
    :class:`ChainError` carrying the iteration index.
    """
    data = _as_data(data)
    prior = config.prior if config.prior is not None else niw.NIWParams.from_data(data)
    if prior.dim != data.shape[1]:
        raise ValueError(f"prior dimension {prior.dim} does not match data dimension {data.shape[1]}")
    rng = np.random.default_rng(config.seed)
    builder = _TraceBuilder(config.k_max, data.shape[1], data.shape[0])
    burn_in = config.effective_burn_in
    state = init_state(data, config.k_max, config.hyper, prior, rng)
    retained = 0
    for t in range(1, config.iterations + 1):
        try:
            gibbs_iteration(state, data, rng)
        except Exception as exc:
            raise ChainError(t, exc) from exc
        if t > burn_in and (t - burn_in) % config.thinning == 0:
            builder.record(t, state, retained % config.snapshot_every == 0)
            retained += 1
    return builder.build()
