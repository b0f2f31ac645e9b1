"""Synthetic Gaussian mixture data with known labels."""
import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["SimSpec", "sim1", "generate", "write_csv", "read_csv"]


@dataclass(frozen=True)
class SimSpec:
    """
    Mixture of ``K0`` Gaussians: weights, means (K0, D) and covariances
    (K0, D, D).
    """

    n: int
    weights: tuple
    means: tuple
    covariances: tuple
    seed: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        means = np.asarray(self.means, dtype=float)
        if means.ndim == 1:
            means = means[:, None]
        covs = np.asarray(self.covariances, dtype=float)
        k0, d = means.shape
        if covs.ndim == 1:
            covs = covs[:, None, None]
        if self.n < 1:
            raise ValueError("n must be positive")
        if w.shape != (k0,) or covs.shape != (k0, d, d):
            raise ValueError("weights, means and covariances disagree in shape")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must be a probability vector, got {w}")
        for c in covs:
            np.linalg.cholesky(c)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)

    @property
    def k0(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]


def sim1(seed=0, n=300):
    """Three well-separated unit-variance components at -5, 0, 5."""
    # sigma is a standard deviation; variance 1 either way
    sd = np.array([1.0, 1.0, 1.0])
    return SimSpec(n, (0.5, 0.3, 0.2), (-5.0, 0.0, 5.0), tuple(sd**2), seed)


def generate(spec, rng=None):
    """
    Draw ``spec.n`` points; returns ``(data (N, D), labels (N,))``.
    Uses ``numpy.random.default_rng(spec.seed)`` when ``rng`` is omitted.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    labels = rng.choice(spec.k0, size=spec.n, p=spec.weights)
    chols = np.linalg.cholesky(spec.covariances)
    eps = rng.standard_normal((spec.n, spec.dim))
    data = spec.means[labels] + np.einsum("nij,nj->ni", chols[labels], eps)
    return data, labels


def write_csv(path, data, labels=None):
    """Rows are points; the last column holds the label when given."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    d = data.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x{j}" for j in range(d)]
        if labels is not None:
            header.append("label")
        writer.writerow(header)
        for i, row in enumerate(data):
            out = [repr(float(v)) for v in row]
            if labels is not None:
                out.append(int(labels[i]))
            writer.writerow(out)


def read_csv(path):
    """Inverse of :func:`write_csv`; labels are ``None`` if the file has none."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    has_labels = header[-1] == "label"
    arr = np.array([[float(v) for v in r] for r in rows]).reshape(len(rows), len(header))
    if has_labels:
        return arr[:, :-1], arr[:, -1].astype(np.int64)
    return arr, None
