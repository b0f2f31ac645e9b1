"""
Partition comparison (NMI, VI) and occupancy summaries of mixture draws.
Entropies are in nats.
"""
import math

import numpy as np

__all__ = ["contingency", "entropy", "mutual_information", "nmi", "vi", "occupied_count", "extra_weight"]


def _labels(x):
    x = np.asarray(x)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("a partition is a non-empty 1-d label vector")
    if np.any(x < 0):
        raise ValueError("labels must be non-negative")
    return x


def _compact(x):
    # label ids up to n index a bincount directly; larger ids are renumbered
    if x.max() < x.size:
        return x.astype(np.intp, copy=False)
    return np.unique(x, return_inverse=True)[1].ravel()


def contingency(truth, predicted):
    """Counts of (truth, predicted) label pairs, empty rows and columns dropped."""
    u, v = _labels(truth), _labels(predicted)
    if u.shape != v.shape:
        raise ValueError(f"partitions differ in length: {u.size} vs {v.size}")
    u, v = _compact(u), _compact(v)
    nu, nv = int(u.max()) + 1, int(v.max()) + 1
    table = np.bincount(u * nv + v, minlength=nu * nv).reshape(nu, nv)
    return table[table.any(axis=1)][:, table.any(axis=0)]


def _clogc(counts):
    """Sum of c ln c over the positive counts."""
    c = counts[counts > 0].astype(float)
    return float(np.dot(c, np.log(c)))


def _table_terms(table):
    # every entropy here is ln n - sum(c ln c) / n, so the three sums carry all of it
    n = int(table.sum())
    return n, _clogc(table.sum(axis=1)), _clogc(table.sum(axis=0)), _clogc(table.ravel())


def _entropy(s, n):
    return max(0.0, math.log(n) - s / n)


def entropy(labels):
    x = _labels(labels)
    counts = np.bincount(_compact(x))
    if np.count_nonzero(counts) == 1:
        return 0.0
    return _entropy(_clogc(counts), x.size)


def _mi(n, s_u, s_v, s_uv):
    return max(0.0, math.log(n) + (s_uv - s_u - s_v) / n)


def mutual_information(truth, predicted):
    return _mi(*_table_terms(contingency(truth, predicted)))


def _is_bijection(table):
    """True when the contingency table pairs labels one-to-one."""
    # empty rows and columns are already dropped, so each holds at least one cell
    return np.count_nonzero(table) == table.shape[0] == table.shape[1]


def nmi(truth, predicted, normalization="geometric"):
    """
    Normalized mutual information in [0, 1].

    ``normalization`` picks the denominator: ``"geometric"`` sqrt(H(U) H(V)),
    ``"arithmetic"`` (H(U) + H(V)) / 2 or ``"max"``. Two single-cluster
    partitions score 1.
    """
    if normalization not in ("geometric", "arithmetic", "max"):
        raise ValueError(f"unknown normalization {normalization!r}")
    table = contingency(truth, predicted)
    if _is_bijection(table):
        # covers two single-cluster partitions, and skips a division that can land 1 ulp short
        return 1.0
    n, s_u, s_v, s_uv = _table_terms(table)
    # a single cluster has zero entropy exactly, not ln n - ln n
    hu = _entropy(s_u, n) if table.shape[0] > 1 else 0.0
    hv = _entropy(s_v, n) if table.shape[1] > 1 else 0.0
    if normalization == "geometric":
        denom = math.sqrt(hu * hv)
    elif normalization == "arithmetic":
        denom = 0.5 * (hu + hv)
    else:
        denom = max(hu, hv)
    if denom == 0.0:
        return 0.0
    return min(1.0, _mi(n, s_u, s_v, s_uv) / denom)


def vi(truth, predicted):
    """Variation of information ``H(U) + H(V) - 2 I(U; V)``."""
    table = contingency(truth, predicted)
    if _is_bijection(table):
        return 0.0
    n, s_u, s_v, s_uv = _table_terms(table)
    # 2 H(U, V) - H(U) - H(V); the ln n terms cancel
    return max(0.0, (s_u + s_v - 2.0 * s_uv) / n)


def occupied_count(assignments, k_max):
    z = _labels(assignments)
    if np.any(z >= k_max):
        raise ValueError(f"label {int(z.max())} out of range for k_max={k_max}")
    return int(np.unique(z).size)


def extra_weight(weights, k_true):
    """
    Mass outside the ``k_true`` heaviest components, i.e. one minus their
    total. Summed over the lightest components directly, so the result is
    exactly 0 when ``k_true`` equals the number of weights.
    """
    w = np.asarray(weights, dtype=float)
    if k_true > w.size:
        raise ValueError(f"k_true={k_true} exceeds the number of weights {w.size}")
    if k_true < 1:
        raise ValueError("k_true must be positive")
    rest = np.sort(w)[: w.size - k_true]
    return float(min(1.0, max(0.0, math.fsum(rest))))
