"""
Adaptive rejection sampling (tangent version) for univariate log-concave
densities.

The upper envelope is the minimum of the tangents to ``h = log f`` at the
abscissae; the lower squeeze is the chord interpolation between adjacent
abscissae. Envelope masses are kept in log space so that sharply peaked
targets with ``|h|`` in the thousands do not overflow.

Example
-------
>>> import numpy as np
>>> target = LogConcaveTarget(lambda x: (-0.5 * x * x, -x))
>>> hull = hull_init(target, [-1.0, 1.0])
>>> x, hull = sample(hull, target, np.random.default_rng(0))
"""
import bisect
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ArsInitError, ConcavityError

__all__ = ["LogConcaveTarget", "ArsHull", "hull_init", "sample", "sample_n"]

MAX_ABSCISSAE = 50
CONCAVITY_TOL = 1e-8
MAX_WIDEN_ATTEMPTS = 60


@dataclass(frozen=True)
class LogConcaveTarget:
    """
    A log-concave density known up to a constant.

    Parameters
    ----------
    eval : callable
        ``eval(x) -> (h(x), h'(x))`` with ``h`` the log-density up to an
        additive constant.
    lower, upper : float
        Open support interval, possibly infinite.
    """

    eval: object
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"empty domain ({self.lower}, {self.upper})")

    def contains(self, x):
        return self.lower < x < self.upper


def _slope_tol(a, b):
    return CONCAVITY_TOL * max(1.0, abs(a), abs(b))


def _log_segment_mass(h0, slope, lo, hi):
    """log of the integral of exp(h0 + slope * (t - lo)) over [lo, hi]."""
    width = hi - lo
    if width <= 0.0:
        return -math.inf
    if math.isinf(width):
        if slope < 0.0:
            return h0 - math.log(-slope)
        return math.inf
    sw = slope * width
    if abs(sw) < 1e-12:
        return h0 + math.log(width)
    if slope > 0.0:
        # anchor at the right end: exp(h(hi)) (1 - exp(-sw)) / slope
        return h0 + sw + math.log(-math.expm1(-sw)) - math.log(slope)
    return h0 + math.log(-math.expm1(sw)) - math.log(-slope)


def _log_segment_mass_left_open(h_hi, slope, hi):
    """log of the integral of exp(h_hi + slope * (t - hi)) over (-inf, hi]."""
    if slope > 0.0:
        return h_hi - math.log(slope)
    return math.inf


class ArsHull:
    """
    Piecewise-exponential upper envelope and chord squeeze.

    Attributes
    ----------
    x, h, dh : list of float
        Abscissae in increasing order with log-density and derivative.
    z : list of float
        Tangent intersections; ``z[j]`` separates the tangents at ``x[j]``
        and ``x[j+1]``. Segment ``j`` spans ``[z[j-1], z[j]]`` with the
        domain bounds at the ends.
    log_masses : numpy.ndarray
        Log of the envelope mass of each segment.
    log_total : float
        Log of the total envelope mass.
    """

    def __init__(self, target, x, h, dh, max_points=MAX_ABSCISSAE, debug=False):
        self.target = target
        self.x = list(x)
        self.h = list(h)
        self.dh = list(dh)
        self.max_points = max_points
        self.debug = debug
        self.n_proposals = 0
        self.n_accepted = 0
        self.n_evaluations = 0
        self.n_squeeze_accepts = 0
        self._rebuild()

    def __len__(self):
        return len(self.x)

    @property
    def acceptance_rate(self):
        return self.n_accepted / self.n_proposals if self.n_proposals else float("nan")

    def _rebuild(self):
        x, h, dh = self.x, self.h, self.dh
        n = len(x)
        for j in range(n - 1):
            if dh[j + 1] > dh[j] + _slope_tol(dh[j], dh[j + 1]):
                raise ConcavityError(
                    f"derivative increases from {dh[j]!r} at {x[j]!r} "
                    f"to {dh[j + 1]!r} at {x[j + 1]!r}"
                )
        z = []
        for j in range(n - 1):
            diff = dh[j] - dh[j + 1]
            if diff <= _slope_tol(dh[j], dh[j + 1]):
                zj = 0.5 * (x[j] + x[j + 1])
            else:
                zj = (h[j + 1] - h[j] - x[j + 1] * dh[j + 1] + x[j] * dh[j]) / diff
                zj = min(max(zj, x[j]), x[j + 1])
            z.append(zj)
        self.z = z

        lower, upper = self.target.lower, self.target.upper
        log_masses = np.empty(n)
        for j in range(n):
            lo = z[j - 1] if j > 0 else lower
            hi = z[j] if j < n - 1 else upper
            if math.isinf(lo):
                h_hi = h[j] + dh[j] * (hi - x[j])
                log_masses[j] = _log_segment_mass_left_open(h_hi, dh[j], hi)
            else:
                h_lo = h[j] + dh[j] * (lo - x[j])
                log_masses[j] = _log_segment_mass(h_lo, dh[j], lo, hi)
        if not np.all(np.isfinite(log_masses) | (log_masses == -np.inf)) or np.any(
            log_masses == np.inf
        ):
            raise ArsInitError(
                "envelope is not integrable; the abscissae must bracket the mode "
                f"(slopes {dh[0]!r} at {x[0]!r}, {dh[-1]!r} at {x[-1]!r})"
            )
        self.log_masses = log_masses
        top = log_masses.max()
        self.log_total = top + math.log(np.exp(log_masses - top).sum())

    def _segment_of(self, t):
        return bisect.bisect_left(self.z, t)

    def upper_at(self, t):
        """Upper envelope evaluated at ``t``."""
        j = self._segment_of(t)
        return self.h[j] + self.dh[j] * (t - self.x[j])

    def lower_at(self, t):
        """Chord squeeze at ``t``; ``-inf`` outside the abscissa span."""
        x = self.x
        if t < x[0] or t > x[-1]:
            return -math.inf
        j = bisect.bisect_right(x, t) - 1
        if j >= len(x) - 1:
            return self.h[-1]
        w = (t - x[j]) / (x[j + 1] - x[j])
        return (1.0 - w) * self.h[j] + w * self.h[j + 1]

    def propose(self, rng):
        """Draw from the normalized envelope; returns ``(t, segment)``."""
        p = np.exp(self.log_masses - self.log_total)
        j = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
        j = min(j, len(self.x) - 1)
        n = len(self.x)
        lo = self.z[j - 1] if j > 0 else self.target.lower
        hi = self.z[j] if j < n - 1 else self.target.upper
        slope = self.dh[j]
        u = rng.random()
        if math.isinf(lo):
            # slope > 0 guaranteed by integrability
            t = hi + math.log1p(-u) / slope
        elif math.isinf(hi):
            t = lo + math.log1p(-u) / slope
        else:
            sw = slope * (hi - lo)
            if abs(sw) < 1e-12:
                t = lo + u * (hi - lo)
            elif slope > 0.0:
                t = hi + math.log1p((u - 1.0) * -math.expm1(-sw)) / slope
            else:
                t = lo + math.log1p(-u * -math.expm1(sw)) / slope
            t = min(max(t, lo), hi)
        return t, j

    def insert(self, t, ht, dht):
        """Add an abscissa; a no-op once the hull holds ``max_points``."""
        if len(self.x) >= self.max_points:
            return False
        i = bisect.bisect_left(self.x, t)
        if (i < len(self.x) and self.x[i] == t) or (i > 0 and self.x[i - 1] == t):
            return False
        self.x.insert(i, t)
        self.h.insert(i, ht)
        self.dh.insert(i, dht)
        self._rebuild()
        return True

    def draw(self, rng):
        """Return one exact draw from the target, refining the hull on the way."""
        target = self.target
        while True:
            t, j = self.propose(rng)
            if not target.contains(t):
                # rounding at a closed-form segment edge
                continue
            self.n_proposals += 1
            u_t = self.h[j] + self.dh[j] * (t - self.x[j])
            log_u = math.log(rng.random())
            l_t = self.lower_at(t)
            if log_u <= l_t - u_t:
                if self.debug:
                    ht, _ = target.eval(t)
                    assert log_u <= ht - u_t, "squeeze accepted a point the full test rejects"
                self.n_accepted += 1
                self.n_squeeze_accepts += 1
                return t
            ht, dht = target.eval(t)
            self.n_evaluations += 1
            if ht > u_t + _slope_tol(ht, u_t) * max(1.0, abs(t)):
                raise ConcavityError(f"log-density {ht!r} exceeds envelope {u_t!r} at {t!r}")
            if l_t > ht + _slope_tol(ht, l_t):
                raise ConcavityError(f"log-density {ht!r} below chord {l_t!r} at {t!r}")
            self.insert(t, ht, dht)
            if log_u <= ht - u_t:
                self.n_accepted += 1
                return t


def _widen(target, points):
    """Push the outer points away until the boundary slope conditions hold."""
    pts = sorted(float(p) for p in points)
    evals = [target.eval(p) for p in pts]
    for _ in range(MAX_WIDEN_ATTEMPTS):
        left_ok = math.isfinite(target.lower) or evals[0][1] > 0.0
        right_ok = math.isfinite(target.upper) or evals[-1][1] < 0.0
        if left_ok and right_ok:
            return pts, evals
        span = max(pts[-1] - pts[0], 1.0)
        if not left_ok:
            if math.isfinite(target.upper):
                pts[0] = target.upper - 2.0 * (target.upper - pts[0])
            else:
                pts[0] = pts[0] - span
            evals[0] = target.eval(pts[0])
        if not right_ok:
            if math.isfinite(target.lower):
                pts[-1] = target.lower + 2.0 * (pts[-1] - target.lower)
            else:
                pts[-1] = pts[-1] + span
            evals[-1] = target.eval(pts[-1])
    raise ArsInitError(
        f"could not bracket the mode after {MAX_WIDEN_ATTEMPTS} widenings; "
        f"widen the initial points (last tried {pts[0]!r}, {pts[-1]!r})"
    )


def hull_init(target, initial_points, max_points=MAX_ABSCISSAE, auto_widen=True, debug=False):
    """
    Build the envelope from at least two starting abscissae.

    With ``auto_widen`` the outermost points are moved geometrically outward
    until the envelope closes on the unbounded sides (``h' > 0`` at the
    leftmost point if the domain is unbounded below, ``h' < 0`` at the
    rightmost point if it is unbounded above).
    """
    pts = sorted(float(p) for p in initial_points)
    if len(pts) < 2:
        raise ArsInitError("at least two initial points are required")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ArsInitError(f"initial points must be strictly increasing, got {pts}")
    if not all(target.contains(p) for p in pts):
        raise ArsInitError(f"initial points {pts} not inside ({target.lower}, {target.upper})")
    if auto_widen:
        pts, evals = _widen(target, pts)
    else:
        evals = [target.eval(p) for p in pts]
    h = [float(e[0]) for e in evals]
    dh = [float(e[1]) for e in evals]
    return ArsHull(target, pts, h, dh, max_points=max_points, debug=debug)


def sample(hull, target, rng):
    """One draw from ``target``; returns ``(draw, hull)`` with the hull refined in place."""
    if hull.target is not target:
        raise ValueError("hull was built for a different target")
    return hull.draw(rng), hull


def sample_n(hull, n, rng):
    """``n`` successive draws from the same hull."""
    out = np.empty(n)
    for i in range(n):
        out[i] = hull.draw(rng)
    return out
