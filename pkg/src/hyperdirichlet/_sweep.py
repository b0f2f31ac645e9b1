"""Compiled inner loop of the collapsed Gibbs sweep."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _student_t_logpdf(x, sums_k, scat_k, n, mean0, kappa0, nu0, psi0, work, chol):
    d = mean0.shape[0]
    kappa_n = kappa0 + n
    nu_n = nu0 + n
    dof = nu_n - d + 1.0
    # posterior mean -> work[0], scale matrix -> chol
    for a in range(d):
        work[0, a] = (kappa0 * mean0[a] + sums_k[a]) / kappa_n
    if n > 0:
        for a in range(d):
            work[1, a] = sums_k[a] / n - mean0[a]
    coef = kappa0 * n / kappa_n
    fac = (kappa_n + 1.0) / (kappa_n * dof)
    for a in range(d):
        for b in range(a + 1):
            v = psi0[a, b]
            if n > 0:
                v += scat_k[a, b] - sums_k[a] * sums_k[b] / n + coef * work[1, a] * work[1, b]
            chol[a, b] = v * fac
    # in-place Cholesky of the lower triangle
    log_det = 0.0
    for a in range(d):
        for b in range(a + 1):
            s = chol[a, b]
            for c in range(b):
                s -= chol[a, c] * chol[b, c]
            if a == b:
                if s <= 0.0:
                    return np.nan
                chol[a, a] = math.sqrt(s)
                log_det += 2.0 * math.log(chol[a, a])
            else:
                chol[a, b] = s / chol[b, b]
    # forward substitution for L y = x - loc
    maha = 0.0
    for a in range(d):
        s = x[a] - work[0, a]
        for c in range(a):
            s -= chol[a, c] * work[2, c]
        work[2, a] = s / chol[a, a]
        maha += work[2, a] * work[2, a]
    return (
        math.lgamma(0.5 * (dof + d))
        - math.lgamma(0.5 * dof)
        - 0.5 * d * math.log(dof * math.pi)
        - 0.5 * log_det
        - 0.5 * (dof + d) * math.log1p(maha / dof)
    )


@njit(cache=True)
def sweep(data, z, counts, sums, scatters, alpha, mean0, kappa0, nu0, psi0, uniforms):
    """
    Reassign every point once, in index order. Mutates ``z``, ``counts``,
    ``sums`` and ``scatters`` in place. Returns 0 on success or ``i + 1``
    for the point whose predictive was degenerate.
    """
    n_points, d = data.shape
    k_max = counts.shape[0]
    logp = np.empty(k_max)
    work = np.empty((3, d))
    chol = np.empty((d, d))
    for i in range(n_points):
        x = data[i]
        k_old = z[i]
        counts[k_old] -= 1
        if counts[k_old] == 0:
            sums[k_old, :] = 0.0
            scatters[k_old, :, :] = 0.0
        else:
            for a in range(d):
                sums[k_old, a] -= x[a]
                for b in range(d):
                    scatters[k_old, a, b] -= x[a] * x[b]
        top = -np.inf
        for k in range(k_max):
            lp = _student_t_logpdf(
                x, sums[k], scatters[k], counts[k], mean0, kappa0, nu0, psi0, work, chol
            )
            if np.isnan(lp):
                return i + 1
            lp += math.log(counts[k] + alpha)
            logp[k] = lp
            if lp > top:
                top = lp
        total = 0.0
        for k in range(k_max):
            logp[k] = math.exp(logp[k] - top)
            total += logp[k]
        target = uniforms[i] * total
        k_new = k_max - 1
        acc = 0.0
        for k in range(k_max):
            acc += logp[k]
            if target < acc:
                k_new = k
                break
        z[i] = k_new
        counts[k_new] += 1
        for a in range(d):
            sums[k_new, a] += x[a]
            for b in range(d):
                scatters[k_new, a, b] += x[a] * x[b]
    return 0
