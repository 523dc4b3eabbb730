"""Compiled hot loop for the random-walk Metropolis sampler.

Everything here is deliberately free of Python objects: the driver in
``inference`` aggregates the trial history into flat arrays, pre-generates the
random streams with numpy, and hands the whole chain to one jitted function.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def log_posterior_kernel(t1, t2, log_ratios, y, n, m1, s1, m2, s2, const):
    """Log posterior density at (t1, t2), matching the numpy reference.

    ``log_ratios``, ``y``, ``n`` hold per-dose aggregated data: log(d/ref),
    DLT count, patient count. ``const`` carries every theta-independent term
    (normal normalisers and binomial coefficients) so the value is comparable
    across implementations, not just up to a constant.
    """
    z1 = (t1 - m1) / s1
    z2 = (t2 - m2) / s2
    v = const - 0.5 * (z1 * z1 + z2 * z2)
    slope = math.exp(t2)
    for j in range(log_ratios.shape[0]):
        z = t1 + slope * log_ratios[j]
        # softplus(z) = log(1 + e^z), computed on the stable side
        if z > 0.0:
            sp = z + math.log1p(math.exp(-z))
        else:
            sp = math.log1p(math.exp(z))
        if y[j] > 0.0:
            v += y[j] * z
        v -= n[j] * sp
    return v


@njit(cache=True)
def run_chain(
    t1_init,
    t2_init,
    log_ratios,
    y,
    n,
    m1,
    s1,
    m2,
    s2,
    const,
    burn_in,
    kept,
    thin,
    target_acceptance,
    normals,
    unifs,
    out1,
    out2,
):
    """Adaptive random-walk Metropolis over (theta1, theta2).

    The proposal is an independent bivariate normal whose per-coordinate
    widths are a shared scale factor times running estimates of the chain's
    marginal standard deviations. During burn-in the log scale factor follows
    a Robbins-Monro recursion towards ``target_acceptance`` and the widths
    track Welford variance estimates; after burn-in everything is frozen.
    Records every ``thin``-th post-burn-in state into out1/out2.

    Returns (acceptance_rate, error_flag); error_flag is 1 when the posterior
    is non-finite at the initial state, else 0. acceptance_rate counts only
    post-burn-in proposals.
    """
    t1 = t1_init
    t2 = t2_init
    cur = log_posterior_kernel(t1, t2, log_ratios, y, n, m1, s1, m2, s2, const)
    if not math.isfinite(cur):
        return 0.0, 1

    log_scale = math.log(2.38 / math.sqrt(2.0))
    w1 = s1
    w2 = s2
    mean1 = 0.0
    mean2 = 0.0
    msq1 = 0.0
    msq2 = 0.0
    seen = 0

    total = burn_in + kept * thin
    accepted = 0
    rec = 0
    for i in range(total):
        scale = math.exp(log_scale)
        p1 = t1 + scale * w1 * normals[i, 0]
        p2 = t2 + scale * w2 * normals[i, 1]
        prop = log_posterior_kernel(p1, p2, log_ratios, y, n, m1, s1, m2, s2, const)
        diff = prop - cur
        if diff >= 0.0:
            accept_prob = 1.0
        elif diff > -745.0:
            accept_prob = math.exp(diff)
        else:
            # also covers NaN proposals (reject outright)
            accept_prob = 0.0
        if unifs[i] < accept_prob:
            t1 = p1
            t2 = p2
            cur = prop
        if i < burn_in:
            log_scale += (accept_prob - target_acceptance) / (1.0 + i) ** 0.66
            seen += 1
            d1 = t1 - mean1
            mean1 += d1 / seen
            msq1 += d1 * (t1 - mean1)
            d2 = t2 - mean2
            mean2 += d2 / seen
            msq2 += d2 * (t2 - mean2)
            if seen >= 200 and (i + 1) % 100 == 0:
                c1 = math.sqrt(msq1 / (seen - 1))
                c2 = math.sqrt(msq2 / (seen - 1))
                if c1 > 1e-3:
                    w1 = c1
                if c2 > 1e-3:
                    w2 = c2
        else:
            if unifs[i] < accept_prob:
                accepted += 1
            if (i - burn_in + 1) % thin == 0:
                out1[rec] = t1
                out2[rec] = t2
                rec += 1

    post = kept * thin
    rate = accepted / post if post > 0 else 0.0
    return rate, 0
