"""Posterior inference over the curve parameters.

Two routes to the same posterior live here and are tested against each other:

* ``sample_posterior``, the production path, an adaptive random-walk
  Metropolis chain compiled with numba;
* ``grid_posterior_oracle``, a deterministic trapezoid quadrature over a
  bounded rectangle, slow but sampling-error free, used as the reference in
  tests and available for audits.

Both consume the identical joint density: independent normal priors on
(theta1, theta2) times the binomial likelihood of the recorded cohorts under
the plain (unburdened) curve. Burden enters downstream when decision
quantities are computed, not in the posterior itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, logit

from . import _kernels
from .errors import InvalidArgumentError, OracleFailureError, SamplerFailureError
from .model import DoseGrid, ThetaSample, ToxicityIntervals, TrialHistory

DEFAULT_THETA1_MEAN = float(logit(0.25))


@dataclass(frozen=True)
class PriorSpec:
    """Independent normal priors on theta1 and theta2.

    The default centres theta1 on logit of the target DLT rate at the
    reference dose with a wide spread, and theta2 on zero (unit slope).
    """

    mean1: float = DEFAULT_THETA1_MEAN
    sd1: float = 2.0
    mean2: float = 0.0
    sd2: float = 1.0

    def __post_init__(self):
        if self.sd1 <= 0 or self.sd2 <= 0:
            raise InvalidArgumentError("prior standard deviations must be positive")


@dataclass(frozen=True)
class McmcConfig:
    """Chain dimensions and adaptation target for the Metropolis sampler.

    ``kept`` counts retained draws; the chain runs burn_in + kept * thin
    iterations in total. ``thin`` trades wall-clock for lower autocorrelation
    at a fixed number of retained draws.
    """

    burn_in: int = 2000
    kept: int = 8000
    thin: int = 4
    seed: int = 0
    target_acceptance: float = 0.3

    def __post_init__(self):
        if self.burn_in < 0:
            raise InvalidArgumentError("burn_in must be non-negative")
        if self.kept < 1:
            raise InvalidArgumentError("kept must be at least 1")
        if self.thin < 1:
            raise InvalidArgumentError("thin must be at least 1")
        if not (0.0 < self.target_acceptance < 1.0):
            raise InvalidArgumentError("target_acceptance must be in (0, 1)")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be non-negative")


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Retained draws from one chain, plus run diagnostics."""

    theta1: np.ndarray
    theta2: np.ndarray
    acceptance_rate: float
    seed: int

    def __post_init__(self):
        self.theta1.setflags(write=False)
        self.theta2.setflags(write=False)

    def __len__(self) -> int:
        return len(self.theta1)

    @property
    def thetas(self) -> ThetaSample:
        """The draws bundled for the model functions (array-valued fields)."""
        return ThetaSample(self.theta1, self.theta2)


def _aggregate(history: TrialHistory, grid: DoseGrid):
    """Collapse cohorts onto unique doses for the likelihood hot loop.

    Returns (log_ratios, dlt_counts, patient_counts, log_coef) where log_coef
    is the theta-independent sum of per-cohort binomial coefficients. Sums of
    y*z and n*softplus(z) over unique doses equal the per-cohort sums, so only
    the constant needs the cohort-level granularity.
    """
    by_dose: dict[int, list[int]] = {}
    log_coef = 0.0
    for c in history.cohorts:
        acc = by_dose.setdefault(c.dose_index, [0, 0])
        acc[0] += c.dlt_count
        acc[1] += c.n_patients
        log_coef += float(
            gammaln(c.n_patients + 1)
            - gammaln(c.dlt_count + 1)
            - gammaln(c.n_patients - c.dlt_count + 1)
        )
    idx = sorted(by_dose)
    all_ratios = grid.log_ratios()
    log_ratios = np.array([all_ratios[i] for i in idx], dtype=float)
    y = np.array([by_dose[i][0] for i in idx], dtype=float)
    n = np.array([by_dose[i][1] for i in idx], dtype=float)
    return log_ratios, y, n, log_coef


def log_posterior(theta, history: TrialHistory, grid: DoseGrid, prior: PriorSpec):
    """Reference log posterior density, vectorised over theta draws.

    Includes all constants (normal normalisers, binomial coefficients) so it
    equals the kernel's value, not merely up to an additive shift.
    """
    theta1 = np.asarray(theta[0], dtype=float)
    theta2 = np.asarray(theta[1], dtype=float)
    history.validate_against(grid)
    z1 = (theta1 - prior.mean1) / prior.sd1
    z2 = (theta2 - prior.mean2) / prior.sd2
    v = (
        -0.5 * (z1 * z1 + z2 * z2)
        - math.log(2.0 * math.pi)
        - math.log(prior.sd1 * prior.sd2)
    )
    ratios = grid.log_ratios()
    slope = np.exp(theta2)
    for c in history.cohorts:
        z = theta1 + slope * ratios[c.dose_index]
        v = v + (
            gammaln(c.n_patients + 1)
            - gammaln(c.dlt_count + 1)
            - gammaln(c.n_patients - c.dlt_count + 1)
            + c.dlt_count * z
            - c.n_patients * np.logaddexp(0.0, z)
        )
    return v


def sample_posterior(
    history: TrialHistory,
    grid: DoseGrid,
    prior: PriorSpec,
    config: McmcConfig,
) -> PosteriorSamples:
    """Draw from the posterior with the adaptive Metropolis chain.

    Fully reproducible: the random streams are pre-generated from
    ``config.seed`` and the chain itself is deterministic given them. Raises
    SamplerFailureError if the posterior is non-finite at the start or the
    post-burn-in acceptance rate falls outside [0.1, 0.6].
    """
    history.validate_against(grid)
    log_ratios, y, n, log_coef = _aggregate(history, grid)
    const = log_coef - math.log(2.0 * math.pi) - math.log(prior.sd1 * prior.sd2)

    total = config.burn_in + config.kept * config.thin
    rng = np.random.default_rng(config.seed)
    normals = rng.standard_normal((total, 2))
    unifs = rng.random(total)
    out1 = np.empty(config.kept)
    out2 = np.empty(config.kept)

    rate, err = _kernels.run_chain(
        prior.mean1,
        prior.mean2,
        log_ratios,
        y,
        n,
        prior.mean1,
        prior.sd1,
        prior.mean2,
        prior.sd2,
        const,
        config.burn_in,
        config.kept,
        config.thin,
        config.target_acceptance,
        normals,
        unifs,
        out1,
        out2,
    )
    if err != 0:
        raise SamplerFailureError("log posterior is non-finite at the initial state")
    if not (0.1 <= rate <= 0.6):
        raise SamplerFailureError(
            f"acceptance rate {rate:.3f} outside the trusted band [0.1, 0.6]"
        )
    return PosteriorSamples(
        theta1=out1, theta2=out2, acceptance_rate=float(rate), seed=config.seed
    )


@dataclass(frozen=True, eq=False)
class OracleTable:
    """Quadrature results: per-dose interval masses and posterior mean DLT."""

    doses: tuple[float, ...]
    under: np.ndarray
    target: np.ndarray
    over: np.ndarray
    mean_dlt: np.ndarray

    def interval_probs(self) -> np.ndarray:
        """(n_doses, 3) array of [under, target, over] columns."""
        return np.column_stack([self.under, self.target, self.over])


def grid_posterior_oracle(
    history: TrialHistory,
    grid: DoseGrid,
    prior: PriorSpec,
    intervals: ToxicityIntervals | None = None,
    resolution: tuple[int, int] = (400, 400),
) -> OracleTable:
    """Deterministic posterior summaries by trapezoid quadrature.

    Integrates the joint density over the rectangle mean +/- 6 sd in each
    prior coordinate on a resolution[0] x resolution[1] mesh (at least 200
    points per axis), then accumulates normalised mass into the Under/Target/
    Over intervals at every grid dose. No randomness anywhere.
    """
    if intervals is None:
        intervals = ToxicityIntervals()
    n1, n2 = resolution
    if n1 < 200 or n2 < 200:
        raise InvalidArgumentError("oracle resolution must be at least 200 x 200")
    history.validate_against(grid)

    th1 = np.linspace(prior.mean1 - 6 * prior.sd1, prior.mean1 + 6 * prior.sd1, n1)
    th2 = np.linspace(prior.mean2 - 6 * prior.sd2, prior.mean2 + 6 * prior.sd2, n2)
    z1 = (th1 - prior.mean1) / prior.sd1
    z2 = (th2 - prior.mean2) / prior.sd2
    lp = -0.5 * (z1 * z1)[:, None] + -0.5 * (z2 * z2)[None, :]
    ratios = grid.log_ratios()
    slope = np.exp(th2)[None, :]
    for c in history.cohorts:
        z = th1[:, None] + slope * ratios[c.dose_index]
        lp += c.dlt_count * z - c.n_patients * np.logaddexp(0.0, z)

    w1 = np.ones(n1)
    w1[0] = w1[-1] = 0.5
    w2 = np.ones(n2)
    w2[0] = w2[-1] = 0.5
    dens = np.exp(lp - lp.max()) * (w1[:, None] * w2[None, :])
    total = dens.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise OracleFailureError("posterior mass on the quadrature grid is degenerate")
    mass = dens / total

    k = len(grid)
    under = np.empty(k)
    target = np.empty(k)
    over = np.empty(k)
    mean_dlt = np.empty(k)
    for d in range(k):
        p = expit(th1[:, None] + slope * ratios[d])
        um = p < intervals.underdose_max
        om = p > intervals.overdose_min
        under[d] = mass[um].sum()
        over[d] = mass[om].sum()
        target[d] = mass[~um & ~om].sum()
        mean_dlt[d] = (mass * p).sum()
    return OracleTable(
        doses=grid.doses, under=under, target=target, over=over, mean_dlt=mean_dlt
    )
