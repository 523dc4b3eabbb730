"""Dose-escalation decisions on top of the posterior.

Per assessment the flow is: draw a burden multiplier delta for every retained
posterior draw, compute burdened interval probabilities at each grid dose,
then pick the next dose by (a) the escalation rule at the current dose, else
(b) overdose-controlled selection, subject to (c) the no-skip constraint.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logit

from .errors import InvalidArgumentError
from .inference import PosteriorSamples
from .model import (
    DoseGrid,
    ToxicityIntervals,
    TrialHistory,
    burdened_dlt_probability,
)


class EscalationRule(str, Enum):
    """Which posterior comparison is allowed to force a one-level escalation.

    PLAIN compares the underdosing and overdosing masses directly; SCALED
    first divides each mass by the width-normalising constants (underdosing by
    the underdose boundary, overdosing by one minus the overdose boundary).
    """

    PLAIN = "rule1"
    SCALED = "rule2"


class Rationale(str, Enum):
    ESCALATED_BY_RULE = "EscalatedByRule"
    EWOC_SELECTION = "EwocSelection"
    NO_SKIP_CAPPED = "NoSkipCapped"


@dataclass(frozen=True)
class DecisionConfig:
    """Knobs of the escalation policy.

    alpha weights the escalation rule (higher alpha demands more confidence
    before escalating); omega scales the burden multiplier's reach; gamma is
    the overdose-control quantile; no_skip forbids jumping past one level
    above the highest dose tested so far.
    """

    alpha: float = 0.35
    omega: float = 0.55
    gamma: float = 0.25
    rule: EscalationRule = EscalationRule.PLAIN
    no_skip: bool = True
    burden_enabled: bool = True

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise InvalidArgumentError("alpha must be in (0, 1)")
        if not (0.0 <= self.omega <= 1.0):
            raise InvalidArgumentError("omega must be in [0, 1]")
        if not (0.0 < self.gamma < 1.0):
            raise InvalidArgumentError("gamma must be in (0, 1)")
        if not isinstance(self.rule, EscalationRule):
            object.__setattr__(self, "rule", EscalationRule(self.rule))


@dataclass(frozen=True)
class Recommendation:
    """One assessment's output: the chosen dose and why, plus the evidence."""

    dose_index: int
    rationale: Rationale
    interval_probs: tuple[tuple[float, float, float], ...]
    mtd_quantile: float


def sample_delta(
    burdened: int, total: int, omega: float, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Draw burden multipliers given ``burdened`` of ``total`` patients.

    delta ~ Uniform(max(0, omega*(burdened-1)/total), omega*burdened/total),
    one draw per posterior draw. Zero burden (or an empty trial) gives exact
    zeros. Always consumes the generator the same way for a given size, so
    toggling omega never shifts any other stream.
    """
    if not (0.0 <= omega <= 1.0):
        raise InvalidArgumentError("omega must be in [0, 1]")
    if total < 0 or burdened < 0 or burdened > max(total, 0):
        raise InvalidArgumentError(
            f"burden counts out of range: {burdened} of {total}"
        )
    if total == 0:
        return np.zeros(size)
    lo = max(0.0, omega * (burdened - 1) / total)
    hi = omega * burdened / total
    return rng.uniform(lo, hi, size)


def interval_probabilities(
    samples: PosteriorSamples,
    deltas: np.ndarray,
    grid: DoseGrid,
    intervals: ToxicityIntervals,
) -> np.ndarray:
    """Posterior mass of Under/Target/Over at every grid dose.

    Returns shape (n_doses, 3) with columns [under, target, over]. ``deltas``
    pairs one burden multiplier with each retained draw; pass zeros to get the
    plain-curve probabilities.
    """
    doses = np.asarray(grid.doses)[:, None]
    p = burdened_dlt_probability(samples.thetas, deltas, doses, grid.ref_dose)
    under_mask = p < intervals.underdose_max
    over_mask = p > intervals.overdose_min
    under = under_mask.mean(axis=1)
    over = over_mask.mean(axis=1)
    target = (~under_mask & ~over_mask).mean(axis=1)
    return np.column_stack([under, target, over])


def rule_allows_escalation(
    p_under: float,
    p_over: float,
    alpha: float,
    rule: EscalationRule,
    intervals: ToxicityIntervals,
) -> bool:
    """Escalation test at the current dose; strict inequality, so ties hold."""
    if rule is EscalationRule.PLAIN:
        return (1.0 - alpha) * p_under > alpha * p_over
    return (1.0 - alpha) * p_under / intervals.underdose_max > alpha * p_over / (
        1.0 - intervals.overdose_min
    )


def mtd_samples(
    samples: PosteriorSamples,
    deltas: np.ndarray,
    intervals: ToxicityIntervals,
    grid: DoseGrid,
) -> np.ndarray:
    """Per-draw dose at which the burdened curve hits the target DLT rate.

    Solves logit(target) = theta1 + |delta*theta1| + exp(theta2)*log(d/ref)
    for d.
    """
    t1 = samples.theta1
    num = logit(intervals.target) - t1 - np.abs(deltas * t1)
    # near-flat curves legitimately overflow to an infinite MTD
    with np.errstate(over="ignore"):
        return grid.ref_dose * np.exp(num / np.exp(samples.theta2))


def expected_loss(
    candidates: np.ndarray, mtd_draws: np.ndarray, gamma: float
) -> np.ndarray:
    """Mean asymmetric linear loss of each candidate dose.

    Dosing below the true maximum tolerated dose costs gamma per unit of dose,
    dosing above costs (1 - gamma); with gamma < 0.5 overdosing is the more
    expensive mistake and the continuous minimiser is the gamma-quantile of
    the MTD distribution.
    """
    candidates = np.atleast_1d(np.asarray(candidates, dtype=float))
    out = np.empty(len(candidates))
    for start in range(0, len(candidates), 256):
        block = candidates[start : start + 256, None]
        diff = block - mtd_draws[None, :]
        loss = np.where(diff > 0.0, (1.0 - gamma) * diff, -gamma * diff)
        out[start : start + 256] = loss.mean(axis=1)
    return out


def ewoc_select(
    samples: PosteriorSamples,
    deltas: np.ndarray,
    grid: DoseGrid,
    intervals: ToxicityIntervals,
    gamma: float,
) -> tuple[int, float]:
    """Overdose-controlled selection: the grid dose of least expected loss.

    Returns (grid index, gamma-quantile of the MTD draws). Exact ties in
    expected loss resolve to the lower dose.
    """
    draws = mtd_samples(samples, deltas, intervals, grid)
    quantile = float(np.quantile(draws, gamma))
    losses = expected_loss(np.asarray(grid.doses), draws, gamma)
    return int(np.argmin(losses)), quantile


def recommend_next(
    history: TrialHistory,
    samples: PosteriorSamples,
    deltas: np.ndarray,
    grid: DoseGrid,
    intervals: ToxicityIntervals,
    config: DecisionConfig,
    start_dose_index: int = 0,
) -> Recommendation:
    """Choose the next dose from the posterior evidence.

    If the escalation rule passes at the current (last administered) dose the
    recommendation is one level up, clamped to the top of the grid. Otherwise
    the overdose-controlled selection decides. The no-skip constraint then
    caps the result at one level above the highest dose tested; with no
    history at all the trial must open at ``start_dose_index``.
    """
    if not (0 <= start_dose_index < len(grid)):
        raise InvalidArgumentError("start_dose_index outside the grid")
    history.validate_against(grid)
    probs = interval_probabilities(samples, deltas, grid, intervals)
    ewoc_idx, quantile = ewoc_select(samples, deltas, grid, intervals, config.gamma)

    if len(history) == 0:
        choice, rationale = ewoc_idx, Rationale.EWOC_SELECTION
        if choice != start_dose_index:
            choice, rationale = start_dose_index, Rationale.NO_SKIP_CAPPED
    else:
        current = history.cohorts[-1].dose_index
        p_under, _, p_over = probs[current]
        if rule_allows_escalation(
            float(p_under), float(p_over), config.alpha, config.rule, intervals
        ):
            choice = min(current + 1, len(grid) - 1)
            rationale = Rationale.ESCALATED_BY_RULE
        else:
            choice, rationale = ewoc_idx, Rationale.EWOC_SELECTION
        if config.no_skip:
            cap = min(max(history.tested_indices()) + 1, len(grid) - 1)
            if choice > cap:
                choice, rationale = cap, Rationale.NO_SKIP_CAPPED

    return Recommendation(
        dose_index=choice,
        rationale=rationale,
        interval_probs=tuple(tuple(float(x) for x in row) for row in probs),
        mtd_quantile=quantile,
    )


def recommendation_to_dict(rec: Recommendation, grid: DoseGrid) -> dict:
    """JSON-ready view of a recommendation (used by the CLI and the service)."""
    return {
        "dose_index": rec.dose_index,
        "dose": grid.doses[rec.dose_index],
        "rationale": rec.rationale.value,
        "mtd_quantile": rec.mtd_quantile,
        "interval_probs": [
            {
                "dose": grid.doses[i],
                "under": row[0],
                "target": row[1],
                "over": row[2],
            }
            for i, row in enumerate(rec.interval_probs)
        ],
    }
