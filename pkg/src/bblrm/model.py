"""Dose-toxicity model: two-parameter logistic link, burdened variant,
toxicity-interval classification, and the trial data containers.

The dose-limiting-toxicity (DLT) probability at dose ``d`` follows a logistic
curve in log-dose, parameterised by the log-odds of toxicity at a reference
dose (``theta1``) and the log of the curve slope (``theta2``)::

    logit p(d) = theta1 + exp(theta2) * log(d / ref_dose)

The burdened variant inflates the log-odds by ``|delta * theta1|``, where
``delta`` summarises the observed burden of lower-grade toxicity; ``delta = 0``
recovers the plain curve exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import expit

from .errors import InvalidArgumentError

DEFAULT_DOSES = (2.0, 4.0, 8.0, 16.0, 22.0, 28.0, 40.0, 54.0, 70.0)
DEFAULT_REF_DOSE = 16.0


class ThetaSample(NamedTuple):
    """One draw of the curve parameters.

    theta1 is the log-odds of DLT at the reference dose, theta2 the log of the
    slope on log-dose. Either field may also hold an ndarray of draws; the
    model functions broadcast.
    """

    theta1: float
    theta2: float


@dataclass(frozen=True)
class DoseGrid:
    """Ordered ladder of administrable doses plus the reference dose.

    The reference dose need not be a grid member, although it is one in the
    default ladder.
    """

    doses: tuple[float, ...] = DEFAULT_DOSES
    ref_dose: float = DEFAULT_REF_DOSE

    def __post_init__(self):
        doses = tuple(float(d) for d in self.doses)
        object.__setattr__(self, "doses", doses)
        object.__setattr__(self, "ref_dose", float(self.ref_dose))
        if len(doses) == 0:
            raise InvalidArgumentError("dose grid must contain at least one dose")
        if any(d <= 0 for d in doses):
            raise InvalidArgumentError("doses must be strictly positive")
        if any(b <= a for a, b in zip(doses, doses[1:])):
            raise InvalidArgumentError("doses must be strictly increasing")
        if self.ref_dose <= 0:
            raise InvalidArgumentError("ref_dose must be strictly positive")

    def __len__(self) -> int:
        return len(self.doses)

    def log_ratios(self) -> np.ndarray:
        """log(d / ref_dose) for every grid dose."""
        return np.log(np.asarray(self.doses) / self.ref_dose)

    def index_of(self, dose: float) -> int:
        """Exact-match lookup of a dose value's grid index."""
        for i, d in enumerate(self.doses):
            if d == dose:
                return i
        raise InvalidArgumentError(f"dose {dose} is not on the grid")


def default_dose_grid() -> DoseGrid:
    return DoseGrid()


@dataclass(frozen=True)
class ToxicityIntervals:
    """Boundaries splitting DLT probability into Under / Target / Over.

    Probabilities below ``underdose_max`` are underdosing, above
    ``overdose_min`` overdosing, and the closed interval between them (both
    boundaries included) is the target band. ``target`` is the probability the
    maximum tolerated dose is defined to carry.
    """

    underdose_max: float = 0.16
    overdose_min: float = 0.33
    target: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.underdose_max < self.overdose_min < 1.0):
            raise InvalidArgumentError(
                "need 0 < underdose_max < overdose_min < 1, got "
                f"{self.underdose_max}, {self.overdose_min}"
            )
        if not (self.underdose_max <= self.target <= self.overdose_min):
            raise InvalidArgumentError(
                "target must lie inside the target band, got "
                f"{self.target} outside [{self.underdose_max}, {self.overdose_min}]"
            )


class Classification(Enum):
    UNDERDOSE = "Under"
    TARGET = "Target"
    OVERDOSE = "Over"


def classify(p: float, intervals: ToxicityIntervals) -> Classification:
    """Label a DLT probability by toxicity interval. Boundaries are Target."""
    if not (0.0 <= p <= 1.0) or not np.isfinite(p):
        raise InvalidArgumentError(f"probability must be in [0, 1], got {p}")
    if p < intervals.underdose_max:
        return Classification.UNDERDOSE
    if p > intervals.overdose_min:
        return Classification.OVERDOSE
    return Classification.TARGET


@dataclass(frozen=True)
class CohortObservation:
    """Outcome of one dosed cohort.

    dlt_count patients had a dose-limiting toxicity; ndltae_count had at least
    one lower-grade (non-DLT) adverse event. The two counts are marginal, not
    nested, so each independently lies in [0, n_patients].
    """

    dose_index: int
    n_patients: int
    dlt_count: int
    ndltae_count: int

    def __post_init__(self):
        if self.dose_index < 0:
            raise InvalidArgumentError("dose_index must be non-negative")
        if self.n_patients <= 0:
            raise InvalidArgumentError("cohort must contain at least one patient")
        if not (0 <= self.dlt_count <= self.n_patients):
            raise InvalidArgumentError(
                f"dlt_count {self.dlt_count} outside [0, {self.n_patients}]"
            )
        if not (0 <= self.ndltae_count <= self.n_patients):
            raise InvalidArgumentError(
                f"ndltae_count {self.ndltae_count} outside [0, {self.n_patients}]"
            )


@dataclass(frozen=True)
class TrialHistory:
    """Chronological record of dosed cohorts."""

    cohorts: tuple[CohortObservation, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "cohorts", tuple(self.cohorts))

    def __len__(self) -> int:
        return len(self.cohorts)

    def validate_against(self, grid: DoseGrid) -> None:
        for i, c in enumerate(self.cohorts):
            if c.dose_index >= len(grid):
                raise InvalidArgumentError(
                    f"cohort {i}: dose_index {c.dose_index} outside grid of size {len(grid)}"
                )

    def total_patients(self) -> int:
        return sum(c.n_patients for c in self.cohorts)

    def ndltae_burden(self) -> tuple[int, int]:
        """(patients with a non-DLT adverse event, total patients)."""
        s = sum(c.ndltae_count for c in self.cohorts)
        return s, self.total_patients()

    def tested_indices(self) -> tuple[int, ...]:
        return tuple(sorted({c.dose_index for c in self.cohorts}))

    @staticmethod
    def from_tuples(rows: Sequence[tuple[int, int, int, int]]) -> "TrialHistory":
        """Build from (dose_index, n_patients, dlt_count, ndltae_count) rows."""
        return TrialHistory(tuple(CohortObservation(*r) for r in rows))


def _as_arrays(theta) -> tuple[np.ndarray, np.ndarray]:
    theta1, theta2 = theta
    return np.asarray(theta1, dtype=float), np.asarray(theta2, dtype=float)


def dlt_log_odds(theta, dose, ref_dose: float = DEFAULT_REF_DOSE):
    """Log-odds of DLT at ``dose`` under the plain two-parameter curve.

    ``theta`` is a (theta1, theta2) pair; fields and ``dose`` broadcast.
    """
    theta1, theta2 = _as_arrays(theta)
    dose = np.asarray(dose, dtype=float)
    if ref_dose <= 0:
        raise InvalidArgumentError("ref_dose must be strictly positive")
    if np.any(dose <= 0):
        raise InvalidArgumentError("dose must be strictly positive")
    return theta1 + np.exp(theta2) * np.log(dose / ref_dose)


def dlt_probability(theta, dose, ref_dose: float = DEFAULT_REF_DOSE):
    """DLT probability at ``dose`` under the plain curve."""
    return expit(dlt_log_odds(theta, dose, ref_dose))


def burdened_log_odds(theta, delta, dose, ref_dose: float = DEFAULT_REF_DOSE):
    """Log-odds of DLT with the burden adjustment ``|delta * theta1|`` added.

    ``delta`` in [0, 1] broadcasts against the theta fields. The adjustment is
    non-negative, so the burdened curve never sits below the plain one.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0) or np.any(delta > 1):
        raise InvalidArgumentError("delta must lie in [0, 1]")
    theta1, _ = _as_arrays(theta)
    return dlt_log_odds(theta, dose, ref_dose) + np.abs(delta * theta1)


def burdened_dlt_probability(theta, delta, dose, ref_dose: float = DEFAULT_REF_DOSE):
    """DLT probability at ``dose`` with the burden adjustment applied."""
    return expit(burdened_log_odds(theta, delta, dose, ref_dose))
