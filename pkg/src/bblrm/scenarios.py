"""Simulation scenarios: true toxicity curves to test the design against.

A scenario fixes, per grid dose, the true probability of a dose-limiting
toxicity and of a lower-grade (non-DLT) adverse event. Seven builtin
scenarios sweep the true maximum tolerated dose across the ladder; custom
scenarios load from JSON files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidArgumentError, ScenarioFormatError
from .model import CohortObservation

TRUE_MTD_DLT_RATE = 0.25


@dataclass(frozen=True)
class Scenario:
    """True per-dose toxicity profile used to generate trial outcomes.

    ``true_mtd_index`` marks the dose whose DLT probability equals the target
    rate exactly; it is derived automatically when exactly one dose qualifies.
    ``doses`` is optional documentation of the ladder the probabilities refer
    to; when present the simulator checks it against the trial's grid.
    """

    name: str
    dlt_probs: tuple[float, ...]
    ndltae_probs: tuple[float, ...]
    doses: tuple[float, ...] | None = None
    true_mtd_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "dlt_probs", tuple(float(p) for p in self.dlt_probs))
        object.__setattr__(
            self, "ndltae_probs", tuple(float(p) for p in self.ndltae_probs)
        )
        if self.doses is not None:
            object.__setattr__(self, "doses", tuple(float(d) for d in self.doses))
        if not self.name:
            raise InvalidArgumentError("scenario name must be non-empty")
        k = len(self.dlt_probs)
        if k == 0:
            raise InvalidArgumentError("scenario must cover at least one dose")
        if len(self.ndltae_probs) != k:
            raise InvalidArgumentError("ndltae_probs length does not match dlt_probs")
        if self.doses is not None and len(self.doses) != k:
            raise InvalidArgumentError("doses length does not match dlt_probs")
        for label, probs in (
            ("dlt_probs", self.dlt_probs),
            ("ndltae_probs", self.ndltae_probs),
        ):
            if any(not (0.0 <= p <= 1.0) for p in probs):
                raise InvalidArgumentError(f"{label} must lie in [0, 1]")
        if any(b < a for a, b in zip(self.dlt_probs, self.dlt_probs[1:])):
            raise InvalidArgumentError("dlt_probs must be non-decreasing")
        if self.true_mtd_index is None:
            hits = [i for i, p in enumerate(self.dlt_probs) if p == TRUE_MTD_DLT_RATE]
            if len(hits) == 1:
                object.__setattr__(self, "true_mtd_index", hits[0])
        else:
            if not (0 <= self.true_mtd_index < k):
                raise InvalidArgumentError("true_mtd_index outside the dose ladder")
            if self.dlt_probs[self.true_mtd_index] != TRUE_MTD_DLT_RATE:
                raise InvalidArgumentError(
                    "true_mtd_index must point at a dose with DLT probability "
                    f"{TRUE_MTD_DLT_RATE}"
                )

    def __len__(self) -> int:
        return len(self.dlt_probs)

    def toxic_indices(self, overdose_min: float = 0.33) -> tuple[int, ...]:
        """Doses whose true DLT probability exceeds the overdose boundary."""
        return tuple(i for i, p in enumerate(self.dlt_probs) if p > overdose_min)


def ndltae_prob_for(p_dlt: float) -> float:
    """Lower-grade adverse-event probability implied by a DLT probability.

    Step function used to construct scenario profiles: mild toxicity rises in
    plateaus as the DLT rate climbs, saturating at 0.95 once a dose is
    overdose territory.
    """
    if not (0.0 <= p_dlt <= 1.0):
        raise InvalidArgumentError(f"DLT probability must be in [0, 1], got {p_dlt}")
    if p_dlt < 0.05:
        return 0.10
    if p_dlt < 0.10:
        return 0.20
    if p_dlt < 0.15:
        return 0.35
    if p_dlt < 0.20:
        return 0.55
    if p_dlt <= 0.25:
        return 0.80
    if p_dlt < 0.30:
        return 0.90
    if p_dlt < 0.33:
        return 0.93
    return 0.95


# Per-dose true DLT probabilities of the seven builtin scenarios (doses 1..9
# of the default ladder). The rows shift the dose with 25% DLT, the true MTD,
# from position 2 up to position 8.
_DLT_TABLE = {
    "S1": (0.11, 0.25, 0.35, 0.41, 0.47, 0.52, 0.58, 0.63, 0.70),
    "S2": (0.08, 0.16, 0.25, 0.35, 0.42, 0.45, 0.53, 0.60, 0.70),
    "S3": (0.02, 0.05, 0.14, 0.25, 0.35, 0.42, 0.51, 0.60, 0.68),
    "S4": (0.03, 0.05, 0.10, 0.16, 0.25, 0.35, 0.40, 0.48, 0.55),
    "S5": (0.001, 0.005, 0.03, 0.10, 0.16, 0.25, 0.38, 0.50, 0.60),
    "S6": (0.01, 0.02, 0.05, 0.08, 0.11, 0.14, 0.25, 0.37, 0.47),
    "S7": (0.01, 0.03, 0.04, 0.05, 0.08, 0.11, 0.14, 0.25, 0.37),
}

# Companion non-DLT adverse-event probabilities. Kept as published values
# rather than regenerated through ndltae_prob_for: two entries (S6 dose 6 and
# S7 dose 7) sit one plateau above what the step function yields.
_NDLTAE_TABLE = {
    "S1": (0.35, 0.80, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95),
    "S2": (0.20, 0.55, 0.80, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95),
    "S3": (0.10, 0.20, 0.35, 0.80, 0.95, 0.95, 0.95, 0.95, 0.95),
    "S4": (0.10, 0.20, 0.35, 0.55, 0.80, 0.95, 0.95, 0.95, 0.95),
    "S5": (0.10, 0.10, 0.10, 0.35, 0.55, 0.80, 0.95, 0.95, 0.95),
    "S6": (0.10, 0.10, 0.20, 0.20, 0.35, 0.55, 0.80, 0.95, 0.95),
    "S7": (0.10, 0.10, 0.10, 0.20, 0.20, 0.35, 0.55, 0.80, 0.95),
}

BUILTIN_SCENARIO_NAMES = tuple(_DLT_TABLE)


def builtin_scenarios() -> tuple[Scenario, ...]:
    """The seven builtin scenarios, in name order S1..S7."""
    return tuple(get_scenario(name) for name in BUILTIN_SCENARIO_NAMES)


def get_scenario(name: str) -> Scenario:
    """Look up a builtin scenario by name (S1..S7)."""
    if name not in _DLT_TABLE:
        raise InvalidArgumentError(
            f"unknown scenario {name!r}; builtin names are "
            + ", ".join(BUILTIN_SCENARIO_NAMES)
        )
    return Scenario(
        name=name, dlt_probs=_DLT_TABLE[name], ndltae_probs=_NDLTAE_TABLE[name]
    )


def simulate_cohort(
    scenario: Scenario,
    dose_index: int,
    n_patients: int,
    rng,
) -> CohortObservation:
    """Draw one cohort's outcomes at a dose under the scenario's true curves.

    DLT and non-DLT counts are independent binomials, drawn in that fixed
    order so a given generator state always yields the same observation.
    """
    if not (0 <= dose_index < len(scenario)):
        raise InvalidArgumentError("dose_index outside the scenario's ladder")
    dlt = int(rng.binomial(n_patients, scenario.dlt_probs[dose_index]))
    ndltae = int(rng.binomial(n_patients, scenario.ndltae_probs[dose_index]))
    return CohortObservation(
        dose_index=dose_index,
        n_patients=n_patients,
        dlt_count=dlt,
        ndltae_count=ndltae,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    out = {
        "name": scenario.name,
        "dlt_probs": list(scenario.dlt_probs),
        "ndltae_probs": list(scenario.ndltae_probs),
    }
    if scenario.doses is not None:
        out["doses"] = list(scenario.doses)
    if scenario.true_mtd_index is not None:
        out["true_mtd_index"] = scenario.true_mtd_index
    return out


_SCENARIO_KEYS = {"name", "doses", "dlt_probs", "ndltae_probs", "true_mtd_index"}


def parse_scenario(obj, source: str = "scenario") -> Scenario:
    """Validate a decoded JSON object into a Scenario.

    Collects every problem into one ScenarioFormatError so the file can be
    fixed in a single pass.
    """
    items: list[str] = []
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{source}: expected a JSON object", [])
    for key in sorted(set(obj) - _SCENARIO_KEYS):
        items.append(f"unknown key {key!r}")
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        items.append("'name' must be a non-empty string")

    def prob_list(key, required):
        val = obj.get(key)
        if val is None:
            if required:
                items.append(f"'{key}' is required")
            return None
        if not isinstance(val, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in val
        ):
            items.append(f"'{key}' must be a list of numbers")
            return None
        return [float(x) for x in val]

    dlt = prob_list("dlt_probs", required=True)
    ndltae = prob_list("ndltae_probs", required=True)
    doses = prob_list("doses", required=False)
    if dlt is not None:
        bad = [p for p in dlt if not (0.0 <= p <= 1.0)]
        if bad:
            items.append(f"'dlt_probs' values outside [0, 1]: {bad}")
        elif any(b < a for a, b in zip(dlt, dlt[1:])):
            items.append("'dlt_probs' must be non-decreasing")
    if ndltae is not None:
        bad = [p for p in ndltae if not (0.0 <= p <= 1.0)]
        if bad:
            items.append(f"'ndltae_probs' values outside [0, 1]: {bad}")
    if dlt is not None and ndltae is not None and len(dlt) != len(ndltae):
        items.append(
            f"'ndltae_probs' has {len(ndltae)} entries but 'dlt_probs' has {len(dlt)}"
        )
    if doses is not None:
        if any(d <= 0 for d in doses):
            items.append("'doses' must be strictly positive")
        elif any(b <= a for a, b in zip(doses, doses[1:])):
            items.append("'doses' must be strictly increasing")
        if dlt is not None and len(doses) != len(dlt):
            items.append(
                f"'doses' has {len(doses)} entries but 'dlt_probs' has {len(dlt)}"
            )
    mtd_idx = obj.get("true_mtd_index")
    if mtd_idx is not None:
        if not isinstance(mtd_idx, int) or isinstance(mtd_idx, bool):
            items.append("'true_mtd_index' must be an integer")
        elif dlt is not None:
            if not (0 <= mtd_idx < len(dlt)):
                items.append("'true_mtd_index' outside the dose ladder")
            elif dlt[mtd_idx] != TRUE_MTD_DLT_RATE:
                items.append(
                    "'true_mtd_index' must point at a dose with DLT probability "
                    f"{TRUE_MTD_DLT_RATE}, found {dlt[mtd_idx]}"
                )
        mtd_idx = mtd_idx if isinstance(mtd_idx, int) else None

    if items:
        raise ScenarioFormatError(f"{source}: invalid scenario", items)
    try:
        return Scenario(
            name=name,
            dlt_probs=tuple(dlt),
            ndltae_probs=tuple(ndltae),
            doses=tuple(doses) if doses is not None else None,
            true_mtd_index=mtd_idx,
        )
    except InvalidArgumentError as exc:
        raise ScenarioFormatError(f"{source}: invalid scenario", [str(exc)]) from exc


def load_scenario_file(path) -> Scenario:
    """Read and validate a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioFormatError(f"{path}: cannot read file: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: not valid JSON: {exc}") from exc
    return parse_scenario(obj, source=str(path))
