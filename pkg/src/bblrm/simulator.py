"""Trial engine and batch simulator.

``evaluate`` is the single assessment engine: the simulated trial loop, the
command line, and the HTTP service all route through it, so a given history,
configuration, and seed produce one answer everywhere.

Seed discipline. Every random quantity derives from one integer through
named SeedSequence paths:

* batch seed   = sha256(master_seed, scenario name, alpha) truncated to 64 bits
* trial seed   = seq(batch_seed, trial_index)
* outcome rng  = seq(trial_seed, 0), consumed one cohort at a time
* assessment   = seq(trial_seed, 1, n_cohorts_observed), split further into
  seq(assessment, 0) for the sampler and seq(assessment, 1) for the burden
  multipliers.

The batch seed deliberately ignores omega: arms that differ only in the
burden setting see identical patient outcomes, which pairs the comparison and
makes an omega = 0 run reproduce a burden-disabled run bit for bit.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .decision import (
    DecisionConfig,
    Recommendation,
    recommend_next,
    recommendation_to_dict,
    sample_delta,
)
from .errors import (
    BatchFailureError,
    ConfigFormatError,
    HistoryFormatError,
    InvalidArgumentError,
)
from .inference import McmcConfig, PriorSpec, sample_posterior
from .model import (
    CohortObservation,
    DoseGrid,
    ToxicityIntervals,
    TrialHistory,
    burdened_dlt_probability,
)
from .scenarios import Scenario, simulate_cohort


@dataclass(frozen=True)
class TrialConfig:
    """Everything a trial needs besides data and seeds."""

    grid: DoseGrid = field(default_factory=DoseGrid)
    intervals: ToxicityIntervals = field(default_factory=ToxicityIntervals)
    prior: PriorSpec = field(default_factory=PriorSpec)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    decision: DecisionConfig = field(default_factory=DecisionConfig)
    cohort_size: int = 3
    max_cohorts: int = 9
    start_dose_index: int = 0

    def __post_init__(self):
        if self.cohort_size < 1:
            raise InvalidArgumentError("cohort_size must be at least 1")
        if self.max_cohorts < 1:
            raise InvalidArgumentError("max_cohorts must be at least 1")
        if not (0 <= self.start_dose_index < len(self.grid)):
            raise InvalidArgumentError("start_dose_index outside the grid")


def default_trial_config() -> TrialConfig:
    return TrialConfig()


def _uint64(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def batch_seed(master_seed: int, scenario_name: str, alpha: float) -> int:
    """Per-cell seed for (scenario, alpha); omega intentionally excluded."""
    key = f"{master_seed}|{scenario_name}|{alpha!r}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def trial_seed(batch_seed_value: int, trial_index: int) -> int:
    return _uint64(np.random.SeedSequence([batch_seed_value, trial_index]))


def assessment_seed(trial_seed_value: int, n_cohorts: int) -> int:
    """Seed of the assessment made once ``n_cohorts`` cohorts are on record."""
    return _uint64(np.random.SeedSequence([trial_seed_value, 1, n_cohorts]))


@dataclass(frozen=True, eq=False)
class Assessment:
    """One posterior evaluation: recommendation plus reporting extras."""

    recommendation: Recommendation
    bands: tuple[tuple[float, float, float], ...]
    acceptance_rate: float
    seed: int


def evaluate(history: TrialHistory, config: TrialConfig, seed: int) -> Assessment:
    """Assess a trial state: sample the posterior, recommend the next dose.

    ``bands`` holds the 2.5 / 50 / 97.5 percentiles of the per-dose DLT
    probability (burden included when enabled). Deterministic in (history,
    config, seed).
    """
    mcmc = replace(config.mcmc, seed=_uint64(np.random.SeedSequence([seed, 0])))
    samples = sample_posterior(history, config.grid, config.prior, mcmc)
    if config.decision.burden_enabled:
        burdened, total = history.ndltae_burden()
        delta_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        deltas = sample_delta(
            burdened, total, config.decision.omega, delta_rng, len(samples)
        )
    else:
        deltas = np.zeros(len(samples))
    rec = recommend_next(
        history,
        samples,
        deltas,
        config.grid,
        config.intervals,
        config.decision,
        config.start_dose_index,
    )
    doses = np.asarray(config.grid.doses)[:, None]
    p = burdened_dlt_probability(samples.thetas, deltas, doses, config.grid.ref_dose)
    q = np.quantile(p, [0.025, 0.5, 0.975], axis=1)
    bands = tuple(
        (float(q[0, d]), float(q[1, d]), float(q[2, d])) for d in range(len(config.grid))
    )
    return Assessment(
        recommendation=rec,
        bands=bands,
        acceptance_rate=samples.acceptance_rate,
        seed=seed,
    )


@dataclass(frozen=True)
class TrialRecord:
    """Complete audit of one simulated trial."""

    scenario: str
    trial_index: int
    seed: int
    cohorts: TrialHistory
    recommendations: tuple[Recommendation, ...]
    declared_mtd_index: int


def _check_scenario_grid(scenario: Scenario, config: TrialConfig) -> None:
    if len(scenario) != len(config.grid):
        raise InvalidArgumentError(
            f"scenario {scenario.name!r} covers {len(scenario)} doses but the "
            f"grid has {len(config.grid)}"
        )
    if scenario.doses is not None and scenario.doses != config.grid.doses:
        raise InvalidArgumentError(
            f"scenario {scenario.name!r} declares doses {scenario.doses}, "
            f"which differ from the grid {config.grid.doses}"
        )


def run_trial(
    scenario: Scenario,
    config: TrialConfig,
    seed: int,
    trial_index: int = 0,
) -> TrialRecord:
    """Simulate one trial to completion.

    Cohorts of ``config.cohort_size`` enter at the current dose, outcomes are
    drawn from the scenario's true curves, the posterior is re-assessed, and
    the recommendation doses the next cohort. After ``config.max_cohorts``
    cohorts the last recommendation is the declared maximum tolerated dose.
    """
    _check_scenario_grid(scenario, config)
    outcome_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    history = TrialHistory()
    current = config.start_dose_index
    recs: list[Recommendation] = []
    for _ in range(config.max_cohorts):
        obs = simulate_cohort(scenario, current, config.cohort_size, outcome_rng)
        history = TrialHistory(history.cohorts + (obs,))
        assessment = evaluate(history, config, assessment_seed(seed, len(history)))
        recs.append(assessment.recommendation)
        current = assessment.recommendation.dose_index
    return TrialRecord(
        scenario=scenario.name,
        trial_index=trial_index,
        seed=seed,
        cohorts=history,
        recommendations=tuple(recs),
        declared_mtd_index=current,
    )


@dataclass(frozen=True, eq=False)
class OperatingCharacteristics:
    """Batch summary over simulated trials of one (scenario, alpha, omega).

    Rates are fractions in [0, 1] over the trials that completed (at most
    0.1% may fail; more fails the batch). ``pct_true_mtd`` is NaN when the
    scenario defines no true MTD dose. ``selection_fractions`` aligns with
    the dose grid and records how often each dose was declared the MTD.
    """

    scenario: str
    alpha: float
    omega: float
    n_trials: int
    master_seed: int
    pct_toxic_mtd: float
    pct_true_mtd: float
    mean_patients_total: float
    mean_patients_at_toxic_doses: float
    selection_fractions: tuple[float, ...]
    n_errors: int = 0


def _trial_task(args):
    scenario, config, seed, index = args
    try:
        return index, run_trial(scenario, config, seed, index), None
    except Exception as exc:  # noqa: BLE001 - error rate is policed upstream
        return index, None, f"trial {index}: {type(exc).__name__}: {exc}"


def run_trials(
    scenario: Scenario,
    config: TrialConfig,
    n_trials: int,
    batch_seed_value: int,
    jobs: int = 1,
) -> tuple[list[TrialRecord], list[str]]:
    """Run a batch of trials; returns (completed records, error strings).

    Trial i always receives seed ``trial_seed(batch_seed_value, i)``, so the
    records are identical whatever ``jobs`` is; parallel workers only change
    wall-clock time.
    """
    if n_trials < 1:
        raise InvalidArgumentError("n_trials must be at least 1")
    if jobs < 1:
        raise InvalidArgumentError("jobs must be at least 1")
    _check_scenario_grid(scenario, config)
    tasks = [
        (scenario, config, trial_seed(batch_seed_value, i), i) for i in range(n_trials)
    ]
    results = []
    if jobs == 1:
        for t in tasks:
            results.append(_trial_task(t))
    else:
        chunk = max(1, n_trials // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=chunk))
    results.sort(key=lambda r: r[0])
    records = [r[1] for r in results if r[1] is not None]
    errors = [r[2] for r in results if r[2] is not None]
    return records, errors


def operating_characteristics(
    records: list[TrialRecord],
    scenario: Scenario,
    config: TrialConfig,
    n_trials: int,
    master_seed: int,
    n_errors: int = 0,
) -> OperatingCharacteristics:
    """Summarise a batch of trial records."""
    if not records:
        raise InvalidArgumentError("no completed trials to summarise")
    k = len(config.grid)
    counts = [0] * k
    toxic = set(scenario.toxic_indices(config.intervals.overdose_min))
    patients_total = 0
    patients_toxic = 0
    for rec in records:
        counts[rec.declared_mtd_index] += 1
        for c in rec.cohorts.cohorts:
            patients_total += c.n_patients
            if c.dose_index in toxic:
                patients_toxic += c.n_patients
    n_ok = len(records)
    fractions = tuple(c / n_ok for c in counts)
    pct_toxic = sum(fractions[i] for i in toxic) if toxic else 0.0
    if scenario.true_mtd_index is not None:
        pct_true = fractions[scenario.true_mtd_index]
    else:
        pct_true = float("nan")
    return OperatingCharacteristics(
        scenario=scenario.name,
        alpha=config.decision.alpha,
        omega=config.decision.omega,
        n_trials=n_trials,
        master_seed=master_seed,
        pct_toxic_mtd=pct_toxic,
        pct_true_mtd=pct_true,
        mean_patients_total=patients_total / n_ok,
        mean_patients_at_toxic_doses=patients_toxic / n_ok,
        selection_fractions=fractions,
        n_errors=n_errors,
    )


def run_batch(
    scenario: Scenario,
    config: TrialConfig,
    n_trials: int,
    master_seed: int,
    jobs: int = 1,
    record_hook=None,
) -> OperatingCharacteristics:
    """Simulate one (scenario, alpha) cell and summarise it.

    ``record_hook``, when given, receives every completed TrialRecord in
    trial-index order (useful for audit logs). Raises BatchFailureError when
    more than 0.1% of trials error out.
    """
    seed = batch_seed(master_seed, scenario.name, config.decision.alpha)
    records, errors = run_trials(scenario, config, n_trials, seed, jobs)
    if len(errors) > 0.001 * n_trials:
        preview = "; ".join(errors[:5])
        raise BatchFailureError(
            f"{len(errors)} of {n_trials} trials failed in scenario "
            f"{scenario.name!r}: {preview}"
        )
    if record_hook is not None:
        for rec in records:
            record_hook(rec)
    return operating_characteristics(
        records, scenario, config, n_trials, master_seed, n_errors=len(errors)
    )


def sweep(
    scenarios: list[Scenario],
    alphas: list[float],
    omegas: list[float],
    config: TrialConfig,
    n_trials: int,
    master_seed: int,
    jobs: int = 1,
    record_hook=None,
) -> list[OperatingCharacteristics]:
    """Cross product of scenarios x alphas x omegas, one batch per cell.

    Rows come back in iteration order (scenario outermost, omega innermost).
    Cells sharing a scenario and alpha share patient outcomes regardless of
    omega, so burden settings are compared on identical trials.
    """
    if not scenarios or not alphas or not omegas:
        raise InvalidArgumentError("sweep needs at least one scenario, alpha, omega")
    out = []
    for scenario in scenarios:
        for alpha in alphas:
            for omega in omegas:
                cell_cfg = replace(
                    config,
                    decision=replace(config.decision, alpha=alpha, omega=omega),
                )
                out.append(
                    run_batch(
                        scenario,
                        cell_cfg,
                        n_trials,
                        master_seed,
                        jobs,
                        record_hook=record_hook,
                    )
                )
    return out


# --- serialisation -----------------------------------------------------------

def _fmt_dose(d: float) -> str:
    return f"{d:g}"


def oc_csv_header(grid: DoseGrid) -> list[str]:
    return [
        "scenario",
        "alpha",
        "omega",
        "n_trials",
        "master_seed",
        "pct_toxic_mtd",
        "pct_true_mtd",
        "mean_patients_total",
        "mean_patients_at_toxic_doses",
    ] + [f"sel_{_fmt_dose(d)}" for d in grid.doses]


def oc_csv_row(oc: OperatingCharacteristics) -> list[str]:
    pct_true = "" if np.isnan(oc.pct_true_mtd) else repr(oc.pct_true_mtd)
    return [
        oc.scenario,
        repr(oc.alpha),
        repr(oc.omega),
        str(oc.n_trials),
        str(oc.master_seed),
        repr(oc.pct_toxic_mtd),
        pct_true,
        repr(oc.mean_patients_total),
        repr(oc.mean_patients_at_toxic_doses),
    ] + [repr(f) for f in oc.selection_fractions]


def write_oc_csv(path, ocs: list[OperatingCharacteristics], grid: DoseGrid) -> None:
    """Write operating characteristics as CSV, one row per batch.

    Float cells use repr so a rerun with identical inputs produces identical
    bytes.
    """
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(oc_csv_header(grid))
        for oc in ocs:
            writer.writerow(oc_csv_row(oc))


def trial_record_to_dict(record: TrialRecord, grid: DoseGrid) -> dict:
    return {
        "scenario": record.scenario,
        "trial_index": record.trial_index,
        "seed": record.seed,
        "cohorts": [
            {
                "dose_index": c.dose_index,
                "dose": grid.doses[c.dose_index],
                "n_patients": c.n_patients,
                "dlt_count": c.dlt_count,
                "ndltae_count": c.ndltae_count,
            }
            for c in record.cohorts.cohorts
        ],
        "recommendations": [
            recommendation_to_dict(r, grid) for r in record.recommendations
        ],
        "declared_mtd_index": record.declared_mtd_index,
        "declared_dose": grid.doses[record.declared_mtd_index],
    }


def assessment_to_dict(assessment: Assessment, grid: DoseGrid) -> dict:
    """JSON-ready view of an assessment; shared by the CLI and the service."""
    return {
        "recommendation": recommendation_to_dict(assessment.recommendation, grid),
        "bands": [
            {"dose": d, "lower": b[0], "median": b[1], "upper": b[2]}
            for d, b in zip(grid.doses, assessment.bands)
        ],
        "acceptance_rate": assessment.acceptance_rate,
        "seed": assessment.seed,
    }


_COHORT_KEYS = {"dose_index", "dose", "n_patients", "dlt_count", "ndltae_count"}


def cohort_from_dict(obj, grid: DoseGrid, source: str = "cohort") -> CohortObservation:
    """Validate one cohort payload; dose given by index or by grid value."""
    items: list[str] = []
    if not isinstance(obj, dict):
        raise HistoryFormatError(f"{source}: expected an object", [])
    for key in sorted(set(obj) - _COHORT_KEYS):
        items.append(f"unknown key {key!r}")
    if ("dose_index" in obj) == ("dose" in obj):
        items.append("exactly one of 'dose_index' or 'dose' is required")
    idx = None
    if "dose_index" in obj:
        v = obj["dose_index"]
        if isinstance(v, bool) or not isinstance(v, int):
            items.append("'dose_index' must be an integer")
        elif not (0 <= v < len(grid)):
            items.append(f"'dose_index' {v} outside grid of {len(grid)} doses")
        else:
            idx = v
    elif "dose" in obj:
        v = obj["dose"]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            items.append("'dose' must be a number")
        else:
            try:
                idx = grid.index_of(float(v))
            except InvalidArgumentError:
                items.append(f"'dose' {v} is not on the grid {list(grid.doses)}")
    counts = {}
    for key in ("n_patients", "dlt_count", "ndltae_count"):
        v = obj.get(key)
        if isinstance(v, bool) or not isinstance(v, int):
            items.append(f"'{key}' must be an integer")
        else:
            counts[key] = v
    if len(counts) == 3:
        if counts["n_patients"] < 1:
            items.append("'n_patients' must be at least 1")
        else:
            for key in ("dlt_count", "ndltae_count"):
                if not (0 <= counts[key] <= counts["n_patients"]):
                    items.append(
                        f"'{key}' must lie in [0, n_patients={counts['n_patients']}]"
                    )
    if items:
        raise HistoryFormatError(f"{source}: invalid cohort", items)
    return CohortObservation(
        dose_index=idx,
        n_patients=counts["n_patients"],
        dlt_count=counts["dlt_count"],
        ndltae_count=counts["ndltae_count"],
    )


def history_from_dict(obj, grid: DoseGrid, source: str = "history") -> TrialHistory:
    """Validate a history payload: {"cohorts": [...]} or a bare list."""
    if isinstance(obj, dict):
        unknown = sorted(set(obj) - {"cohorts"})
        if unknown:
            raise HistoryFormatError(
                f"{source}: invalid history", [f"unknown key {k!r}" for k in unknown]
            )
        obj = obj.get("cohorts")
    if not isinstance(obj, list):
        raise HistoryFormatError(
            f"{source}: expected a list of cohorts or an object with 'cohorts'", []
        )
    items: list[str] = []
    cohorts = []
    for i, entry in enumerate(obj):
        try:
            cohorts.append(cohort_from_dict(entry, grid, source=f"cohort {i}"))
        except HistoryFormatError as exc:
            items.extend(f"cohort {i}: {it}" for it in (exc.items or [str(exc)]))
    if items:
        raise HistoryFormatError(f"{source}: invalid history", items)
    return TrialHistory(tuple(cohorts))


def config_to_dict(config: TrialConfig) -> dict:
    return {
        "doses": list(config.grid.doses),
        "ref_dose": config.grid.ref_dose,
        "intervals": {
            "underdose_max": config.intervals.underdose_max,
            "overdose_min": config.intervals.overdose_min,
            "target": config.intervals.target,
        },
        "prior": {
            "mean1": config.prior.mean1,
            "sd1": config.prior.sd1,
            "mean2": config.prior.mean2,
            "sd2": config.prior.sd2,
        },
        "mcmc": {
            "burn_in": config.mcmc.burn_in,
            "kept": config.mcmc.kept,
            "thin": config.mcmc.thin,
            "target_acceptance": config.mcmc.target_acceptance,
        },
        "decision": {
            "alpha": config.decision.alpha,
            "omega": config.decision.omega,
            "gamma": config.decision.gamma,
            "rule": config.decision.rule.value,
            "no_skip": config.decision.no_skip,
            "burden_enabled": config.decision.burden_enabled,
        },
        "cohort_size": config.cohort_size,
        "max_cohorts": config.max_cohorts,
        "start_dose_index": config.start_dose_index,
    }


_TOP_KEYS = {
    "doses",
    "ref_dose",
    "intervals",
    "prior",
    "mcmc",
    "decision",
    "cohort_size",
    "max_cohorts",
    "start_dose_index",
}
_SECTION_KEYS = {
    "intervals": {"underdose_max", "overdose_min", "target"},
    "prior": {"mean1", "sd1", "mean2", "sd2"},
    "mcmc": {"burn_in", "kept", "thin", "target_acceptance"},
    "decision": {"alpha", "omega", "gamma", "rule", "no_skip", "burden_enabled"},
}
_INT_FIELDS = {"burn_in", "kept", "thin", "cohort_size", "max_cohorts", "start_dose_index"}
_BOOL_FIELDS = {"no_skip", "burden_enabled"}


def config_from_dict(obj, source: str = "config") -> TrialConfig:
    """Build a TrialConfig from decoded JSON; every key optional.

    Unknown keys and type mismatches are collected into one ConfigFormatError.
    """
    items: list[str] = []
    if not isinstance(obj, dict):
        raise ConfigFormatError(f"{source}: expected a JSON object", [])
    for key in sorted(set(obj) - _TOP_KEYS):
        items.append(f"unknown key {key!r}")

    def number(section, key, val):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            items.append(f"'{section}.{key}' must be a number" if section else f"'{key}' must be a number")
            return None
        return val

    def section(name):
        val = obj.get(name)
        if val is None:
            return {}
        if not isinstance(val, dict):
            items.append(f"'{name}' must be an object")
            return {}
        out = {}
        for key in sorted(set(val) - _SECTION_KEYS[name]):
            items.append(f"unknown key '{name}.{key}'")
        for key in _SECTION_KEYS[name] & set(val):
            v = val[key]
            if key == "rule":
                if not isinstance(v, str) or v not in ("rule1", "rule2"):
                    items.append("'decision.rule' must be 'rule1' or 'rule2'")
                    continue
            elif key in _BOOL_FIELDS:
                if not isinstance(v, bool):
                    items.append(f"'{name}.{key}' must be a boolean")
                    continue
            elif key in _INT_FIELDS:
                if isinstance(v, bool) or not isinstance(v, int):
                    items.append(f"'{name}.{key}' must be an integer")
                    continue
            else:
                if number(name, key, v) is None:
                    continue
            out[key] = v
        return out

    doses = obj.get("doses")
    if doses is not None and (
        not isinstance(doses, list)
        or not all(
            isinstance(d, (int, float)) and not isinstance(d, bool) for d in doses
        )
    ):
        items.append("'doses' must be a list of numbers")
        doses = None
    ref_dose = obj.get("ref_dose")
    if ref_dose is not None:
        ref_dose = number(None, "ref_dose", ref_dose)
    scalars = {}
    for key in ("cohort_size", "max_cohorts", "start_dose_index"):
        if key in obj:
            v = obj[key]
            if isinstance(v, bool) or not isinstance(v, int):
                items.append(f"'{key}' must be an integer")
            else:
                scalars[key] = v
    sections = {name: section(name) for name in _SECTION_KEYS}
    if items:
        raise ConfigFormatError(f"{source}: invalid configuration", items)

    grid_kwargs = {}
    if doses is not None:
        grid_kwargs["doses"] = tuple(doses)
    if ref_dose is not None:
        grid_kwargs["ref_dose"] = ref_dose
    try:
        return TrialConfig(
            grid=DoseGrid(**grid_kwargs),
            intervals=ToxicityIntervals(**sections["intervals"]),
            prior=PriorSpec(**sections["prior"]),
            mcmc=McmcConfig(**sections["mcmc"]),
            decision=DecisionConfig(**sections["decision"]),
            **scalars,
        )
    except InvalidArgumentError as exc:
        raise ConfigFormatError(f"{source}: invalid configuration", [str(exc)]) from exc
