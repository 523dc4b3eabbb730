"""Burdened Bayesian logistic regression for phase I dose finding.

Model-based dose escalation that pools dose-limiting toxicities with the
burden of lower-grade adverse events: a two-parameter logistic curve over
log-dose, a posterior sampled by adaptive Metropolis (with a deterministic
quadrature oracle as a cross-check), overdose-controlled dose selection, and
a simulator for operating characteristics across toxicity scenarios.
"""

from .errors import (
    BatchFailureError,
    BblrmError,
    ConfigFormatError,
    FormatError,
    HistoryFormatError,
    InvalidArgumentError,
    OracleFailureError,
    SamplerFailureError,
    ScenarioFormatError,
)
from .model import (
    DEFAULT_DOSES,
    DEFAULT_REF_DOSE,
    Classification,
    CohortObservation,
    DoseGrid,
    ThetaSample,
    ToxicityIntervals,
    TrialHistory,
    burdened_dlt_probability,
    burdened_log_odds,
    classify,
    default_dose_grid,
    dlt_log_odds,
    dlt_probability,
)
from .inference import (
    McmcConfig,
    OracleTable,
    PosteriorSamples,
    PriorSpec,
    grid_posterior_oracle,
    log_posterior,
    sample_posterior,
)
from .decision import (
    DecisionConfig,
    EscalationRule,
    Rationale,
    Recommendation,
    ewoc_select,
    expected_loss,
    interval_probabilities,
    mtd_samples,
    recommend_next,
    recommendation_to_dict,
    rule_allows_escalation,
    sample_delta,
)
from .scenarios import (
    BUILTIN_SCENARIO_NAMES,
    Scenario,
    builtin_scenarios,
    get_scenario,
    load_scenario_file,
    ndltae_prob_for,
    parse_scenario,
    scenario_to_dict,
    simulate_cohort,
)
from .simulator import (
    Assessment,
    OperatingCharacteristics,
    TrialConfig,
    TrialRecord,
    assessment_seed,
    assessment_to_dict,
    batch_seed,
    config_from_dict,
    config_to_dict,
    default_trial_config,
    evaluate,
    history_from_dict,
    operating_characteristics,
    run_batch,
    run_trial,
    run_trials,
    sweep,
    trial_seed,
    write_oc_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BatchFailureError",
    "BblrmError",
    "ConfigFormatError",
    "FormatError",
    "HistoryFormatError",
    "InvalidArgumentError",
    "OracleFailureError",
    "SamplerFailureError",
    "ScenarioFormatError",
    "DEFAULT_DOSES",
    "DEFAULT_REF_DOSE",
    "Classification",
    "CohortObservation",
    "DoseGrid",
    "ThetaSample",
    "ToxicityIntervals",
    "TrialHistory",
    "burdened_dlt_probability",
    "burdened_log_odds",
    "classify",
    "default_dose_grid",
    "dlt_log_odds",
    "dlt_probability",
    "McmcConfig",
    "OracleTable",
    "PosteriorSamples",
    "PriorSpec",
    "grid_posterior_oracle",
    "log_posterior",
    "sample_posterior",
    "DecisionConfig",
    "EscalationRule",
    "Rationale",
    "Recommendation",
    "ewoc_select",
    "expected_loss",
    "interval_probabilities",
    "mtd_samples",
    "recommend_next",
    "recommendation_to_dict",
    "rule_allows_escalation",
    "sample_delta",
    "BUILTIN_SCENARIO_NAMES",
    "Scenario",
    "builtin_scenarios",
    "get_scenario",
    "load_scenario_file",
    "ndltae_prob_for",
    "parse_scenario",
    "scenario_to_dict",
    "simulate_cohort",
    "Assessment",
    "OperatingCharacteristics",
    "TrialConfig",
    "TrialRecord",
    "assessment_seed",
    "assessment_to_dict",
    "batch_seed",
    "config_from_dict",
    "config_to_dict",
    "default_trial_config",
    "evaluate",
    "history_from_dict",
    "operating_characteristics",
    "run_batch",
    "run_trial",
    "run_trials",
    "sweep",
    "trial_seed",
    "write_oc_csv",
    "__version__",
]
