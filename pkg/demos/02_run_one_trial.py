# 02_run_one_trial.py
# Simulate one complete trial against a chosen toxicity scenario and print
# the escalation path cohort by cohort.

import argparse
from dataclasses import replace

from bblrm import McmcConfig, default_trial_config, get_scenario, run_trial

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--scenario", default="S3", help="builtin scenario name")
parser.add_argument("--seed", type=int, default=42)
args = parser.parse_args()

scenario = get_scenario(args.scenario)
config = replace(
    default_trial_config(),
    mcmc=McmcConfig(burn_in=500, kept=2000, thin=2),
)

record = run_trial(scenario, config, args.seed)

grid = config.grid
true_mtd = scenario.true_mtd_index
print(f"scenario {scenario.name}: true MTD is dose {grid.doses[true_mtd]:g}")
print(f"trial seed {record.seed}\n")
print("cohort  dose   DLT  nDLTAE  next dose (why)")
for i, cohort in enumerate(record.cohorts.cohorts):
    rec = record.recommendations[i]
    print(
        f"  {i + 1:3d}   {grid.doses[cohort.dose_index]:4g}   "
        f"{cohort.dlt_count}/{cohort.n_patients}   "
        f"{cohort.ndltae_count}/{cohort.n_patients}     "
        f"{grid.doses[rec.dose_index]:4g} ({rec.rationale.value})"
    )

declared = grid.doses[record.declared_mtd_index]
verdict = "correct" if record.declared_mtd_index == true_mtd else (
    "too high" if record.declared_mtd_index > true_mtd else "too low"
)
print(f"\ndeclared MTD: dose {declared:g} ({verdict})")
