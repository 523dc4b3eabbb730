# 01_single_assessment.py
# Assess one partially-run trial: sample the posterior, print the dose ladder
# and the next-cohort recommendation, with and without the burden term.

from dataclasses import replace

from bblrm import (
    CohortObservation,
    McmcConfig,
    TrialHistory,
    default_trial_config,
    evaluate,
)

# four cohorts on record. Only one DLT so far, but 11 of 12 patients carry
# non-DLT adverse events; this is the data pattern the burden term exists for.
history = TrialHistory((
    CohortObservation(dose_index=0, n_patients=3, dlt_count=0, ndltae_count=2),
    CohortObservation(dose_index=1, n_patients=3, dlt_count=0, ndltae_count=3),
    CohortObservation(dose_index=2, n_patients=3, dlt_count=0, ndltae_count=3),
    CohortObservation(dose_index=3, n_patients=3, dlt_count=1, ndltae_count=3),
))

config = replace(
    default_trial_config(),
    mcmc=McmcConfig(burn_in=500, kept=2000, thin=2),
)


def show(label, assessment):
    rec = assessment.recommendation
    grid = config.grid
    print(f"\n{label}")
    print(f"  sampler acceptance rate: {assessment.acceptance_rate:.2f}")
    print("  dose   P(under)  P(target)  P(over)   DLT 2.5/50/97.5%")
    for i, dose in enumerate(grid.doses):
        u, t, o = rec.interval_probs[i]
        lo, med, hi = assessment.bands[i]
        marker = " <- next" if i == rec.dose_index else ""
        print(
            f"  {dose:4g}   {u:7.3f}   {t:8.3f}   {o:6.3f}   "
            f"{lo:.3f}/{med:.3f}/{hi:.3f}{marker}"
        )
    print(f"  recommendation: dose {grid.doses[rec.dose_index]:g} ({rec.rationale.value})")


show("with the adverse-event burden", evaluate(history, config, seed=7))

plain = replace(config, decision=replace(config.decision, burden_enabled=False))
show("burden disabled", evaluate(history, plain, seed=7))

print(
    "\nSame data, same seed. The DLT record alone reads benign, so the plain"
    "\nmodel escalates; the adverse-event record inflates the burdened model's"
    "\noverdose probabilities and it steps back down instead."
)
