// HTML renderers. Every function here is a pure string producer so the test
// suite can run them in plain node; app.ts owns the DOM they land in.

import type {
  Assessment,
  CohortRow,
  Recommendation,
  TrialDetail,
  TrialSummary,
} from "./api.js";
import { fmtDose, fmtQuantile, pct } from "./format.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// One-line reading aid per decision path. Keys are the service's rationale
// strings; anything unrecognised renders without a hint rather than failing.
const RATIONALE_HINTS: Record<string, string> = {
  EscalatedByRule: "all admissible doses cleared the overdose cap; took the highest",
  EwocSelection: "picked by the posterior loss among admissible doses",
  NoSkipCapped: "capped at one level above the highest dose given so far",
};

export function renderRecommendationCard(rec: Recommendation, heading = "Next cohort"): string {
  const hint = RATIONALE_HINTS[rec.rationale];
  const hintHtml = hint === undefined ? "" : ` title="${escapeHtml(hint)}"`;
  return [
    `<div class="card rec-card">`,
    `<h2>${escapeHtml(heading)}</h2>`,
    `<div class="rec-dose">dose <strong>${fmtDose(rec.dose)}</strong> (level ${rec.dose_index + 1})</div>`,
    `<div class="rec-rationale"${hintHtml}>${escapeHtml(rec.rationale)}</div>`,
    `<div class="rec-quantile">MTD quantile: ${fmtQuantile(rec.mtd_quantile)}</div>`,
    `</div>`,
  ].join("\n");
}

/**
 * The dose ladder: one row per dose with a stacked under/target/over bar,
 * the DLT-probability band, and a highlight on the recommended row.
 */
export function renderDoseLadder(assessment: Assessment): string {
  const rec = assessment.recommendation;
  const rows = rec.interval_probs.map((p, i) => {
    const band = assessment.bands[i];
    const cls = i === rec.dose_index ? "ladder-row recommended" : "ladder-row";
    const segs =
      `<span class="seg under" style="width:${(100 * p.under).toFixed(2)}%"></span>` +
      `<span class="seg target" style="width:${(100 * p.target).toFixed(2)}%"></span>` +
      `<span class="seg over" style="width:${(100 * p.over).toFixed(2)}%"></span>`;
    return [
      `<tr class="${cls}">`,
      `<td class="dose">${fmtDose(p.dose)}</td>`,
      `<td class="bar"><div class="stack">${segs}</div></td>`,
      `<td class="target-pct">${pct(p.target)}</td>`,
      `<td class="band">${band.lower.toFixed(3)} / ${band.median.toFixed(3)} / ${band.upper.toFixed(3)}</td>`,
      `</tr>`,
    ].join("");
  });
  return [
    `<table class="ladder">`,
    `<thead><tr><th>dose</th><th>P(under / target / over)</th><th>target</th><th>DLT band (2.5/50/97.5)</th></tr></thead>`,
    `<tbody>`,
    ...rows,
    `</tbody>`,
    `</table>`,
    `<div class="ladder-footnote">sampler acceptance ${pct(assessment.acceptance_rate)}</div>`,
  ].join("\n");
}

export function renderCohortTimeline(cohorts: CohortRow[]): string {
  if (cohorts.length === 0) {
    return `<p class="empty">No cohorts yet.</p>`;
  }
  const rows = cohorts.map((c, i) =>
    [
      `<tr>`,
      `<td>${i + 1}</td>`,
      `<td>${fmtDose(c.dose)}</td>`,
      `<td>${c.dlt_count}/${c.n_patients}</td>`,
      `<td>${c.ndltae_count}/${c.n_patients}</td>`,
      `<td>${escapeHtml(c.recommendation.rationale)} &rarr; ${fmtDose(c.recommendation.dose)}</td>`,
      `</tr>`,
    ].join(""),
  );
  return [
    `<table class="timeline">`,
    `<thead><tr><th>#</th><th>dose</th><th>DLT</th><th>nDLTAE</th><th>next</th></tr></thead>`,
    `<tbody>`,
    ...rows,
    `</tbody>`,
    `</table>`,
  ].join("\n");
}

export function renderTrialView(detail: TrialDetail): string {
  const parts: string[] = [];
  parts.push(`<div class="trial-head">trial <code>${escapeHtml(detail.id)}</code> &middot; seed ${detail.seed} &middot; ${detail.cohorts.length} cohorts</div>`);
  if (detail.status === "complete" && detail.declared_mtd_dose !== undefined) {
    parts.push(
      `<div class="card mtd-card"><h2>Trial complete</h2>` +
        `<div class="rec-dose">declared MTD: dose <strong>${fmtDose(detail.declared_mtd_dose)}</strong></div></div>`,
    );
  } else {
    parts.push(renderRecommendationCard(detail.current.recommendation));
  }
  parts.push(renderDoseLadder(detail.current));
  parts.push(renderCohortTimeline(detail.cohorts));
  return parts.join("\n");
}

export function renderTrialSummaryList(trials: TrialSummary[]): string {
  if (trials.length === 0) {
    return `<p class="empty">No trials on this server yet.</p>`;
  }
  const items = trials.map((t) =>
    [
      `<li class="trial-item" data-trial="${escapeHtml(t.id)}">`,
      `<code>${escapeHtml(t.id)}</code>`,
      ` <span class="status ${t.status}">${t.status}</span>`,
      ` ${t.n_cohorts} cohorts, next dose ${fmtDose(t.recommended_dose)}`,
      `</li>`,
    ].join(""),
  );
  return `<ul class="trial-list">\n${items.join("\n")}\n</ul>`;
}

/** What-if results render inside a clearly-tagged hypothetical frame. */
export function renderWhatIfPanel(assessment: Assessment, label: string): string {
  return [
    `<div class="card whatif">`,
    `<h2>Hypothetical &mdash; not recorded</h2>`,
    `<div class="whatif-label">${escapeHtml(label)}</div>`,
    renderRecommendationCard(assessment.recommendation, "Would recommend"),
    renderDoseLadder(assessment),
    `</div>`,
  ].join("\n");
}

export function renderErrorList(message: string, items: string[]): string {
  const lis = items.map((it) => `<li>${escapeHtml(it)}</li>`).join("");
  return `<div class="error"><p>${escapeHtml(message)}</p><ul>${lis}</ul></div>`;
}
