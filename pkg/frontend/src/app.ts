// DOM wiring for the console. Everything visual goes through render.ts;
// this module only moves data between the page and the ApiClient.

import { ApiClient, ApiFailure, type CohortPayload, type TrialDetail } from "./api.js";
import { validateCohortCounts } from "./format.js";
import {
  renderErrorList,
  renderTrialSummaryList,
  renderTrialView,
  renderWhatIfPanel,
} from "./render.js";

let client = new ApiClient("");
let currentTrial: TrialDetail | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(err: unknown): void {
  const box = el<HTMLDivElement>("errors");
  if (err instanceof ApiFailure) {
    box.innerHTML = renderErrorList(`${err.code}: ${err.message}`, err.fieldErrors);
  } else {
    box.innerHTML = renderErrorList(String(err), []);
  }
}

function clearError(): void {
  el<HTMLDivElement>("errors").innerHTML = "";
}

async function refreshList(): Promise<void> {
  const { trials } = await client.listTrials();
  el<HTMLDivElement>("trial-list").innerHTML = renderTrialSummaryList(trials);
  for (const item of document.querySelectorAll<HTMLElement>(".trial-item")) {
    item.addEventListener("click", () => {
      void openTrial(item.dataset.trial ?? "");
    });
  }
}

async function openTrial(id: string): Promise<void> {
  clearError();
  try {
    currentTrial = await client.getTrial(id);
    renderCurrent();
  } catch (err) {
    showError(err);
  }
}

function renderCurrent(): void {
  if (!currentTrial) return;
  el<HTMLDivElement>("trial-view").innerHTML = renderTrialView(currentTrial);
  el<HTMLDivElement>("whatif-view").innerHTML = "";
  const rec = currentTrial.current.recommendation;
  el<HTMLInputElement>("cohort-dose-index").value = String(rec.dose_index);
  el<HTMLElement>("cohort-forms").hidden = currentTrial.status === "complete";
}

function readCohortForm(): CohortPayload | null {
  const doseIndex = Number(el<HTMLInputElement>("cohort-dose-index").value);
  const n = Number(el<HTMLInputElement>("cohort-n").value);
  const dlt = Number(el<HTMLInputElement>("cohort-dlt").value);
  const ndltae = Number(el<HTMLInputElement>("cohort-ndltae").value);
  const problems = validateCohortCounts(n, dlt, ndltae);
  if (!Number.isInteger(doseIndex) || doseIndex < 0) {
    problems.unshift("'dose_index' must be an integer");
  }
  if (problems.length > 0) {
    el<HTMLDivElement>("errors").innerHTML = renderErrorList("invalid cohort", problems);
    return null;
  }
  return { dose_index: doseIndex, n_patients: n, dlt_count: dlt, ndltae_count: ndltae };
}

async function submitCohort(): Promise<void> {
  if (!currentTrial) return;
  const payload = readCohortForm();
  if (!payload) return;
  clearError();
  if (el<HTMLInputElement>("cohort-override").checked) {
    payload.override_dose = true;
  }
  try {
    currentTrial = await client.postCohort(currentTrial.id, payload);
    renderCurrent();
    await refreshList();
  } catch (err) {
    showError(err);
  }
}

async function submitWhatIf(): Promise<void> {
  if (!currentTrial) return;
  const payload = readCohortForm();
  if (!payload) return;
  clearError();
  try {
    const result = await client.whatIf(currentTrial.id, payload);
    const label = `if cohort at level ${payload.dose_index + 1} saw ${payload.dlt_count}/${payload.n_patients} DLTs`;
    el<HTMLDivElement>("whatif-view").innerHTML = renderWhatIfPanel(result.assessment, label);
  } catch (err) {
    showError(err);
  }
}

async function createTrial(): Promise<void> {
  clearError();
  const seedRaw = el<HTMLInputElement>("create-seed").value.trim();
  const req: { seed?: number } = {};
  if (seedRaw !== "") {
    const seed = Number(seedRaw);
    if (!Number.isInteger(seed) || seed < 0) {
      showError(new Error("seed must be a non-negative integer"));
      return;
    }
    req.seed = seed;
  }
  try {
    currentTrial = await client.createTrial(req);
    renderCurrent();
    await refreshList();
  } catch (err) {
    showError(err);
  }
}

export function main(): void {
  el<HTMLButtonElement>("btn-connect").addEventListener("click", () => {
    client = new ApiClient("", el<HTMLInputElement>("token").value.trim());
    void refreshList().then(clearError, showError);
  });
  el<HTMLButtonElement>("btn-create").addEventListener("click", () => void createTrial());
  el<HTMLButtonElement>("btn-cohort").addEventListener("click", () => void submitCohort());
  el<HTMLButtonElement>("btn-whatif").addEventListener("click", () => void submitWhatIf());
  void refreshList().catch(showError);
}

main();
