// Display formatting and form-level validation. Validation here mirrors the
// service's wording so a pre-flight message matches what a 422 would say.

/** 0.3093 -> "30.9%". */
export function pct(x: number, digits = 1): string {
  return `${(100 * x).toFixed(digits)}%`;
}

/** Doses print bare: 8 not 8.0, but 22.5 stays 22.5. */
export function fmtDose(dose: number): string {
  return String(dose);
}

export function fmtQuantile(x: number): string {
  if (!Number.isFinite(x)) return "unbounded";
  return x.toFixed(2);
}

/**
 * Validate cohort counts before they ever reach the wire. Returns the same
 * messages the service would respond with, or [] when the counts are fine.
 */
export function validateCohortCounts(
  nPatients: number,
  dltCount: number,
  ndltaeCount: number,
): string[] {
  const items: string[] = [];
  const fields: Array<[string, number]> = [
    ["n_patients", nPatients],
    ["dlt_count", dltCount],
    ["ndltae_count", ndltaeCount],
  ];
  for (const [key, v] of fields) {
    if (!Number.isInteger(v)) items.push(`'${key}' must be an integer`);
  }
  if (items.length > 0) return items;
  if (nPatients < 1) {
    items.push("'n_patients' must be at least 1");
    return items;
  }
  for (const [key, v] of [["dlt_count", dltCount], ["ndltae_count", ndltaeCount]] as Array<
    [string, number]
  >) {
    if (v < 0 || v > nPatients) {
      items.push(`'${key}' must lie in [0, n_patients=${nPatients}]`);
    }
  }
  return items;
}
