/** Client-side map composition: V = qd*pd + qa*pa + qb*pb per cell.
 *
 * This is the one piece of arithmetic the client performs, so slider
 * motion recomposes the map without a server round-trip.  The math
 * mirrors the engine exactly (same normalization, same term order, both
 * in IEEE doubles), which is what keeps it within 1e-6 of GET /vri.
 */

import type { RankGrid, ValueGrid, WeightTriple } from "./types.js";

export interface AspectRanks {
  demographic: RankGrid;
  activity: RankGrid;
  building_env: RankGrid;
}

/** Scale a raw nonnegative triple to sum 1 (rejects what the server rejects). */
export function normalizeWeights(raw: WeightTriple): WeightTriple {
  const named: [string, number][] = [
    ["qd", raw.qd],
    ["qa", raw.qa],
    ["qb", raw.qb],
  ];
  for (const [name, v] of named) {
    if (!Number.isFinite(v) || v < 0) {
      throw new Error(`weight ${name} must be finite and nonnegative, got ${v}`);
    }
  }
  const total = raw.qd + raw.qa + raw.qb;
  if (total <= 0) {
    throw new Error("weights must not all be zero");
  }
  return { qd: raw.qd / total, qa: raw.qa / total, qb: raw.qb / total };
}

/** One cell of the weighted sum; any nodata rank makes the cell nodata. */
export function composeCell(
  pd: number | null,
  pa: number | null,
  pb: number | null,
  q: WeightTriple,
): number | null {
  if (pd === null || pa === null || pb === null) {
    return null;
  }
  return q.qd * pd + q.qa * pa + q.qb * pb;
}

/** Compose the three rank grids under raw weights into a per-cell V grid. */
export function clientCompose(layers: AspectRanks, raw: WeightTriple): ValueGrid {
  const q = normalizeWeights(raw);
  const pd = layers.demographic;
  const pa = layers.activity;
  const pb = layers.building_env;
  if (pa.length !== pd.length || pb.length !== pd.length) {
    throw new Error(
      `rank grids differ in length: ${pd.length}, ${pa.length}, ${pb.length}`,
    );
  }
  const out: ValueGrid = new Array(pd.length);
  for (let i = 0; i < pd.length; i++) {
    out[i] = composeCell(pd[i] ?? null, pa[i] ?? null, pb[i] ?? null, q);
  }
  return out;
}
