/** Cell inspector: assemble the detail-panel model for one cell.
 *
 * Everything shown is server data echoed back — the three ranks, the
 * buildings in the cell, their class counts — except the composed V,
 * which reuses the same weighted sum the map uses.
 */

import { composeCell, normalizeWeights } from "./compose.js";
import type { AspectRanks } from "./compose.js";
import type { BuildingRow, CellRef, WeightTriple } from "./types.js";

export interface ClassShare {
  code: string;
  occupants: number;
}

export interface CellReport {
  row: number;
  col: number;
  timestep: number;
  ranks: {
    demographic: number | null;
    activity: number | null;
    building_env: number | null;
  };
  /** Normalized weights in effect when the report was built. */
  weights: WeightTriple;
  /** Composed V for the cell; null when any rank is nodata. */
  value: number | null;
  nodata: boolean;
  /** The cell's buildings, highest activity score first. */
  buildings: BuildingRow[];
  /** Occupants per activity class summed over the cell's buildings. */
  classTotals: ClassShare[];
}

function byScoreThenId(a: BuildingRow, b: BuildingRow): number {
  if (a.activity_score !== b.activity_score) {
    return b.activity_score - a.activity_score;
  }
  return a.building_id < b.building_id ? -1 : a.building_id > b.building_id ? 1 : 0;
}

export function inspectCell(
  cell: CellRef,
  timestep: number,
  cols: number,
  ranks: AspectRanks,
  rawWeights: WeightTriple,
  buildings: readonly BuildingRow[],
  topN = 5,
): CellReport {
  const nCells = ranks.demographic.length;
  const index = cell.row * cols + cell.col;
  if (cell.row < 0 || cell.col < 0 || cell.col >= cols || index >= nCells) {
    throw new RangeError(`cell (${cell.row}, ${cell.col}) outside the grid`);
  }
  const q = normalizeWeights(rawWeights);
  const pd = ranks.demographic[index] ?? null;
  const pa = ranks.activity[index] ?? null;
  const pb = ranks.building_env[index] ?? null;
  const value = composeCell(pd, pa, pb, q);

  const here = buildings
    .filter((b) => b.cell !== null && b.cell[0] === cell.row && b.cell[1] === cell.col)
    .sort(byScoreThenId);

  const totals = new Map<string, number>();
  for (const b of here) {
    for (const [code, n] of Object.entries(b.by_class)) {
      totals.set(code, (totals.get(code) ?? 0) + n);
    }
  }
  const classTotals = [...totals.entries()]
    .map(([code, occupants]) => ({ code, occupants }))
    .sort((a, b) => b.occupants - a.occupants || (a.code < b.code ? -1 : 1));

  return {
    row: cell.row,
    col: cell.col,
    timestep,
    ranks: { demographic: pd, activity: pa, building_env: pb },
    weights: q,
    value,
    nodata: value === null,
    buildings: here.slice(0, topN),
    classTotals,
  };
}
