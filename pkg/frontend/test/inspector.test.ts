import { describe, expect, it } from "vitest";

import { clientCompose } from "../src/compose.js";
import { inspectCell } from "../src/inspector.js";
import type { BuildingRow, CellRef } from "../src/types.js";
import { buildingsFixture, meta, ranksAt } from "./helpers.js";

const COLS = meta.grid.cols;

function fixtureRowsAt(t: number): BuildingRow[] {
  const body = buildingsFixture[String(t)];
  if (body === undefined) throw new Error(`no buildings fixture for step ${t}`);
  return body.buildings;
}

/** First fixture cell whose three ranks are all present. */
function dataCellAt(t: number): { cell: CellRef; index: number } {
  const ranks = ranksAt(t);
  for (const b of fixtureRowsAt(t)) {
    if (b.cell === null) continue;
    const [row, col] = b.cell;
    const i = row * COLS + col;
    if (
      ranks.demographic[i] != null &&
      ranks.activity[i] != null &&
      ranks.building_env[i] != null
    ) {
      return { cell: { row, col }, index: i };
    }
  }
  throw new Error("fixture has no fully-ranked cell with buildings");
}

function makeRow(overrides: Partial<BuildingRow>): BuildingRow {
  return {
    building_id: "B0",
    type: "residential",
    x: 50,
    y: 50,
    cell: [0, 0],
    occupants: 1,
    by_class: {},
    activity_score: 1,
    env_score: 0.5,
    ...overrides,
  };
}

describe("inspectCell on the bundled county", () => {
  it("echoes the /buildings response for the cell, sorted by score", () => {
    const t = 40;
    const { cell } = dataCellAt(t);
    const rows = fixtureRowsAt(t);
    const expected = rows.filter(
      (b) => b.cell !== null && b.cell[0] === cell.row && b.cell[1] === cell.col,
    );
    const report = inspectCell(cell, t, COLS, ranksAt(t), meta.default_weights, rows);
    expect(report.buildings).toEqual(expected.slice(0, 5));
    const scores = report.buildings.map((b) => b.activity_score);
    for (let i = 1; i < scores.length; i++) {
      expect(scores[i]).toBeLessThanOrEqual(scores[i - 1] as number);
    }
  });

  it("reports V exactly as the map composes it", () => {
    const t = 40;
    const { cell, index } = dataCellAt(t);
    const ranks = ranksAt(t);
    const report = inspectCell(cell, t, COLS, ranks, meta.default_weights, fixtureRowsAt(t));
    const mapValue = clientCompose(ranks, meta.default_weights)[index];
    expect(report.value).toBe(mapValue);
    expect(report.nodata).toBe(false);
    expect(report.ranks.demographic).toBe(ranks.demographic[index]);
    expect(report.ranks.activity).toBe(ranks.activity[index]);
    expect(report.ranks.building_env).toBe(ranks.building_env[index]);
  });

  it("flags a nodata cell without crashing", () => {
    const t = 40;
    const ranks = ranksAt(t);
    // a cell is nodata when any aspect lacks a rank there
    const i = clientCompose(ranks, meta.default_weights).findIndex((v) => v === null);
    expect(i).toBeGreaterThanOrEqual(0);
    const cell = { row: Math.floor(i / COLS), col: i % COLS };
    const report = inspectCell(cell, t, COLS, ranks, meta.default_weights, fixtureRowsAt(t));
    expect(report.nodata).toBe(true);
    expect(report.value).toBeNull();
  });
});

describe("inspectCell panel model", () => {
  const ranks = {
    demographic: [2, 1],
    activity: [4, 1],
    building_env: [3, 1],
  };

  it("computes the hand case p=(2,4,3), q=(0.5,0.3,0.2) -> V=2.8", () => {
    const report = inspectCell(
      { row: 0, col: 0 },
      0,
      2,
      ranks,
      { qd: 0.5, qa: 0.3, qb: 0.2 },
      [],
    );
    expect(Math.abs((report.value as number) - 2.8)).toBeLessThanOrEqual(1e-12);
    expect(report.weights).toEqual({ qd: 0.5, qa: 0.3, qb: 0.2 });
  });

  it("keeps only the cell's buildings and caps the list at topN", () => {
    const inCell = Array.from({ length: 7 }, (_, i) =>
      makeRow({ building_id: `B${i}`, activity_score: 10 - i }),
    );
    const elsewhere = makeRow({ building_id: "X", cell: [1, 1], activity_score: 99 });
    const unplaced = makeRow({ building_id: "Y", cell: null, activity_score: 99 });
    const report = inspectCell(
      { row: 0, col: 0 },
      0,
      2,
      ranks,
      { qd: 1, qa: 1, qb: 1 },
      [elsewhere, unplaced, ...inCell],
    );
    expect(report.buildings.map((b) => b.building_id)).toEqual(["B0", "B1", "B2", "B3", "B4"]);
  });

  it("orders buildings by score then id even if the input is shuffled", () => {
    const rows = [
      makeRow({ building_id: "B2", activity_score: 5 }),
      makeRow({ building_id: "B1", activity_score: 9 }),
      makeRow({ building_id: "B0", activity_score: 5 }),
    ];
    const report = inspectCell({ row: 0, col: 0 }, 0, 2, ranks, { qd: 1, qa: 1, qb: 1 }, rows);
    expect(report.buildings.map((b) => b.building_id)).toEqual(["B1", "B0", "B2"]);
  });

  it("sums class occupants across the cell's buildings, largest first", () => {
    const rows = [
      makeRow({ building_id: "B0", by_class: { c03: 5, c02: 1 } }),
      makeRow({ building_id: "B1", by_class: { c03: 1, c05: 2 } }),
    ];
    const report = inspectCell({ row: 0, col: 0 }, 0, 2, ranks, { qd: 1, qa: 1, qb: 1 }, rows);
    expect(report.classTotals).toEqual([
      { code: "c03", occupants: 6 },
      { code: "c05", occupants: 2 },
      { code: "c02", occupants: 1 },
    ]);
  });

  it("rejects cells outside the grid", () => {
    expect(() =>
      inspectCell({ row: 5, col: 0 }, 0, 2, ranks, { qd: 1, qa: 1, qb: 1 }, []),
    ).toThrow(RangeError);
    expect(() =>
      inspectCell({ row: 0, col: 2 }, 0, 2, ranks, { qd: 1, qa: 1, qb: 1 }, []),
    ).toThrow(RangeError);
  });
});
