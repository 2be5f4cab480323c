import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { App, clockLabel } from "../src/app.js";
import type { CellRef } from "../src/types.js";
import {
  buildingsFixture,
  ctxOf,
  FakeService,
  installCanvasStub,
  meta,
  ranksAt,
  vriCases,
} from "./helpers.js";

let restore: () => void;
let apps: App[] = [];

beforeEach(() => {
  restore = installCanvasStub();
});

afterEach(() => {
  for (const app of apps) app.dispose();
  apps = [];
  restore();
  vi.useRealTimers();
  document.body.innerHTML = "";
});

async function bootApp(service = new FakeService()): Promise<{ app: App; service: FakeService }> {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = await App.boot({
    baseUrl: "http://svc.test",
    root,
    fetchFn: service.fetchFn,
    prefetch: false,
  });
  apps.push(app);
  return { app, service };
}

function input(el: HTMLInputElement, value: string): void {
  el.value = value;
  el.dispatchEvent(new Event("input", { bubbles: true }));
}

/** First fixture cell at step t with buildings and all three ranks. */
function firstRankedCell(t: number): CellRef {
  const ranks = ranksAt(t);
  for (const b of buildingsFixture[String(t)]?.buildings ?? []) {
    if (b.cell === null) continue;
    const [row, col] = b.cell;
    const i = row * meta.grid.cols + col;
    if (
      ranks.demographic[i] != null &&
      ranks.activity[i] != null &&
      ranks.building_env[i] != null
    ) {
      return { row, col };
    }
  }
  throw new Error("fixture has no fully-ranked cell with buildings");
}

describe("boot and first paint", () => {
  it("sizes the controls from the service metadata and paints the default map", async () => {
    const { app } = await bootApp();
    expect(app.el<HTMLInputElement>("time-slider").max).toBe("95");
    expect(app.el("legend").querySelectorAll(".legend-entry")).toHaveLength(5);
    expect(app.mainView.canvas.width).toBe(20 * 20);

    await app.idle();
    const painted = ctxOf(app.mainView.canvas).rects.length;
    const expected = vriCases.default.values.filter((v) => v !== null).length;
    expect(painted).toBe(expected);
  });

  it("shows a hard error when the first frame cannot be fetched, then recovers", async () => {
    const service = new FakeService();
    service.failActivity.add(0);
    const { app } = await bootApp(service);
    await app.idle();
    expect(app.el("status").classList.contains("hidden")).toBe(false);
    expect(app.el("status").textContent).toMatch(/failed to load layers/);

    service.failActivity.delete(0);
    input(app.el<HTMLInputElement>("time-slider"), "1");
    await app.idle();
    expect(app.el("status").classList.contains("hidden")).toBe(true);
    expect(ctxOf(app.mainView.canvas).rects.length).toBeGreaterThan(0);
  });
});

describe("control wiring and state isolation", () => {
  it("[invariant] scrubbing time updates the step but never the weights", async () => {
    const { app } = await bootApp();
    await app.idle();
    const weightsBefore = app.store.current.weights;
    input(app.el<HTMLInputElement>("time-slider"), "10");
    expect(app.store.current.timestep).toBe(10);
    expect(app.store.current.weights).toBe(weightsBefore);
    expect(app.el("time-label").textContent).toBe("step 10 — 02:30");
  });

  it("[invariant] moving a weight slider never touches the timestep", async () => {
    const { app } = await bootApp();
    await app.idle();
    input(app.el<HTMLInputElement>("time-slider"), "33");
    input(app.el<HTMLInputElement>("weight-qa"), "0.5");
    expect(app.store.current.timestep).toBe(33);
    expect(app.store.current.weights.qa).toBe(0.5);
    expect(app.el("weight-qa-value").textContent).toBe("0.500");
  });

  it("weight moves recompose without any network round-trip", async () => {
    const { app, service } = await bootApp();
    await app.idle();
    const callsBefore = service.calls.length;
    for (const v of ["0.9", "0.1", "0.7", "0.2", "0.55"]) {
      input(app.el<HTMLInputElement>("weight-qb"), v);
      await app.idle();
    }
    expect(service.calls.length).toBe(callsBefore);
  });

  it("snaps the slider back when a gesture would zero out all weights", async () => {
    const { app } = await bootApp();
    await app.idle();
    input(app.el<HTMLInputElement>("weight-qd"), "0");
    input(app.el<HTMLInputElement>("weight-qa"), "0");
    input(app.el<HTMLInputElement>("weight-qb"), "0"); // refused
    const { weights } = app.store.current;
    expect(weights.qb).toBe(meta.default_weights.qb);
    expect(app.el<HTMLInputElement>("weight-qb").value).toBe(String(meta.default_weights.qb));
  });

  it("layer toggles hide panels but keep the last one visible", async () => {
    const { app } = await bootApp();
    await app.idle();
    const toggle = (aspect: string): void => {
      const box = app.el<HTMLInputElement>(`layer-${aspect}`);
      box.checked = !box.checked;
      box.dispatchEvent(new Event("change", { bubbles: true }));
    };
    toggle("activity");
    toggle("building_env");
    expect(app.store.current.visible.size).toBe(1);
    expect(app.el("panel-activity").classList.contains("collapsed")).toBe(true);

    toggle("demographic"); // refused: last visible layer
    expect(app.store.current.visible.size).toBe(1);
    expect(app.el<HTMLInputElement>("layer-demographic").checked).toBe(true);
  });
});

describe("stale-data banner", () => {
  it("keeps the last good frame and shows the banner while the service is down", async () => {
    const { app, service } = await bootApp();
    await app.idle();
    expect(app.el("banner").classList.contains("hidden")).toBe(true);

    service.failActivity.add(11);
    input(app.el<HTMLInputElement>("time-slider"), "11");
    await app.idle();
    expect(app.el("banner").classList.contains("hidden")).toBe(false);
    expect(app.shownFrame?.timestep).toBe(0); // the retained frame
    expect(ctxOf(app.mainView.canvas).rects.length).toBeGreaterThan(0);

    service.failActivity.delete(11);
    input(app.el<HTMLInputElement>("time-slider"), "12");
    await app.idle();
    expect(app.el("banner").classList.contains("hidden")).toBe(true);
    expect(app.shownFrame?.timestep).toBe(12);
  });
});

describe("playback", () => {
  it("auto-advances at 2 steps per second and pauses on demand", async () => {
    vi.useFakeTimers({ toFake: ["setInterval", "clearInterval"] });
    const { app } = await bootApp();
    await app.idle();

    app.el("play").click();
    expect(app.el("play").textContent).toBe("pause");
    vi.advanceTimersByTime(500);
    expect(app.store.current.timestep).toBe(1);
    vi.advanceTimersByTime(1000);
    expect(app.store.current.timestep).toBe(3);

    app.el("play").click();
    expect(app.el("play").textContent).toBe("play");
    vi.advanceTimersByTime(2000);
    expect(app.store.current.timestep).toBe(3);
  });

  it("wraps from the last step back to midnight", async () => {
    vi.useFakeTimers({ toFake: ["setInterval", "clearInterval"] });
    const { app } = await bootApp();
    await app.idle();
    input(app.el<HTMLInputElement>("time-slider"), "95");
    app.el("play").click();
    vi.advanceTimersByTime(500);
    expect(app.store.current.timestep).toBe(0);
  });
});

describe("cell inspector", () => {
  it("opens on map click", async () => {
    const { app } = await bootApp();
    await app.idle();
    app.mainView.canvas.dispatchEvent(
      new MouseEvent("click", { clientX: 5, clientY: 395, bubbles: true }),
    );
    expect(app.store.current.selected).toEqual({ row: 0, col: 0 });
    await app.idle();
    expect(app.el("inspector").classList.contains("hidden")).toBe(false);
    expect(app.el("inspector").innerHTML).toContain("cell (0, 0)");
  });

  it("shows ranks, V, and the cell's top buildings for a data cell", async () => {
    const { app } = await bootApp();
    await app.idle();
    const cell = firstRankedCell(0);
    app.select(cell);
    await app.idle();

    const panel = app.el("inspector");
    expect(panel.classList.contains("hidden")).toBe(false);
    expect(panel.innerHTML).toContain("V =");
    const rows = buildingsFixture["0"]?.buildings ?? [];
    const top = rows.find(
      (b) => b.cell !== null && b.cell[0] === cell.row && b.cell[1] === cell.col,
    );
    expect(panel.innerHTML).toContain(top?.building_id as string);
    expect(panel.innerHTML).toContain("dominant activities");
  });

  it("shows the no-data state for a nodata cell", async () => {
    const { app } = await bootApp();
    await app.idle();
    const i = vriCases.default.values.findIndex((v) => v === null);
    expect(i).toBeGreaterThanOrEqual(0);
    app.select({ row: Math.floor(i / meta.grid.cols), col: i % meta.grid.cols });
    await app.idle();
    expect(app.el("inspector").innerHTML).toContain("no data in this cell");
  });
});

describe("clock labels", () => {
  it("renders steps as wall-clock times", () => {
    expect(clockLabel(0, 15)).toBe("00:00");
    expect(clockLabel(40, 15)).toBe("10:00");
    expect(clockLabel(95, 15)).toBe("23:45");
  });
});
