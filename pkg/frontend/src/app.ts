/** Analyst console: composed-map canvas, 96-step time slider, three
 * live weight sliders, aspect-panel toggles, playback, and a cell
 * inspector.  All state changes flow through the Store as atomic
 * ViewState swaps; every render reads only the current state.
 */

import { ApiClient, type FetchLike, type FrameData } from "./api.js";
import { clientCompose } from "./compose.js";
import { GridView } from "./grid_view.js";
import { inspectCell } from "./inspector.js";
import { cssColor, DEFAULT_RAMP, legendEntries } from "./ramp.js";
import {
  advance,
  initialState,
  selectCell,
  setPlaying,
  setTimestep,
  setWeight,
  Store,
  toggleLayer,
  type ViewState,
} from "./state.js";
import type {
  AspectName,
  BuildingRow,
  CellRef,
  MetaResponse,
  WeightTriple,
} from "./types.js";
import { ASPECTS, WEIGHT_KEYS } from "./types.js";

export interface AppOptions {
  baseUrl: string;
  root: HTMLElement;
  fetchFn?: FetchLike;
  /** Warm the activity-layer cache for all steps after first paint. */
  prefetch?: boolean;
}

const ASPECT_TITLES: Record<AspectName, string> = {
  demographic: "demographic",
  activity: "activity",
  building_env: "building environment",
};

const WEIGHT_TITLES: Record<keyof WeightTriple, string> = {
  qd: "demographic",
  qa: "activity",
  qb: "building environment",
};

/** Timestep -> wall-clock label for the step's start. */
export function clockLabel(timestep: number, stepMinutes: number): string {
  const minutes = timestep * stepMinutes;
  const hh = String(Math.floor(minutes / 60) % 24).padStart(2, "0");
  const mm = String(minutes % 60).padStart(2, "0");
  return `${hh}:${mm}`;
}

function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class App {
  readonly store: Store;
  readonly client: ApiClient;
  readonly meta: MetaResponse;
  readonly mainView: GridView;
  readonly aspectViews: Record<AspectName, GridView>;
  /** Resolves when the opportunistic all-steps prefetch finishes. */
  readonly prefetchDone: Promise<void> | null;
  /** The frame most recently painted (may trail the slider when stale). */
  shownFrame: FrameData | null = null;

  private readonly root: HTMLElement;
  private readonly doc: Document;
  private frameSeq = 0;
  private pending: Promise<void> = Promise.resolve();
  private playTimer: ReturnType<typeof setInterval> | null = null;
  private playMs = 0;

  static async boot(opts: AppOptions): Promise<App> {
    const client = new ApiClient({ baseUrl: opts.baseUrl, fetchFn: opts.fetchFn });
    const meta = await client.meta();
    return new App(opts, client, meta);
  }

  private constructor(opts: AppOptions, client: ApiClient, meta: MetaResponse) {
    this.client = client;
    this.meta = meta;
    this.root = opts.root;
    this.doc = opts.root.ownerDocument;
    this.store = new Store(initialState(meta));
    this.buildDom();

    this.mainView = new GridView(this.el<HTMLCanvasElement>("map"), meta.grid, {
      ramp: DEFAULT_RAMP,
      scale: 20,
    });
    this.aspectViews = Object.fromEntries(
      ASPECTS.map((aspect) => [
        aspect,
        new GridView(this.el<HTMLCanvasElement>(`panel-map-${aspect}`), meta.grid, {
          ramp: DEFAULT_RAMP,
          scale: 6,
        }),
      ]),
    ) as Record<AspectName, GridView>;

    this.client.onStale((stale) => {
      this.el("banner").classList.toggle("hidden", !stale);
    });
    this.wireControls();
    this.store.subscribe((s) => this.render(s));
    this.render(this.store.current);
    this.prefetchDone =
      opts.prefetch === false ? null : this.client.prefetchActivity(meta.timesteps);
  }

  /** Wait for in-flight renders (frame fetch + paint) to settle. */
  async idle(): Promise<void> {
    for (;;) {
      const p = this.pending;
      await p;
      if (p === this.pending) return;
    }
  }

  dispose(): void {
    if (this.playTimer !== null) {
      clearInterval(this.playTimer);
      this.playTimer = null;
    }
  }

  el<T extends HTMLElement = HTMLElement>(id: string): T {
    const node = this.root.querySelector(`#${id}`);
    if (node === null) throw new Error(`missing element #${id}`);
    return node as T;
  }

  private buildDom(): void {
    const steps = this.meta.timesteps;
    const weightRows = WEIGHT_KEYS.map(
      (k) => `
      <label class="weight-row">
        <span class="weight-name">${WEIGHT_TITLES[k]} (${k})</span>
        <input id="weight-${k}" type="range" min="0" max="1" step="0.001" />
        <span id="weight-${k}-value" class="weight-value"></span>
      </label>`,
    ).join("");
    const aspectPanels = ASPECTS.map(
      (a) => `
      <div class="aspect-panel" id="panel-${a}">
        <label class="aspect-title">
          <input id="layer-${a}" type="checkbox" />
          ${ASPECT_TITLES[a]}
        </label>
        <canvas id="panel-map-${a}"></canvas>
      </div>`,
    ).join("");
    this.root.innerHTML = `
      <header>
        <h1>community vulnerability explorer</h1>
        <div id="banner" class="banner hidden">
          server unreachable — showing the last fetched frame
        </div>
        <div id="status" class="status hidden"></div>
      </header>
      <main>
        <section class="map-pane">
          <canvas id="map"></canvas>
          <div class="time-controls">
            <button id="play" type="button">play</button>
            <input id="time-slider" type="range" min="0" max="${steps - 1}" step="1" />
            <span id="time-label" class="time-label"></span>
          </div>
          <div id="legend" class="legend"></div>
        </section>
        <aside class="side-pane">
          <section class="weights">
            <h2>aspect weights</h2>
            ${weightRows}
          </section>
          <section class="layers">
            <h2>aspect layers</h2>
            <div class="aspect-panels">${aspectPanels}</div>
          </section>
          <section id="inspector" class="inspector hidden"></section>
        </aside>
      </main>`;

    const legend = this.el("legend");
    legend.innerHTML = legendEntries(DEFAULT_RAMP)
      .map(
        (e) => `
        <span class="legend-entry">
          <span class="swatch" style="background:${cssColor(e.rgb)}"></span>
          ${e.rank} ${e.label}
        </span>`,
      )
      .join("");
  }

  private wireControls(): void {
    const time = this.el<HTMLInputElement>("time-slider");
    time.addEventListener("input", () => {
      this.store.update((s) => setTimestep(s, Number(time.value), this.meta.timesteps));
    });
    for (const k of WEIGHT_KEYS) {
      const slider = this.el<HTMLInputElement>(`weight-${k}`);
      slider.addEventListener("input", () => {
        this.store.update((s) => setWeight(s, k, Number(slider.value)));
        // a refused gesture (all-zero) does not notify; snap the control back
        slider.value = String(this.store.current.weights[k]);
        this.el(`weight-${k}-value`).textContent = this.store.current.weights[k].toFixed(3);
      });
    }
    for (const aspect of ASPECTS) {
      const box = this.el<HTMLInputElement>(`layer-${aspect}`);
      box.addEventListener("change", () => {
        this.store.update((s) => toggleLayer(s, aspect));
        box.checked = this.store.current.visible.has(aspect);
      });
    }
    this.el<HTMLButtonElement>("play").addEventListener("click", () => {
      this.store.update((s) => setPlaying(s, !s.playing));
    });
    const map = this.el<HTMLCanvasElement>("map");
    map.addEventListener("click", (e: MouseEvent) => {
      const rect = map.getBoundingClientRect();
      const sx = rect.width > 0 ? map.width / rect.width : 1;
      const sy = rect.height > 0 ? map.height / rect.height : 1;
      const cell = this.mainView.cellAt((e.clientX - rect.left) * sx, (e.clientY - rect.top) * sy);
      this.store.update((s) => selectCell(s, cell));
    });
  }

  /** Select a cell programmatically (same path as a map click). */
  select(cell: CellRef | null): void {
    this.store.update((s) => selectCell(s, cell));
  }

  private render(state: ViewState): void {
    this.syncControls(state);
    this.syncPlayback(state);
    const seq = ++this.frameSeq;
    this.pending = (async () => {
      let frame: FrameData;
      try {
        frame = await this.client.frame(state.timestep);
      } catch (err) {
        this.showStatus(`failed to load layers: ${String(err)}`);
        return;
      }
      if (seq !== this.frameSeq) return;
      this.showStatus(null);
      this.shownFrame = frame;
      this.mainView.draw(clientCompose(frame.ranks, state.weights));
      for (const aspect of ASPECTS) {
        if (state.visible.has(aspect)) {
          this.aspectViews[aspect].draw([...frame.ranks[aspect]]);
        }
      }
      if (state.selected !== null) {
        this.mainView.highlight(state.selected);
        await this.renderInspector(state.selected, state, frame);
      } else {
        this.el("inspector").classList.add("hidden");
      }
    })().catch((err: unknown) => {
      this.showStatus(`render failed: ${String(err)}`);
    });
  }

  private syncControls(state: ViewState): void {
    const time = this.el<HTMLInputElement>("time-slider");
    time.value = String(state.timestep);
    this.el("time-label").textContent = `step ${state.timestep} — ${clockLabel(
      state.timestep,
      this.meta.step_minutes,
    )}`;
    for (const k of WEIGHT_KEYS) {
      this.el<HTMLInputElement>(`weight-${k}`).value = String(state.weights[k]);
      this.el(`weight-${k}-value`).textContent = state.weights[k].toFixed(3);
    }
    for (const aspect of ASPECTS) {
      this.el<HTMLInputElement>(`layer-${aspect}`).checked = state.visible.has(aspect);
      this.el(`panel-${aspect}`).classList.toggle("collapsed", !state.visible.has(aspect));
    }
    this.el("play").textContent = state.playing ? "pause" : "play";
  }

  private syncPlayback(state: ViewState): void {
    const wantMs = 1000 / state.stepsPerSecond;
    if (state.playing && (this.playTimer === null || this.playMs !== wantMs)) {
      if (this.playTimer !== null) clearInterval(this.playTimer);
      this.playMs = wantMs;
      this.playTimer = setInterval(() => {
        this.store.update((s) => advance(s, this.meta.timesteps));
      }, wantMs);
    } else if (!state.playing && this.playTimer !== null) {
      clearInterval(this.playTimer);
      this.playTimer = null;
      this.playMs = 0;
    }
  }

  private async renderInspector(
    cell: CellRef,
    state: ViewState,
    frame: FrameData,
  ): Promise<void> {
    const panel = this.el("inspector");
    panel.classList.remove("hidden");
    let rows: BuildingRow[];
    try {
      rows = (await this.client.buildings(frame.timestep)).buildings;
    } catch {
      rows = [];
    }
    const report = inspectCell(
      cell,
      frame.timestep,
      this.meta.grid.cols,
      frame.ranks,
      state.weights,
      rows,
    );
    const labels = new Map(this.meta.classes.map((c) => [c.code, c.label]));
    const head = `<h2>cell (${report.row}, ${report.col}) — step ${report.timestep}, ${clockLabel(report.timestep, this.meta.step_minutes)}</h2>`;
    if (report.nodata) {
      panel.innerHTML = `${head}<p class="nodata">no data in this cell</p>`;
      return;
    }
    const rankRows = (
      [
        ["demographic", report.ranks.demographic, report.weights.qd],
        ["activity", report.ranks.activity, report.weights.qa],
        ["building environment", report.ranks.building_env, report.weights.qb],
      ] as const
    )
      .map(
        ([name, p, q]) =>
          `<tr><td>${name}</td><td>p=${p}</td><td>q=${q.toFixed(3)}</td></tr>`,
      )
      .join("");
    const buildingRows = report.buildings
      .map(
        (b) =>
          `<tr><td>${escapeHtml(b.building_id)}</td><td>${escapeHtml(b.type)}</td>` +
          `<td>${b.occupants.toFixed(1)}</td><td>${b.activity_score.toFixed(2)}</td></tr>`,
      )
      .join("");
    const classRows = report.classTotals
      .slice(0, 3)
      .map(
        (c) =>
          `<li>${escapeHtml(c.code)} ${escapeHtml(labels.get(c.code) ?? "")}: ` +
          `${c.occupants.toFixed(1)}</li>`,
      )
      .join("");
    panel.innerHTML = `
      ${head}
      <table class="ranks"><tbody>${rankRows}</tbody></table>
      <p class="value">V = <strong id="inspector-value">${report.value?.toFixed(4)}</strong></p>
      <h3>top buildings</h3>
      <table class="buildings"><tbody>${buildingRows}</tbody></table>
      <h3>dominant activities</h3>
      <ul class="classes">${classRows}</ul>`;
  }

  private showStatus(message: string | null): void {
    const status = this.el("status");
    status.classList.toggle("hidden", message === null);
    status.textContent = message ?? "";
  }
}
