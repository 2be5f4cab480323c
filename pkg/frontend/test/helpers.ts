/** Shared test scaffolding: fixture loading, a canned fake service, and
 * a recording 2D-context stub for canvas assertions.
 *
 * The fixtures are verbatim HTTP bodies captured from the Python
 * service on the bundled synthetic county (see
 * scripts/export_ui_fixtures.py), so parity tests compare against the
 * real engine without a running server.
 */

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

import type {
  BuildingsResponse,
  LayerResponse,
  MetaResponse,
  VriResponse,
  WeightTriple,
} from "../src/types.js";
import type { AspectRanks } from "../src/compose.js";

function load<T>(name: string): T {
  // vitest's jsdom environment rewrites import.meta.url, so anchor on
  // the project root (vitest runs with cwd = frontend/).
  const path = resolve(process.cwd(), "test", "fixtures", name);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}

export interface LayersFixture {
  demographic: LayerResponse;
  building_env: LayerResponse;
  activity: Record<string, LayerResponse>;
}

export interface VriCase {
  t: number;
  raw_weights: [number, number, number];
  response: VriResponse;
}

export interface VriCasesFixture {
  default: VriResponse;
  cases: VriCase[];
}

export const meta = load<MetaResponse>("meta.json");
export const layers = load<LayersFixture>("layers.json");
export const vriCases = load<VriCasesFixture>("vri_cases.json");
export const buildingsFixture = load<Record<string, BuildingsResponse>>("buildings.json");

export function ranksAt(t: number): AspectRanks {
  const activity = layers.activity[String(t)];
  if (activity === undefined) throw new Error(`fixture has no activity step ${t}`);
  return {
    demographic: layers.demographic.ranks,
    activity: activity.ranks,
    building_env: layers.building_env.ranks,
  };
}

export function rawTriple(raw: readonly [number, number, number]): WeightTriple {
  return { qd: raw[0], qa: raw[1], qb: raw[2] };
}

/** Tiny deterministic RNG for test inputs (mulberry32). */
export function seededRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

// --- fake service ------------------------------------------------------

/** Serves the captured fixture bodies over a fetch-shaped interface and
 * records every request, so tests can assert de-duplication and flip
 * endpoints into failure. */
export class FakeService {
  calls: string[] = [];
  failAll = false;
  readonly failActivity = new Set<number>();

  readonly fetchFn = async (url: string): Promise<Response> => {
    this.calls.push(url);
    const u = new URL(url);
    const t = Number(u.searchParams.get("t") ?? "0");
    if (this.failAll) {
      return json({ error: { code: "unavailable", message: "induced outage" } }, 503);
    }
    switch (u.pathname) {
      case "/meta":
        return json(meta);
      case "/layers/demographic":
        return json(layers.demographic);
      case "/layers/building_env":
        return json(layers.building_env);
      case "/layers/activity": {
        if (this.failActivity.has(t)) {
          return json({ error: { code: "unavailable", message: "induced failure" } }, 503);
        }
        const body = layers.activity[String(t)];
        if (body === undefined) {
          return json({ error: { code: "unknown_timestep", message: `no step ${t}` } }, 404);
        }
        return json(body);
      }
      case "/buildings": {
        const body = buildingsFixture[String(t)];
        if (body === undefined) {
          return json({ error: { code: "unknown_timestep", message: `no step ${t}` } }, 404);
        }
        return json(body);
      }
      case "/vri":
        return json(vriCases.default);
      default:
        return json({ error: { code: "not_found", message: u.pathname } }, 404);
    }
  };

  count(substring: string): number {
    return this.calls.filter((c) => c.includes(substring)).length;
  }
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

// --- canvas stub --------------------------------------------------------

export interface RectCall {
  x: number;
  y: number;
  w: number;
  h: number;
  style: string;
}

/** Records fills/strokes; jsdom has no real 2D context, so the painter
 * is exercised against this stand-in (an approximation of a headless
 * browser canvas). */
export class FakeContext2D {
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 1;
  clears = 0;
  rects: RectCall[] = [];
  strokedRects: RectCall[] = [];

  clearRect(): void {
    this.clears += 1;
    this.rects = [];
  }

  fillRect(x: number, y: number, w: number, h: number): void {
    this.rects.push({ x, y, w, h, style: String(this.fillStyle) });
  }

  strokeRect(x: number, y: number, w: number, h: number): void {
    this.strokedRects.push({ x, y, w, h, style: String(this.strokeStyle) });
  }
}

type CanvasWithStub = HTMLCanvasElement & { __stubCtx?: FakeContext2D };

/** Replace HTMLCanvasElement.getContext with the recording stub;
 * returns a restore function for afterEach. */
export function installCanvasStub(): () => void {
  const proto = HTMLCanvasElement.prototype as unknown as {
    getContext: (kind: string) => unknown;
  };
  const original = proto.getContext;
  proto.getContext = function (this: CanvasWithStub, kind: string): unknown {
    if (kind !== "2d") return null;
    if (this.__stubCtx === undefined) this.__stubCtx = new FakeContext2D();
    return this.__stubCtx;
  };
  return () => {
    proto.getContext = original;
  };
}

export function ctxOf(canvas: HTMLCanvasElement): FakeContext2D {
  const ctx = (canvas as CanvasWithStub).__stubCtx;
  if (ctx === undefined) throw new Error("canvas has no stub context (stub not installed?)");
  return ctx;
}
