/** HTTP client for the vulnerability-map service.
 *
 * The client owns all caching: rank layers and building snapshots are
 * memoised per key, concurrent requests for the same resource share one
 * in-flight fetch, and a failed frame fetch falls back to the last good
 * frame while raising the stale-data flag that drives the banner.
 */

import type { AspectRanks } from "./compose.js";
import type {
  ApiErrorBody,
  AspectName,
  BuildingsResponse,
  LayerResponse,
  MetaResponse,
  VriResponse,
  WeightTriple,
} from "./types.js";

export type FetchLike = (url: string) => Promise<Response>;

export interface ApiClientOptions {
  /** Service base URL — the only configuration the client takes. */
  baseUrl: string;
  fetchFn?: FetchLike;
}

/** The three rank grids needed to compose one timestep. */
export interface FrameData {
  timestep: number;
  ranks: AspectRanks;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;
  private readonly layerCache = new Map<string, LayerResponse>();
  private readonly buildingCache = new Map<number, BuildingsResponse>();
  private readonly inFlight = new Map<string, Promise<unknown>>();
  private lastGoodFrame: FrameData | null = null;
  private staleFlag = false;
  private staleListener: ((stale: boolean) => void) | null = null;

  constructor(opts: ApiClientOptions) {
    this.baseUrl = opts.baseUrl.replace(/\/+$/, "");
    this.fetchFn = opts.fetchFn ?? ((url) => fetch(url));
  }

  /** True while the displayed frame is older than the requested one. */
  get stale(): boolean {
    return this.staleFlag;
  }

  /** Register the banner hook; called with true/false on transitions. */
  onStale(fn: (stale: boolean) => void): void {
    this.staleListener = fn;
  }

  private setStale(v: boolean): void {
    if (v === this.staleFlag) return;
    this.staleFlag = v;
    this.staleListener?.(v);
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) {
      let code = "http_error";
      let message = `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as ApiErrorBody;
        if (body && body.error) {
          code = body.error.code;
          message = body.error.message;
        }
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(code, message, resp.status);
    }
    return (await resp.json()) as T;
  }

  /** Share one in-flight request per key; cache the settled value. */
  private dedup<T>(key: string, load: () => Promise<T>, store: (v: T) => void): Promise<T> {
    const pending = this.inFlight.get(key);
    if (pending !== undefined) return pending as Promise<T>;
    const p = load().then(
      (value) => {
        this.inFlight.delete(key);
        store(value);
        return value;
      },
      (err) => {
        this.inFlight.delete(key);
        throw err;
      },
    );
    this.inFlight.set(key, p);
    return p;
  }

  meta(): Promise<MetaResponse> {
    return this.getJson<MetaResponse>("/meta");
  }

  /** One aspect layer, memoised per (aspect, timestep). */
  layer(aspect: AspectName, timestep = 0): Promise<LayerResponse> {
    const key = aspect === "activity" ? `layer:activity:${timestep}` : `layer:${aspect}`;
    const cached = this.layerCache.get(key);
    if (cached !== undefined) return Promise.resolve(cached);
    const path =
      aspect === "activity" ? `/layers/activity?t=${timestep}` : `/layers/${aspect}`;
    return this.dedup(key, () => this.getJson<LayerResponse>(path), (body) =>
      this.layerCache.set(key, body),
    );
  }

  /** The three rank grids for one timestep.  On any fetch failure the
   * last successfully assembled frame is returned unchanged and the
   * stale flag goes up, so the caller keeps showing the old map. */
  async frame(timestep: number): Promise<FrameData> {
    try {
      const [demographic, activity, buildingEnv] = await Promise.all([
        this.layer("demographic"),
        this.layer("activity", timestep),
        this.layer("building_env"),
      ]);
      const frame: FrameData = {
        timestep,
        ranks: {
          demographic: demographic.ranks,
          activity: activity.ranks,
          building_env: buildingEnv.ranks,
        },
      };
      this.lastGoodFrame = frame;
      this.setStale(false);
      return frame;
    } catch (err) {
      if (this.lastGoodFrame !== null) {
        this.setStale(true);
        return this.lastGoodFrame;
      }
      throw err;
    }
  }

  /** Warm the cache for every activity step; failures are left for the
   * on-demand path to retry, since prefetching is opportunistic. */
  async prefetchActivity(timesteps: number, concurrency = 6): Promise<void> {
    let next = 0;
    const worker = async (): Promise<void> => {
      while (next < timesteps) {
        const t = next++;
        try {
          await this.layer("activity", t);
        } catch {
          // opportunistic
        }
      }
    };
    const n = Math.max(1, Math.min(concurrency, timesteps));
    await Promise.all(Array.from({ length: n }, worker));
  }

  /** Server-side composition; the client uses it only for parity checks. */
  vri(timestep: number, weights?: WeightTriple): Promise<VriResponse> {
    const params = new URLSearchParams({ t: String(timestep) });
    if (weights !== undefined) {
      params.set("qd", String(weights.qd));
      params.set("qa", String(weights.qa));
      params.set("qb", String(weights.qb));
    }
    return this.getJson<VriResponse>(`/vri?${params.toString()}`);
  }

  /** Per-building occupancy and scores at one step, memoised per step. */
  buildings(timestep: number): Promise<BuildingsResponse> {
    const cached = this.buildingCache.get(timestep);
    if (cached !== undefined) return Promise.resolve(cached);
    return this.dedup(
      `buildings:${timestep}`,
      () => this.getJson<BuildingsResponse>(`/buildings?t=${timestep}`),
      (body) => this.buildingCache.set(timestep, body),
    );
  }
}
