/** Wire types for the vulnerability-map HTTP API.
 *
 * These mirror the JSON bodies served by the Python service; the client
 * performs no scoring of its own, so every number here originates
 * server-side.
 */

export interface GridShape {
  origin_x: number;
  origin_y: number;
  cell_size: number;
  rows: number;
  cols: number;
}

export interface ClassInfo {
  code: string;
  label: string;
}

/** Raw or normalized aspect weights (demographic, activity, building env). */
export interface WeightTriple {
  qd: number;
  qa: number;
  qb: number;
}

export type AspectName = "demographic" | "activity" | "building_env";

export const ASPECTS: readonly AspectName[] = [
  "demographic",
  "activity",
  "building_env",
];

export const WEIGHT_KEYS: readonly (keyof WeightTriple)[] = ["qd", "qa", "qb"];

/** Row-major over the grid; null marks a nodata cell. */
export type RankGrid = readonly (number | null)[];
export type ValueGrid = (number | null)[];

export interface MetaResponse {
  grid: GridShape;
  timesteps: number;
  step_minutes: number;
  classes: ClassInfo[];
  aspects: AspectName[];
  default_weights: WeightTriple;
  ramps: string[];
  total_population: number;
  content_hash: string;
}

export interface LayerResponse {
  aspect: AspectName;
  timestep: number | null;
  grid: GridShape;
  ranks: (number | null)[];
}

export interface VriResponse {
  timestep: number;
  weights: WeightTriple;
  grid: GridShape;
  values: (number | null)[];
}

export interface BuildingRow {
  building_id: string;
  type: string;
  x: number;
  y: number;
  cell: [number, number] | null;
  occupants: number;
  by_class: Record<string, number>;
  activity_score: number;
  env_score: number;
}

export interface BuildingsResponse {
  timestep: number;
  buildings: BuildingRow[];
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}

export interface CellRef {
  row: number;
  col: number;
}
