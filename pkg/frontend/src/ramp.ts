/** Color ramps, duplicated verbatim from the rendering engine so the
 * browser map and the server PNGs agree pixel-for-pixel: anchor colors
 * at ranks 1..5, linear interpolation between, round-half-to-even like
 * the engine's integer rounding.
 */

export type Rgb = readonly [number, number, number];

export const RAMPS: Record<string, readonly Rgb[]> = {
  heat: [
    [255, 245, 200],
    [254, 204, 92],
    [253, 141, 60],
    [227, 74, 51],
    [128, 0, 38],
  ],
  gray: [
    [238, 238, 238],
    [189, 189, 189],
    [140, 140, 140],
    [90, 90, 90],
    [40, 40, 40],
  ],
  blues: [
    [239, 243, 255],
    [189, 215, 231],
    [107, 174, 214],
    [49, 130, 189],
    [8, 48, 107],
  ],
};

export const DEFAULT_RAMP = "heat";

export const LEGEND_LABELS = [
  "low",
  "medium-low",
  "medium",
  "medium-high",
  "high",
] as const;

export interface LegendEntry {
  rank: number;
  label: string;
  rgb: Rgb;
}

function anchorsOf(ramp: string): readonly Rgb[] {
  const anchors = RAMPS[ramp];
  if (anchors === undefined) {
    const names = Object.keys(RAMPS).sort().join(", ");
    throw new Error(`unknown ramp '${ramp}', available: ${names}`);
  }
  return anchors;
}

function roundHalfEven(x: number): number {
  const floor = Math.floor(x);
  const diff = x - floor;
  if (diff > 0.5) return floor + 1;
  if (diff < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

/** RGB for a value in [1, 5]: anchors at integers, interpolated between. */
export function rampColor(ramp: string, value: number): Rgb {
  const anchors = anchorsOf(ramp);
  const v = Math.min(Math.max(value, 1), 5);
  const lo = Math.min(Math.floor(v), 4);
  const frac = v - lo;
  const a = anchors[lo - 1] as Rgb;
  const b = anchors[lo] as Rgb;
  return [
    roundHalfEven(a[0] + frac * (b[0] - a[0])),
    roundHalfEven(a[1] + frac * (b[1] - a[1])),
    roundHalfEven(a[2] + frac * (b[2] - a[2])),
  ];
}

/** Perceptual luminance (sRGB coefficients); used to verify "higher is darker". */
export function relativeLuminance(rgb: Rgb): number {
  return 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2];
}

/** Rank -> color legend entries, lowest rank first. */
export function legendEntries(ramp: string = DEFAULT_RAMP): LegendEntry[] {
  const anchors = anchorsOf(ramp);
  return LEGEND_LABELS.map((label, i) => ({
    rank: i + 1,
    label,
    rgb: anchors[i] as Rgb,
  }));
}

export function cssColor(rgb: Rgb): string {
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}
