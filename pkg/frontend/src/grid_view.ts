/** Canvas painter for a value grid.
 *
 * Grid row 0 is the southern edge, so the image is drawn north-up by
 * flipping rows; nodata cells stay transparent.  pixels() is the pure
 * core (1 px per cell, already flipped) and draw() blits it at the
 * configured scale — environments without a 2D context still exercise
 * the full per-cell color work through pixels().
 */

import { cssColor, DEFAULT_RAMP, rampColor } from "./ramp.js";
import type { CellRef, GridShape, ValueGrid } from "./types.js";

export interface GridViewOptions {
  ramp?: string;
  /** Square pixels per cell. */
  scale?: number;
}

export class GridView {
  readonly rows: number;
  readonly cols: number;
  readonly scale: number;
  readonly ramp: string;
  readonly canvas: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D | null;

  constructor(canvas: HTMLCanvasElement, grid: GridShape, opts: GridViewOptions = {}) {
    this.rows = grid.rows;
    this.cols = grid.cols;
    this.scale = opts.scale ?? 16;
    this.ramp = opts.ramp ?? DEFAULT_RAMP;
    this.canvas = canvas;
    canvas.width = this.cols * this.scale;
    canvas.height = this.rows * this.scale;
    this.ctx = canvas.getContext("2d");
  }

  /** RGBA pixels at one pixel per cell, top row = northernmost grid row. */
  pixels(values: ValueGrid): Uint8ClampedArray {
    const { rows, cols } = this;
    if (values.length !== rows * cols) {
      throw new Error(`expected ${rows * cols} values for ${rows}x${cols}, got ${values.length}`);
    }
    const out = new Uint8ClampedArray(rows * cols * 4);
    for (let r = 0; r < rows; r++) {
      const py = rows - 1 - r;
      for (let c = 0; c < cols; c++) {
        const v = values[r * cols + c];
        if (v === null || v === undefined || !Number.isFinite(v)) continue;
        const rgb = rampColor(this.ramp, v);
        const o = (py * cols + c) * 4;
        out[o] = rgb[0];
        out[o + 1] = rgb[1];
        out[o + 2] = rgb[2];
        out[o + 3] = 255;
      }
    }
    return out;
  }

  /** Paint the grid; cells arrive as composed V values or bare ranks. */
  draw(values: ValueGrid): void {
    const px = this.pixels(values);
    const ctx = this.ctx;
    if (ctx === null) return;
    const s = this.scale;
    ctx.clearRect(0, 0, this.cols * s, this.rows * s);
    for (let py = 0; py < this.rows; py++) {
      for (let c = 0; c < this.cols; c++) {
        const o = (py * this.cols + c) * 4;
        if (px[o + 3] === 0) continue;
        ctx.fillStyle = `rgb(${px[o]},${px[o + 1]},${px[o + 2]})`;
        ctx.fillRect(c * s, py * s, s, s);
      }
    }
  }

  /** Canvas pixel position -> grid cell, undoing the north-up flip. */
  cellAt(x: number, y: number): CellRef | null {
    const col = Math.floor(x / this.scale);
    const py = Math.floor(y / this.scale);
    if (col < 0 || col >= this.cols || py < 0 || py >= this.rows) return null;
    return { row: this.rows - 1 - py, col };
  }

  /** Outline one cell on top of the painted grid (selection marker). */
  highlight(cell: CellRef, color = "#00e5ff"): void {
    const ctx = this.ctx;
    if (ctx === null) return;
    const s = this.scale;
    const py = this.rows - 1 - cell.row;
    ctx.strokeStyle = color;
    ctx.lineWidth = Math.max(1, s / 8);
    ctx.strokeRect(cell.col * s + 0.5, py * s + 0.5, s - 1, s - 1);
  }
}

export { cssColor };
