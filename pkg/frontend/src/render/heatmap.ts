import { mapColor, type Rgb } from './shading';

export interface HeatmapCell {
  row: number;
  col: number;
  value: number;
  color: Rgb;
}

/**
 * Turns a row-major value plane (slices, deposit faces) into colored cells.
 * Deposit maps pass their per-face min/max so each face spans the full
 * colormap; slices default to the plane's own range.
 */
export function buildHeatmap(
  values: number[],
  dims: [number, number],
  controls: number[][],
  scaling?: { min: number; max: number },
): HeatmapCell[] {
  const [rows, cols] = dims;
  if (values.length !== rows * cols) {
    throw new Error(`expected ${rows * cols} values, got ${values.length}`);
  }
  let { min, max } = scaling ?? rangeOf(values);
  if (!(min < max)) {
    min -= 0.5;
    max = min + 1;
  }
  const cells: HeatmapCell[] = [];
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const value = values[r * cols + c];
      cells.push({ row: r, col: c, value, color: mapColor(value, min, max, controls) });
    }
  }
  return cells;
}

export function rangeOf(values: number[]): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (min === Infinity) return { min: 0, max: 1 };
  return { min, max };
}
