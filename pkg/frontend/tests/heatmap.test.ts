import { describe, expect, it } from 'vitest';

import { buildHeatmap, rangeOf } from '../src/render/heatmap';

const GRAY = [
  [0, 0, 0],
  [1, 1, 1],
];

describe('rangeOf', () => {
  it('finds the extrema', () => {
    expect(rangeOf([3, -1, 7, 2])).toEqual({ min: -1, max: 7 });
    expect(rangeOf([])).toEqual({ min: 0, max: 1 });
  });
});

describe('buildHeatmap', () => {
  it('lays out row-major values with one cell each', () => {
    const cells = buildHeatmap([1, 2, 3, 4, 5, 6], [2, 3], GRAY);
    expect(cells.length).toBe(6);
    expect(cells[0]).toMatchObject({ row: 0, col: 0, value: 1 });
    expect(cells[5]).toMatchObject({ row: 1, col: 2, value: 6 });
  });

  it('auto-scales to the data range', () => {
    const cells = buildHeatmap([0, 5, 10], [1, 3], GRAY);
    expect(cells[0].color[0]).toBeCloseTo(0, 12);
    expect(cells[1].color[0]).toBeCloseTo(0.5, 12);
    expect(cells[2].color[0]).toBeCloseTo(1, 12);
  });

  it('uses explicit per-face scaling when given', () => {
    const cells = buildHeatmap([5], [1, 1], GRAY, { min: 0, max: 10 });
    expect(cells[0].color[0]).toBeCloseTo(0.5, 12);
  });

  it('survives constant planes', () => {
    const cells = buildHeatmap([2, 2], [1, 2], GRAY);
    for (const cell of cells) {
      for (const channel of cell.color) {
        expect(Number.isFinite(channel)).toBe(true);
      }
    }
  });

  it('rejects mismatched dims', () => {
    expect(() => buildHeatmap([1, 2, 3], [2, 2], GRAY)).toThrow();
  });
});
