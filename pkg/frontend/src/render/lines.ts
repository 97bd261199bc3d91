import type { ShadingDoc, StreamlinesDoc } from '../api/types';
import { normalize, type Vec3 } from '../math/vec3';
import type { OrbitCamera, Viewport } from '../view/camera';
import type { MappedQuantity, ViewState } from '../view/viewstate';
import { vertexColor, type Rgb } from './shading';

export interface LineSegment {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  /** Mean view depth, used for back-to-front ordering. */
  depth: number;
  color: Rgb;
  electrode: number;
}

export function lineValues(quantity: MappedQuantity, line: {
  magnitudes: number[];
  potentials: number[];
}): number[] {
  return quantity === 'V' ? line.potentials : line.magnitudes;
}

/** Data range of the mapped quantity over all visible lines. */
export function valueRange(
  doc: StreamlinesDoc,
  quantity: MappedQuantity,
  view: ViewState,
): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const group of doc.groups) {
    if (!view.groupVisible(view.lineSegmentation, group.electrode)) continue;
    for (const line of group.lines) {
      for (const v of lineValues(quantity, line)) {
        if (v < min) min = v;
        if (v > max) max = v;
      }
    }
  }
  if (!(min < max)) {
    // Degenerate (constant or empty) data still needs a valid scale.
    min = min === Infinity ? 0 : min - 0.5;
    max = min + 1;
  }
  return { min, max };
}

/**
 * Projects every visible streamline into colored 2D segments, sorted
 * back-to-front so painting order approximates depth.
 */
export function buildSegments(
  doc: StreamlinesDoc,
  shading: ShadingDoc,
  camera: OrbitCamera,
  viewport: Viewport,
  view: ViewState,
): LineSegment[] {
  const scale = view.userScaling ?? valueRange(doc, view.lineQuantity, view);
  const light = normalize(camera.basis().forward);
  const segments: LineSegment[] = [];
  for (const group of doc.groups) {
    if (!view.groupVisible(view.lineSegmentation, group.electrode)) continue;
    for (const line of group.lines) {
      const values = lineValues(view.lineQuantity, line);
      for (let i = 0; i + 1 < line.positions.length; i++) {
        const a = camera.project(line.positions[i] as Vec3, viewport);
        const b = camera.project(line.positions[i + 1] as Vec3, viewport);
        if (!a || !b) continue;
        const depth = (a.depth + b.depth) / 2;
        const color = vertexColor(
          shading,
          view.colormap,
          (values[i] + values[i + 1]) / 2,
          scale.min,
          scale.max,
          light,
          normalize(line.tangents[i] as Vec3),
          depth,
        );
        segments.push({
          x0: a.x,
          y0: a.y,
          x1: b.x,
          y1: b.y,
          depth,
          color,
          electrode: group.electrode,
        });
      }
    }
  }
  segments.sort((p, q) => q.depth - p.depth);
  return segments;
}
