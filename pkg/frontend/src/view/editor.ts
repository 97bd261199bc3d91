import type { Box, ElectrodeDoc, GridDoc } from '../api/types';
import type { Vec3 } from '../math/vec3';
import type { OrbitCamera, Viewport } from '../view/camera';

/**
 * Clamps an electrode box to the grid, preserving its size where possible:
 * boxes are shifted back inside before being shrunk.
 */
export function clampBox(box: Box, grid: GridDoc): Box {
  const limits = [grid.nx - 1, grid.ny - 1, grid.nz - 1];
  const out: number[] = [];
  for (let axis = 0; axis < 3; axis++) {
    let lo = Math.round(box[2 * axis]);
    let hi = Math.round(box[2 * axis + 1]);
    if (hi < lo) [lo, hi] = [hi, lo];
    const size = Math.max(1, Math.min(hi - lo, limits[axis]));
    lo = Math.min(Math.max(lo, 0), limits[axis] - size);
    out.push(lo, lo + size);
  }
  return out as Box;
}

/** Axis-aligned corner positions of an electrode box in meters. */
export function boxCorners(box: Box, h: number): Vec3[] {
  const corners: Vec3[] = [];
  for (const x of [box[0], box[1]]) {
    for (const y of [box[2], box[3]]) {
      for (const z of [box[4], box[5]]) {
        corners.push([x * h, y * h, z * h]);
      }
    }
  }
  return corners;
}

/**
 * Pointer picking: the frontmost electrode whose projected bounding
 * rectangle contains the pointer, or null.
 */
export function pickElectrode(
  electrodes: ElectrodeDoc[],
  grid: GridDoc,
  camera: OrbitCamera,
  viewport: Viewport,
  px: number,
  py: number,
): number | null {
  let best: number | null = null;
  let bestDepth = Infinity;
  electrodes.forEach((e, id) => {
    let minX = Infinity;
    let maxX = -Infinity;
    let minY = Infinity;
    let maxY = -Infinity;
    let depth = Infinity;
    for (const corner of boxCorners(e.box, grid.h)) {
      const p = camera.project(corner, viewport);
      if (!p) return;
      minX = Math.min(minX, p.x);
      maxX = Math.max(maxX, p.x);
      minY = Math.min(minY, p.y);
      maxY = Math.max(maxY, p.y);
      depth = Math.min(depth, p.depth);
    }
    if (px >= minX && px <= maxX && py >= minY && py <= maxY && depth < bestDepth) {
      best = id;
      bestDepth = depth;
    }
  });
  return best;
}

/** World-space bounding sphere of an electrode, for autofocus. */
export function electrodeSphere(box: Box, h: number): { center: Vec3; radius: number } {
  const center: Vec3 = [
    ((box[0] + box[1]) / 2) * h,
    ((box[2] + box[3]) / 2) * h,
    ((box[4] + box[5]) / 2) * h,
  ];
  const radius =
    (Math.hypot(box[1] - box[0], box[3] - box[2], box[5] - box[4]) / 2) * h;
  return { center, radius };
}
