import type { ShadingDoc } from '../api/types';
import { dot, type Vec3 } from '../math/vec3';

export type Rgb = [number, number, number];

/**
 * Headlight line-lighting lookup. The server tabulates the intensity as a
 * function of t1 = (L.T + 1)/2 where L is the light (= view) direction and T
 * the line tangent; the client only interpolates.
 */
export function tableLookup(entries: number[], t1: number): number {
  const n = entries.length;
  if (n < 2) throw new Error('light table needs at least two entries');
  const t = Math.min(Math.max(t1, 0), 1) * (n - 1);
  const i = Math.min(Math.floor(t), n - 2);
  const f = t - i;
  return entries[i] * (1 - f) + entries[i + 1] * f;
}

/** Texture coordinate of a unit tangent under a headlight direction. */
export function tangentCoordinate(light: Vec3, tangent: Vec3): number {
  return (dot(light, tangent) + 1) / 2;
}

/** Linear fog: 1 at z_start and nearer, 0 at z_end and beyond. */
export function fogFactor(depth: number, zStart: number, zEnd: number): number {
  if (!(zStart < zEnd)) throw new Error('fog requires zStart < zEnd');
  return Math.min(Math.max((zEnd - depth) / (zEnd - zStart), 0), 1);
}

/** Piecewise-linear colormap through equally spaced RGB control points. */
export function mapColor(
  value: number,
  min: number,
  max: number,
  controls: number[][],
): Rgb {
  if (!(min < max)) throw new Error('color scaling requires min < max');
  if (controls.length < 2) throw new Error('colormap needs two control points');
  const t = (Math.min(Math.max(value, min), max) - min) / (max - min);
  const segments = controls.length - 1;
  const pos = t * segments;
  const i = Math.min(Math.floor(pos), segments - 1);
  const f = pos - i;
  const a = controls[i];
  const b = controls[i + 1];
  return [
    a[0] * (1 - f) + b[0] * f,
    a[1] * (1 - f) + b[1] * f,
    a[2] * (1 - f) + b[2] * f,
  ];
}

/**
 * Final vertex color: colormap of the mapped quantity, modulated by the
 * light-table intensity and the fog factor.
 */
export function vertexColor(
  shading: ShadingDoc,
  colormap: string,
  value: number,
  min: number,
  max: number,
  light: Vec3,
  tangent: Vec3,
  depth: number,
): Rgb {
  const cm = shading.colormaps[colormap];
  if (!cm) throw new Error(`unknown colormap ${colormap}`);
  const base = mapColor(value, min, max, cm.controls);
  const intensity = tableLookup(
    shading.light_table.entries,
    tangentCoordinate(light, tangent),
  );
  const fog = fogFactor(depth, shading.autofocus.fog.z_start, shading.autofocus.fog.z_end);
  const m = intensity * fog;
  return [base[0] * m, base[1] * m, base[2] * m];
}

export function rgbToCss([r, g, b]: Rgb): string {
  const c = (v: number) => Math.round(Math.min(Math.max(v, 0), 1) * 255);
  return `rgb(${c(r)}, ${c(g)}, ${c(b)})`;
}
