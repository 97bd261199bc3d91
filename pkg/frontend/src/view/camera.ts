import { add, cross, dot, normalize, scale, sub, type Vec3 } from '../math/vec3';

export interface Viewport {
  width: number;
  height: number;
}

export interface ProjectedPoint {
  /** Pixel coordinates, origin top-left. */
  x: number;
  y: number;
  /** View-space depth from the camera along the view axis (meters). */
  depth: number;
}

/**
 * Orbit camera around a focus point. Azimuth rotates around the world +y
 * axis, elevation tilts toward the poles, twist rolls around the view axis.
 */
export class OrbitCamera {
  focus: Vec3 = [0, 0, 0];
  azimuth = 0;
  elevation = 0;
  twist = 0;
  distance = 1;
  fov = (45 * Math.PI) / 180;

  /** Unit eye-to-focus direction and the screen right/up axes. */
  basis(): { forward: Vec3; right: Vec3; up: Vec3 } {
    const ce = Math.cos(this.elevation);
    const se = Math.sin(this.elevation);
    const ca = Math.cos(this.azimuth);
    const sa = Math.sin(this.azimuth);
    const outward: Vec3 = [ce * sa, se, ce * ca];
    const forward = scale(outward, -1);
    let right = normalize(cross(forward, [0, 1, 0]));
    if (right[0] === 0 && right[1] === 0 && right[2] === 0) {
      // Looking straight along the pole: derive right from the azimuth.
      right = [ca, 0, -sa];
    }
    let up = cross(right, forward);
    if (this.twist !== 0) {
      const ct = Math.cos(this.twist);
      const st = Math.sin(this.twist);
      const r2 = add(scale(right, ct), scale(up, st));
      up = add(scale(up, ct), scale(right, -st));
      right = r2;
    }
    return { forward, right, up };
  }

  position(): Vec3 {
    const { forward } = this.basis();
    return sub(this.focus, scale(forward, this.distance));
  }

  /** World point to camera coordinates (x right, y up, depth forward). */
  worldToView(p: Vec3): Vec3 {
    const { forward, right, up } = this.basis();
    const rel = sub(p, this.position());
    return [dot(rel, right), dot(rel, up), dot(rel, forward)];
  }

  /** Perspective projection to pixels; null for points behind the camera. */
  project(p: Vec3, viewport: Viewport): ProjectedPoint | null {
    const [vx, vy, depth] = this.worldToView(p);
    if (depth <= 0) return null;
    const focal = viewport.height / 2 / Math.tan(this.fov / 2);
    return {
      x: viewport.width / 2 + (vx / depth) * focal,
      y: viewport.height / 2 - (vy / depth) * focal,
      depth,
    };
  }

  /** Frame a bounding sphere: its silhouette fills the view cone. */
  focusOn(center: Vec3, radius: number): void {
    if (radius <= 0) throw new Error('focusOn requires a positive radius');
    this.focus = center;
    this.distance = radius / Math.sin(this.fov / 2);
  }

  rotate(dAzimuth: number, dElevation: number): void {
    const cap = Math.PI / 2 - 1e-3;
    this.azimuth = wrapAngle(this.azimuth + dAzimuth);
    this.elevation = Math.min(cap, Math.max(-cap, this.elevation + dElevation));
  }

  roll(dTwist: number): void {
    this.twist = wrapAngle(this.twist + dTwist);
  }

  /** Jump to the diametrically opposite viewpoint. */
  flip(): void {
    this.azimuth = wrapAngle(this.azimuth + Math.PI);
    this.elevation = -this.elevation;
  }

  pan(dxPixels: number, dyPixels: number, viewport: Viewport): void {
    const { right, up } = this.basis();
    const focal = viewport.height / 2 / Math.tan(this.fov / 2);
    const perPixel = this.distance / focal;
    this.focus = add(
      this.focus,
      add(scale(right, -dxPixels * perPixel), scale(up, dyPixels * perPixel)),
    );
  }

  zoom(factor: number): void {
    if (factor <= 0) throw new Error('zoom factor must be positive');
    this.distance = Math.max(1e-6, this.distance * factor);
  }
}

export function wrapAngle(a: number): number {
  const tau = 2 * Math.PI;
  return ((a % tau) + tau) % tau;
}

/**
 * Trackball region split: drags starting inside the central disc orbit the
 * camera, drags starting on the border ring twist it.
 */
export function trackballRegion(
  x: number,
  y: number,
  viewport: Viewport,
  borderFraction = 0.85,
): 'inside' | 'border' {
  const cx = viewport.width / 2;
  const cy = viewport.height / 2;
  const r = Math.min(cx, cy);
  const d = Math.hypot(x - cx, y - cy);
  return d <= borderFraction * r ? 'inside' : 'border';
}

/** Twist increment for a border drag: angle swept around the view center. */
export function twistDelta(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  viewport: Viewport,
): number {
  const cx = viewport.width / 2;
  const cy = viewport.height / 2;
  return Math.atan2(y1 - cy, x1 - cx) - Math.atan2(y0 - cy, x0 - cx);
}
