/** Orbit camera and perspective projection for the canvas painter. */

export type Vec3 = [number, number, number];

export interface Projected {
  x: number;
  y: number;
  depth: number;
  scale: number;
}

export class OrbitCamera {
  theta = 0.7;      // azimuth, rad
  phi = 1.1;        // inclination from +z, rad
  distance = 0.45;  // m
  target: Vec3 = [0, 0.05, 0];
  focal = 900;      // px at unit depth

  eye(): Vec3 {
    const sp = Math.sin(this.phi);
    return [
      this.target[0] + this.distance * sp * Math.cos(this.theta),
      this.target[1] + this.distance * sp * Math.sin(this.theta),
      this.target[2] + this.distance * Math.cos(this.phi),
    ];
  }

  orbit(dTheta: number, dPhi: number): void {
    this.theta += dTheta;
    this.phi = Math.min(Math.PI - 0.05, Math.max(0.05, this.phi + dPhi));
  }

  zoom(factor: number): void {
    this.distance = Math.min(5, Math.max(0.05, this.distance * factor));
  }

  /**
   * Camera basis: forward toward the target, right and up spanning the
   * image plane (world +z biased up).
   */
  basis(): { right: Vec3; up: Vec3; forward: Vec3 } {
    const eye = this.eye();
    const forward = normalize(sub(this.target, eye));
    let right = cross(forward, [0, 0, 1]);
    if (norm(right) < 1e-6) {
      right = cross(forward, [0, 1, 0]);
    }
    right = normalize(right);
    const up = cross(right, forward);
    return { right, up, forward };
  }

  /** Perspective projection into canvas pixels; null when behind the eye. */
  project(point: Vec3, width: number, height: number): Projected | null {
    const eye = this.eye();
    const { right, up, forward } = this.basis();
    const rel = sub(point, eye);
    const depth = dot(rel, forward);
    if (depth < 1e-4) {
      return null;
    }
    const scale = this.focal / depth;
    return {
      x: width / 2 + dot(rel, right) * scale,
      y: height / 2 - dot(rel, up) * scale,
      depth,
      scale,
    };
  }
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  return [a[0] / n, a[1] / n, a[2] / n];
}
