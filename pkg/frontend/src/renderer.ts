/** Canvas 2D painter: depth-sorted lines and spheres through the camera. */

import { OrbitCamera } from "./camera.js";
import { Scene } from "./scene.js";

interface Drawable {
  depth: number;
  draw: (ctx: CanvasRenderingContext2D) => void;
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  camera: OrbitCamera,
  scene: Scene,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const drawables: Drawable[] = [];

  for (const line of scene.lines) {
    const a = camera.project(line.a, width, height);
    const b = camera.project(line.b, width, height);
    if (a === null || b === null) continue;
    drawables.push({
      depth: (a.depth + b.depth) / 2,
      draw: (c) => {
        c.strokeStyle = line.color;
        c.lineWidth = line.width;
        c.lineCap = "round";
        c.beginPath();
        c.moveTo(a.x, a.y);
        c.lineTo(b.x, b.y);
        c.stroke();
      },
    });
  }

  for (const sphere of scene.spheres) {
    const p = camera.project(sphere.center, width, height);
    if (p === null) continue;
    const radius = Math.max(1.5, sphere.radius * p.scale);
    drawables.push({
      depth: p.depth,
      draw: (c) => {
        c.fillStyle = sphere.color;
        c.beginPath();
        c.arc(p.x, p.y, radius, 0, 2 * Math.PI);
        c.fill();
      },
    });
  }

  drawables.sort((a, b) => b.depth - a.depth);  // paint far to near
  for (const drawable of drawables) {
    drawable.draw(ctx);
  }
}
