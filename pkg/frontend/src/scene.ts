/**
 * Turn one embody response into drawable primitives.
 *
 * The scene is plain data (lines and spheres in world coordinates); all
 * positions come from the service response, never from local kinematics.
 */

import { Vec3 } from "./camera.js";
import { EmbodyResponse, FINGER_NAMES, HandInfo, PoseJson } from "./types.js";

export interface Line {
  a: Vec3;
  b: Vec3;
  color: string;
  width: number;
}

export interface Sphere {
  center: Vec3;
  radius: number;
  color: string;
}

export interface Scene {
  lines: Line[];
  spheres: Sphere[];
}

const MODEL_BONE = "#4f8fd0";
const MODEL_MARKER = "#2ecc71";
const ROBOT_BONE = "#e67e22";
const ROBOT_MARKER = "#e74c9c";
const AXIS_COLORS = ["#d04040", "#40b040", "#4060d0"];

function asVec3(values: number[]): Vec3 {
  return [values[0], values[1], values[2]];
}

function poseMatrix(pose: PoseJson): { origin: Vec3; axes: Vec3[] } {
  const [w, x, y, z] = pose.quaternion_wxyz;
  const axes: Vec3[] = [
    [1 - 2 * (y * y + z * z), 2 * (x * y + z * w), 2 * (x * z - y * w)],
    [2 * (x * y - z * w), 1 - 2 * (x * x + z * z), 2 * (y * z + x * w)],
    [2 * (x * z + y * w), 2 * (y * z - x * w), 1 - 2 * (x * x + y * y)],
  ];
  return { origin: asVec3(pose.translation), axes };
}

/** Skeleton polylines plus marker spheres for the intermediate hand. */
export function modelScene(response: EmbodyResponse): Scene {
  const lines: Line[] = [];
  const spheres: Sphere[] = [];
  for (const finger of FINGER_NAMES) {
    const chain = response.model_skeleton[finger] ?? [];
    for (let i = 0; i + 1 < chain.length; i++) {
      lines.push({ a: asVec3(chain[i]), b: asVec3(chain[i + 1]),
                   color: MODEL_BONE, width: 4 });
    }
    for (const point of chain) {
      spheres.push({ center: asVec3(point), radius: 0.004, color: MODEL_BONE });
    }
    for (const marker of response.model_markers[finger] ?? []) {
      spheres.push({ center: asVec3(marker), radius: 0.005, color: MODEL_MARKER });
    }
  }
  return { lines, spheres };
}

/** Robot link segments (per advertised topology), origins, and markers. */
export function robotScene(response: EmbodyResponse, hand: HandInfo): Scene {
  const lines: Line[] = [];
  const spheres: Sphere[] = [];
  const origins = new Map<string, Vec3>();
  for (const [link, pose] of Object.entries(response.robot_links)) {
    origins.set(link, asVec3(pose.translation));
  }
  for (const [link, parent] of Object.entries(hand.link_parents)) {
    const a = parent !== null ? origins.get(parent) : undefined;
    const b = origins.get(link);
    if (a !== undefined && b !== undefined) {
      lines.push({ a, b, color: ROBOT_BONE, width: 3 });
    }
    if (b !== undefined) {
      spheres.push({ center: b, radius: 0.003, color: ROBOT_BONE });
    }
  }
  for (const markers of Object.values(response.robot_markers)) {
    for (const marker of markers) {
      spheres.push({ center: asVec3(marker), radius: 0.005, color: ROBOT_MARKER });
    }
  }
  const base = poseMatrix(response.base_pose);
  for (let axis = 0; axis < 3; axis++) {
    const tip: Vec3 = [
      base.origin[0] + 0.03 * base.axes[axis][0],
      base.origin[1] + 0.03 * base.axes[axis][1],
      base.origin[2] + 0.03 * base.axes[axis][2],
    ];
    lines.push({ a: base.origin, b: tip, color: AXIS_COLORS[axis], width: 2 });
  }
  return { lines, spheres };
}

export function buildScene(response: EmbodyResponse, hand: HandInfo): Scene {
  const model = modelScene(response);
  const robot = robotScene(response, hand);
  return {
    lines: [...model.lines, ...robot.lines],
    spheres: [...model.spheres, ...robot.spheres],
  };
}
