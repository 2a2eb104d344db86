/** Request construction and response validation for the embody channel. */

import {
  EmbodyRequest,
  EmbodyResponse,
  FINGER_ANGLE_COUNT,
  FINGER_NAMES,
  JOINTS_PER_FINGER,
  ServiceError,
} from "./types.js";

/** Flatten the 5x9 per-finger angle table into the wire order. */
export function buildRequest(
  hand: string,
  orientation: [number, number, number],
  translation: [number, number, number],
  fingerAngles: ReadonlyArray<ReadonlyArray<number>>,
): EmbodyRequest {
  if (fingerAngles.length !== FINGER_NAMES.length) {
    throw new Error(`expected ${FINGER_NAMES.length} fingers, got ${fingerAngles.length}`);
  }
  const flat: number[] = [];
  for (const row of fingerAngles) {
    if (row.length !== JOINTS_PER_FINGER) {
      throw new Error(`expected ${JOINTS_PER_FINGER} angles per finger, got ${row.length}`);
    }
    flat.push(...row);
  }
  return { hand, orientation, translation, finger_angles: flat };
}

export function isServiceError(data: unknown): data is ServiceError {
  return typeof data === "object" && data !== null && "error" in data;
}

/** Narrow a websocket message into a full embody response. */
export function parseResponse(data: unknown): EmbodyResponse {
  if (isServiceError(data)) {
    throw new Error(`service error ${data.code}: ${data.error}`);
  }
  const response = data as EmbodyResponse;
  if (typeof response !== "object" || response === null) {
    throw new Error("response is not an object");
  }
  for (const key of ["base_pose", "actuated", "residuals", "model_skeleton",
                     "robot_links"] as const) {
    if (!(key in response)) {
      throw new Error(`response missing ${key}`);
    }
  }
  return response;
}

export function requestAngleCount(request: EmbodyRequest): number {
  return request.finger_angles.length;
}

export const EXPECTED_ANGLE_COUNT = FINGER_ANGLE_COUNT;
