/** Payload shapes of the handmap service API. */

export interface PoseJson {
  translation: [number, number, number];
  quaternion_wxyz: [number, number, number, number];
}

export interface ActuatedJoint {
  name: string;
  lower: number;
  upper: number;
  fixed: boolean;
}

export interface HandInfo {
  id: string;
  name: string;
  control_rate: number;
  actuated: ActuatedJoint[];
  free_actuated: string[];
  fingers: Record<string, string[]>;
  link_parents: Record<string, string | null>;
}

export interface FingerBounds {
  lower: number[];
  upper: number[];
}

export interface HandsResponse {
  hands: HandInfo[];
  finger_bounds: Record<string, FingerBounds>;
  state_parameter_count: number;
}

export interface EmbodyRequest {
  hand: string;
  orientation: [number, number, number];
  translation: [number, number, number];
  finger_angles: number[];
}

export interface EmbodyResponse {
  hand: string;
  base_pose: PoseJson;
  actuated: Record<string, number>;
  residuals: Record<string, number>;
  model_markers: Record<string, number[][]>;
  model_skeleton: Record<string, number[][]>;
  robot_markers: Record<string, number[][]>;
  robot_links: Record<string, PoseJson>;
}

export interface ServiceError {
  error: string;
  code: number;
}

export const FINGER_NAMES = ["thumb", "index", "middle", "ring", "little"] as const;
export const JOINTS_PER_FINGER = 9;
export const FINGER_ANGLE_COUNT = FINGER_NAMES.length * JOINTS_PER_FINGER;
