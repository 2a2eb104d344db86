/**
 * Pure state behind the slider panel and joint readouts.
 *
 * 48 parameters drive the hand model: 45 finger angles (clamped to the
 * bounds the service advertises) plus 3 global orientation angles. The
 * robot-side readout list re-derives from the selected hand's actuated
 * joints, so switching hands repopulates it (3 free channels on a simple
 * hand, 20 on a dexterous one).
 */

import {
  FINGER_NAMES,
  FingerBounds,
  HandInfo,
  HandsResponse,
  JOINTS_PER_FINGER,
} from "./types.js";

export interface SliderSpec {
  id: string;
  label: string;
  group: string;
  min: number;
  max: number;
  value: number;
}

const TRIPLET_LABELS = ["flex", "abd", "twist"];
const ORIENTATION_LABELS = ["roll", "pitch", "yaw"];
const ORIENTATION_RANGE = Math.PI;

export class ExplorerState {
  readonly hands: HandInfo[];
  readonly bounds: Record<string, FingerBounds>;
  selectedHand: string;
  orientation: [number, number, number] = [0, 0, 0];
  fingerAngles: number[][];

  constructor(catalog: HandsResponse) {
    if (catalog.hands.length === 0) {
      throw new Error("service advertises no hands");
    }
    this.hands = catalog.hands;
    this.bounds = catalog.finger_bounds;
    this.selectedHand = catalog.hands[0].id;
    this.fingerAngles = FINGER_NAMES.map(() => new Array(JOINTS_PER_FINGER).fill(0));
    for (const finger of FINGER_NAMES) {
      if (!(finger in this.bounds)) {
        throw new Error(`service bounds missing finger ${finger}`);
      }
    }
  }

  hand(): HandInfo {
    const found = this.hands.find((h) => h.id === this.selectedHand);
    if (found === undefined) {
      throw new Error(`unknown hand ${this.selectedHand}`);
    }
    return found;
  }

  selectHand(id: string): void {
    if (!this.hands.some((h) => h.id === id)) {
      throw new Error(`unknown hand ${id}`);
    }
    this.selectedHand = id;
  }

  /** Clamp into the advertised bounds; returns the stored value. */
  setFingerAngle(finger: number, joint: number, value: number): number {
    const name = FINGER_NAMES[finger];
    const lo = this.bounds[name].lower[joint];
    const hi = this.bounds[name].upper[joint];
    const clamped = Math.min(hi, Math.max(lo, value));
    this.fingerAngles[finger][joint] = clamped;
    return clamped;
  }

  setOrientation(axis: number, value: number): number {
    const clamped = Math.min(ORIENTATION_RANGE, Math.max(-ORIENTATION_RANGE, value));
    this.orientation[axis] = clamped;
    return clamped;
  }

  /** One spec per free parameter: 3 orientation + 45 finger angles = 48. */
  sliderSpecs(): SliderSpec[] {
    const specs: SliderSpec[] = [];
    for (let axis = 0; axis < 3; axis++) {
      specs.push({
        id: `orientation/${axis}`,
        label: ORIENTATION_LABELS[axis],
        group: "orientation",
        min: -ORIENTATION_RANGE,
        max: ORIENTATION_RANGE,
        value: this.orientation[axis],
      });
    }
    FINGER_NAMES.forEach((finger, f) => {
      for (let joint = 0; joint < JOINTS_PER_FINGER; joint++) {
        const segment = Math.floor(joint / 3);
        specs.push({
          id: `finger/${f}/${joint}`,
          label: `s${segment} ${TRIPLET_LABELS[joint % 3]}`,
          group: finger,
          min: this.bounds[finger].lower[joint],
          max: this.bounds[finger].upper[joint],
          value: this.fingerAngles[f][joint],
        });
      }
    });
    return specs;
  }

  applySlider(id: string, value: number): number {
    const parts = id.split("/");
    if (parts[0] === "orientation") {
      return this.setOrientation(Number(parts[1]), value);
    }
    return this.setFingerAngle(Number(parts[1]), Number(parts[2]), value);
  }

  /** Readout rows for the selected hand's actuated joints. */
  readouts(values?: Record<string, number>): { name: string; fixed: boolean; value: number | null }[] {
    return this.hand().actuated.map((joint) => ({
      name: joint.name,
      fixed: joint.fixed,
      value: values !== undefined && joint.name in values ? values[joint.name] : null,
    }));
  }
}
