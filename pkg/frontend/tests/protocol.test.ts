import { describe, expect, it } from "vitest";

import { buildRequest, EXPECTED_ANGLE_COUNT, isServiceError,
         parseResponse } from "../src/protocol.js";

const ROWS = Array.from({ length: 5 }, (_, f) =>
  Array.from({ length: 9 }, (_, j) => f + j / 10));

describe("protocol", () => {
  it("flattens finger angles in row order", () => {
    const request = buildRequest("mia", [0, 0, 0], [0, 0, 0], ROWS);
    expect(request.finger_angles.length).toBe(EXPECTED_ANGLE_COUNT);
    expect(request.finger_angles[0]).toBe(0);
    expect(request.finger_angles[9]).toBe(1);
    expect(request.finger_angles[44]).toBeCloseTo(4.8);
  });

  it("rejects malformed angle tables", () => {
    expect(() => buildRequest("mia", [0, 0, 0], [0, 0, 0], ROWS.slice(1)))
      .toThrow(/fingers/);
    const short = ROWS.map((r) => r.slice());
    short[2] = short[2].slice(0, 8);
    expect(() => buildRequest("mia", [0, 0, 0], [0, 0, 0], short))
      .toThrow(/angles per finger/);
  });

  it("recognizes service errors", () => {
    expect(isServiceError({ error: "bad", code: 400 })).toBe(true);
    expect(isServiceError({ actuated: {} })).toBe(false);
    expect(() => parseResponse({ error: "unknown hand", code: 404 }))
      .toThrow(/404/);
  });

  it("requires the render fields in responses", () => {
    expect(() => parseResponse({ base_pose: {}, actuated: {} }))
      .toThrow(/missing/);
  });
});
