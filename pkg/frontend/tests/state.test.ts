import { describe, expect, it } from "vitest";

import {
  clampState,
  defaultState,
  sourcePosition,
  toRelightBody,
} from "../src/state.js";

const MODEL = { width: 97, height: 97 };

describe("state mapping", () => {
  it("same state always produces the same body and the same JSON", () => {
    const s = defaultState();
    s.mode = "sh";
    s.sh = [1, 0, 0.3, 0.1, 0, 0, 0, 0, 0];
    s.wp = 1;
    s.wg = 0;
    const b1 = toRelightBody(s, MODEL);
    const b2 = toRelightBody(s, MODEL);
    expect(b1).toEqual(b2);
    expect(JSON.stringify(b1)).toBe(JSON.stringify(b2));
  });

  it("builds the canonical body shape for sh lights", () => {
    const s = defaultState();
    s.sh = [1, 0, 0, 0, 0, 0, 0, 0, 0];
    s.wp = 1;
    s.wg = 0;
    const body = toRelightBody(s, MODEL);
    expect(body).toEqual({
      light: { type: "sh", coefficients: [1, 0, 0, 0, 0, 0, 0, 0, 0] },
      wp: 1,
      wg: 0,
      exposure: 1,
    });
    expect(body.light.type === "sh" && body.light.coefficients.length).toBe(9);
  });

  it("builds point-light bodies with exactly five sources", () => {
    const s = defaultState();
    s.mode = "points";
    const body = toRelightBody(s, MODEL);
    if (body.light.type !== "points") throw new Error("expected points");
    expect(body.light.sources).toHaveLength(5);
    for (const src of body.light.sources) {
      expect(src.position).toHaveLength(3);
      expect(src.intensity).toBeGreaterThanOrEqual(0);
    }
  });

  it("clamps slider values into their ranges", () => {
    const s = defaultState();
    s.wp = 7;
    s.wg = -3;
    s.exposure = 1e9;
    s.sources[0].elevationDeg = 720;
    s.sources[0].intensity = -1;
    const c = clampState(s);
    expect(c.wp).toBe(2);
    expect(c.wg).toBe(0);
    expect(c.exposure).toBeLessThanOrEqual(8);
    expect(c.sources[0].elevationDeg).toBe(90);
    expect(c.sources[0].intensity).toBe(0);
  });

  it("does not mutate its input", () => {
    const s = defaultState();
    const json = JSON.stringify(s);
    toRelightBody(s, MODEL);
    clampState(s);
    expect(JSON.stringify(s)).toBe(json);
  });

  it("converts spherical source controls to positions about the centroid", () => {
    const pos = sourcePosition(
      { azimuthDeg: 0, elevationDeg: 90, distance: 300, intensity: 1 },
      MODEL,
    );
    expect(pos[0]).toBeCloseTo(48, 9);
    expect(pos[1]).toBeCloseTo(48, 9);
    expect(pos[2]).toBeCloseTo(300, 9);

    const side = sourcePosition(
      { azimuthDeg: 0, elevationDeg: 0, distance: 100, intensity: 1 },
      MODEL,
    );
    expect(side[0]).toBeCloseTo(148, 9);
    expect(side[1]).toBeCloseTo(48, 9);
    expect(side[2]).toBeCloseTo(0, 9);
  });
});
