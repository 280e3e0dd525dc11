import { describe, expect, it } from "vitest";

import { Snapshot } from "../src/protocol.js";
import { SceneMeta, buildFrame, temperatureColor } from "../src/render.js";

const META: SceneMeta = {
  name: "phantom_rat",
  lumenLengthM: 0.06,
  lumenRadiusM: 0.00425,
};

function snap(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    t: 1.0,
    pos: [0, 0, 0.0007],
    phase: 3.1,
    sync: true,
    arc: 0.005,
    temp_c: 36.0,
    released: 0.0,
    freq: 3.0,
    heading: 0.0,
    rotating: true,
    dropped: 0,
    acked: 2,
    ...overrides,
  };
}

describe("temperature gauge color bands", () => {
  it("is green below 38 C", () => {
    expect(temperatureColor(37.9)).toBe("green");
  });
  it("is amber between 38 and 42 C", () => {
    expect(temperatureColor(38.0)).toBe("amber");
    expect(temperatureColor(41.9)).toBe("amber");
  });
  it("is red above 42 C", () => {
    expect(temperatureColor(42.1)).toBe("red");
  });
});

describe("lumen frame", () => {
  it("places the robot at the entrance for arc 0", () => {
    const frame = buildFrame(snap({ arc: 0 }), "connected", META);
    expect(frame.robot?.arcFraction).toBe(0);
    expect(frame.frozen).toBe(false);
    expect(frame.banner).toBeNull();
  });

  it("places the robot proportionally along the lumen", () => {
    const frame = buildFrame(snap({ arc: 0.03 }), "connected", META);
    expect(frame.robot?.arcFraction).toBeCloseTo(0.5, 12);
    expect(frame.robot?.tumblePhase).toBeCloseTo(3.1, 12);
  });

  it("flags step-out when synchronization is lost", () => {
    const frame = buildFrame(snap({ sync: false }), "connected", META);
    expect(frame.robot?.stepOut).toBe(true);
  });

  it("scales the release marker with the released fraction", () => {
    const frame = buildFrame(snap({ released: 0.93 }), "connected", META);
    expect(frame.releaseMarker?.scale).toBeCloseTo(0.93, 12);
    expect(frame.release.fraction).toBeCloseTo(0.93, 12);
  });

  it("hides the release marker before any release", () => {
    const frame = buildFrame(snap({ released: 0 }), "connected", META);
    expect(frame.releaseMarker).toBeNull();
  });

  it("freezes with a banner when disconnected", () => {
    const frame = buildFrame(snap(), "disconnected", META);
    expect(frame.frozen).toBe(true);
    expect(frame.banner).toMatch(/CONNECTION LOST/);
    // the last snapshot still renders underneath the banner
    expect(frame.robot).not.toBeNull();
  });

  it("renders a waiting banner before the first snapshot", () => {
    const frame = buildFrame(null, "connecting", META);
    expect(frame.robot).toBeNull();
    expect(frame.banner).toBeTruthy();
  });
});
