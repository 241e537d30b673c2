import { describe, expect, it } from "vitest";
import {
  GRID_QUANTILES,
  parseDist,
  parseFrame,
  sliderScale,
} from "../src/protocol.js";

const telemetry = {
  type: "telemetry",
  version: 1,
  tick: 3,
  alpha: 0.02,
  slav: 1.5,
  vnf_total: 12,
  power_total: 1840.0,
  per_node: [
    { id: 0, status: "up", instance_counts: [1, 0, 2], power: 420.0 },
  ],
};

describe("parseFrame", () => {
  it("accepts a well-formed telemetry frame", () => {
    const frame = parseFrame(JSON.stringify(telemetry));
    expect(frame).not.toBeNull();
    expect(frame!.type).toBe("telemetry");
    if (frame!.type === "telemetry") {
      expect(frame!.tick).toBe(3);
      expect(frame!.per_node[0].power).toBe(420.0);
    }
  });

  it("accepts ack, error and end frames", () => {
    expect(
      parseFrame(JSON.stringify({ type: "ack", version: 1, kind: "set_preference", applies_at_tick: 7 }))?.type,
    ).toBe("ack");
    expect(parseFrame(JSON.stringify({ type: "error", message: "nope" }))?.type).toBe("error");
    expect(
      parseFrame(JSON.stringify({ type: "end", version: 1, tick: 40, reason: "exhausted" }))?.type,
    ).toBe("end");
  });

  it("rejects malformed payloads", () => {
    expect(parseFrame("not json")).toBeNull();
    expect(parseFrame("42")).toBeNull();
    expect(parseFrame(JSON.stringify({ type: "telemetry", tick: "three" }))).toBeNull();
    expect(parseFrame(JSON.stringify({ type: "mystery" }))).toBeNull();
    expect(parseFrame(JSON.stringify({ ...telemetry, per_node: "x" }))).toBeNull();
  });
});

describe("parseDist", () => {
  it("parses exponential specs and computes quantiles", () => {
    const dist = parseDist("exp:145.45");
    expect(dist).not.toBeNull();
    // -ln(1-q)/lambda at the five grid quantiles, 4 decimals
    const got = GRID_QUANTILES.map((q) => Number(dist!.quantile(q).toFixed(4)));
    expect(got).toEqual([0.0015, 0.0035, 0.0063, 0.0111, 0.0317]);
  });

  it("parses uniform and point specs", () => {
    const unif = parseDist("unif:0:0.15");
    expect(unif!.quantile(0.5)).toBeCloseTo(0.075, 12);
    expect(unif!.quantile(0.99)).toBeCloseTo(0.1485, 12);
    const point = parseDist("point:0.05");
    expect(point!.quantile(0.2)).toBe(0.05);
    expect(point!.quantile(0.99)).toBe(0.05);
  });

  it("returns null on malformed or schedule specs", () => {
    expect(parseDist("")).toBeNull();
    expect(parseDist("exp:")).toBeNull();
    expect(parseDist("exp:-3")).toBeNull();
    expect(parseDist("unif:0.2:0.1")).toBeNull();
    expect(parseDist("sched:0:exp:145.45")).toBeNull();
    expect(parseDist("gauss:1:2")).toBeNull();
  });

  it("rejects out-of-range quantile arguments", () => {
    const dist = parseDist("exp:145.45")!;
    expect(() => dist.quantile(1)).toThrow(RangeError);
    expect(() => dist.quantile(-0.1)).toThrow(RangeError);
  });
});

describe("sliderScale", () => {
  it("spans [0, q99] with a mark per grid quantile", () => {
    const scale = sliderScale(parseDist("exp:145.45")!);
    expect(scale.max).toBeCloseTo(0.0317, 4);
    expect(scale.ticks).toHaveLength(5);
    expect(scale.ticks[0]).toBeCloseTo(0.0015, 4);
    expect(scale.ticks[4]).toBe(scale.max);
    for (let i = 1; i < scale.ticks.length; i++) {
      expect(scale.ticks[i]).toBeGreaterThan(scale.ticks[i - 1]);
    }
  });
});
