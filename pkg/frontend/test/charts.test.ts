import { describe, expect, it } from "vitest";
import { formatValue, polyline } from "../src/charts.js";

describe("polyline", () => {
  it("pins the newest sample to the right edge", () => {
    const pts = polyline([1, 2, 3], 100, 50, 5);
    expect(pts).toHaveLength(3);
    expect(pts[2].x).toBe(100);
    // three of five capacity slots used: line starts inside the box
    expect(pts[0].x).toBe(50);
  });

  it("scales y so the series maximum touches the top", () => {
    const pts = polyline([0, 5, 10], 100, 50, 3);
    expect(pts[0].y).toBe(50);
    expect(pts[1].y).toBe(25);
    expect(pts[2].y).toBe(0);
  });

  it("draws an all-zero series as a flat floor line", () => {
    const pts = polyline([0, 0, 0], 100, 50, 3);
    expect(pts.every((p) => p.y === 50)).toBe(true);
  });

  it("handles empty and single-sample series", () => {
    expect(polyline([], 100, 50, 10)).toEqual([]);
    const one = polyline([4], 100, 50, 10);
    expect(one).toHaveLength(1);
    expect(one[0].x).toBe(100);
  });
});

describe("formatValue", () => {
  it("keeps integers bare and trims floats by magnitude", () => {
    expect(formatValue(12)).toBe("12");
    expect(formatValue(0.25)).toBe("0.250");
    expect(formatValue(913.44)).toBe("913.4");
  });
});
