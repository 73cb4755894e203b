import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseTraceCsv } from "../src/csv.js";
import { renderPower } from "../src/power.js";

const POINTS = parseTraceCsv(
  readFileSync(fileURLToPath(new URL("./fixtures/trace.csv", import.meta.url)), "utf-8"),
);

describe("renderPower", () => {
  it("plots excess over baseline with the baseline dashed at zero", () => {
    const svg = renderPower(POINTS, { baseline: 10 });
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg).toContain("baseline (10 W)");
    expect(svg).toContain("stroke-dasharray");
    expect(svg.match(/<polyline /g)).toHaveLength(1);
    expect(svg).toContain("power above baseline (W)");
  });

  it("drops t <= 0 samples on the log time axis", () => {
    const svg = renderPower(POINTS, { baseline: 10 });
    // 21 fixture samples minus the t=0 one
    const pts = svg.match(/<polyline points="([^"]*)"/)![1]!;
    expect(pts.split(" ")).toHaveLength(20);
  });

  it("keeps t=0 on a linear time axis", () => {
    const svg = renderPower(POINTS, { baseline: 10, logTime: false });
    const pts = svg.match(/<polyline points="([^"]*)"/)![1]!;
    expect(pts.split(" ")).toHaveLength(21);
  });

  it("renders a constant trace as a flat line at p minus baseline", () => {
    const flat = [1, 2, 3, 4].map((t) => ({ t, p: 25 }));
    const svg = renderPower(flat, { baseline: 10 });
    const pts = svg.match(/<polyline points="([^"]*)"/)![1]!;
    const ys = new Set(pts.split(" ").map((pair) => pair.split(",")[1]));
    expect(ys.size).toBe(1);
  });

  it("leaves sub-baseline dips visible", () => {
    const dip = [
      { t: 1, p: 12 },
      { t: 2, p: 8 },
      { t: 3, p: 12 },
    ];
    const svg = renderPower(dip, { baseline: 10 });
    const pts = svg.match(/<polyline points="([^"]*)"/)![1]!;
    const ys = pts.split(" ").map((pair) => Number(pair.split(",")[1]));
    const zero = Number(svg.match(/<line x1="65.00" y1="([0-9.]+)"[^/]*stroke-dasharray/)![1]);
    // middle sample sits below the baseline, so below means larger y pixel
    expect(ys[1]!).toBeGreaterThan(zero);
    expect(ys[0]!).toBeLessThan(zero);
  });

  it("rejects traces that leave fewer than 2 plottable samples", () => {
    const only = [
      { t: 0, p: 10 },
      { t: 1, p: 12 },
    ];
    expect(() => renderPower(only, { baseline: 10 })).toThrow(/at least 2 plottable/);
    expect(renderPower(only, { baseline: 10, logTime: false })).toContain("<svg ");
  });

  it("rejects a non-finite baseline", () => {
    expect(() => renderPower(POINTS, { baseline: Number.NaN })).toThrow(/baseline must be finite/);
  });
});
