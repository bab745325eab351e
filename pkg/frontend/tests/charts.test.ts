import { describe, expect, it } from "vitest";

import { cdfPath, DEFAULT_BOX, ecdf, formatMetric, formatPenalty } from "../src/charts.js";
import { layout } from "../src/canvas.js";
import type { Topology } from "../src/types.js";

describe("ecdf", () => {
  it("is a monotone step function ending at 1", () => {
    const points = ecdf([3, 1, 2, 2]);
    expect(points.map((p) => p.x)).toEqual([1, 2, 2, 3]);
    expect(points[points.length - 1].y).toBe(1);
    for (let i = 1; i < points.length; i++) {
      expect(points[i].y).toBeGreaterThan(points[i - 1].y);
    }
  });
});

describe("cdfPath", () => {
  it("emits a drawable path inside the box", () => {
    const d = cdfPath(ecdf([1, 2, 3, 4, 5]));
    expect(d.startsWith("M ")).toBe(true);
    const coords = d.match(/-?\d+(\.\d+)?/g)!.map(Number);
    for (let i = 0; i < coords.length; i += 2) {
      expect(coords[i]).toBeGreaterThanOrEqual(0);
      expect(coords[i]).toBeLessThanOrEqual(DEFAULT_BOX.width);
      expect(coords[i + 1]).toBeGreaterThanOrEqual(0);
      expect(coords[i + 1]).toBeLessThanOrEqual(DEFAULT_BOX.height);
    }
  });

  it("handles a point mass", () => {
    expect(cdfPath(ecdf([7, 7, 7]))).toContain("M ");
  });
});

describe("format helpers", () => {
  it("formats FCT and throughput in natural units", () => {
    expect(formatMetric("p99_fct", 450e-6)).toBe("450 us");
    expect(formatMetric("p99_fct", 0.0123)).toBe("12.3 ms");
    expect(formatMetric("avg_throughput", 2.5e9)).toBe("2.5 Gbps");
    expect(formatMetric("p01_throughput", 350e6)).toBe("350.0 Mbps");
  });

  it("formats penalties", () => {
    expect(formatPenalty(0)).toBe("best");
    expect(formatPenalty(12.34)).toBe("+12.3%");
    expect(formatPenalty(null)).toBe("n/a");
  });
});

describe("canvas layout", () => {
  it("places switches in tier rows, evenly spread", () => {
    const topo: Topology = {
      schema: "topo/v1",
      nodes: [
        { id: "t2-00", kind: "t2" },
        { id: "p00-t1-00", kind: "t1" },
        { id: "p00-t1-01", kind: "t1" },
        { id: "p00-tor00", kind: "tor" },
        { id: "srv", kind: "server" },
      ],
      edges: [],
      server_map: {},
      routing: [],
    };
    const pos = layout(topo, 800);
    const byId = Object.fromEntries(pos.map((p) => [p.id, p]));
    expect(byId["srv"]).toBeUndefined(); // servers are not drawn
    expect(byId["t2-00"].y).toBeLessThan(byId["p00-t1-00"].y);
    expect(byId["p00-t1-00"].y).toBeLessThan(byId["p00-tor00"].y);
    expect(byId["p00-t1-00"].x).toBeLessThan(byId["p00-t1-01"].x);
  });
});
