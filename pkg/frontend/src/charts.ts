// Pure chart geometry: composite distributions render as empirical CDFs with
// a marker at the summary percentile. Hand-rolled SVG paths keep the console
// dependency-free and unit-testable.

export interface CdfPoint {
  x: number;
  y: number; // cumulative probability in [0, 1]
}

export function ecdf(values: number[]): CdfPoint[] {
  const sorted = [...values].sort((a, b) => a - b);
  const n = sorted.length;
  return sorted.map((x, i) => ({ x, y: (i + 1) / n }));
}

export interface ChartBox {
  width: number;
  height: number;
  padLeft: number;
  padBottom: number;
}

export const DEFAULT_BOX: ChartBox = { width: 320, height: 150, padLeft: 42, padBottom: 22 };

export function xScale(points: CdfPoint[], box: ChartBox): (x: number) => number {
  const xs = points.map((p) => p.x);
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  const span = hi - lo || 1;
  return (x) => box.padLeft + ((x - lo) / span) * (box.width - box.padLeft - 6);
}

export function cdfPath(points: CdfPoint[], box: ChartBox = DEFAULT_BOX): string {
  if (!points.length) return "";
  const sx = xScale(points, box);
  const sy = (y: number) => box.height - box.padBottom - y * (box.height - box.padBottom - 6);
  let d = `M ${sx(points[0].x).toFixed(1)} ${sy(0).toFixed(1)}`;
  let prevY = 0;
  for (const p of points) {
    d += ` L ${sx(p.x).toFixed(1)} ${sy(prevY).toFixed(1)}`;
    d += ` L ${sx(p.x).toFixed(1)} ${sy(p.y).toFixed(1)}`;
    prevY = p.y;
  }
  return d;
}

export function summaryMarker(
  points: CdfPoint[],
  summaryValue: number,
  box: ChartBox = DEFAULT_BOX,
): { x: number; y0: number; y1: number } {
  const sx = xScale(points, box);
  return { x: sx(summaryValue), y0: 6, y1: box.height - box.padBottom };
}

const UNIT_STEPS: [number, string][] = [
  [1e9, "G"],
  [1e6, "M"],
  [1e3, "k"],
];

export function formatMetric(metric: string, value: number): string {
  if (metric === "p99_fct") {
    if (value < 1e-3) return `${(value * 1e6).toFixed(0)} us`;
    if (value < 1) return `${(value * 1e3).toFixed(1)} ms`;
    return `${value.toFixed(2)} s`;
  }
  for (const [step, suffix] of UNIT_STEPS) {
    if (Math.abs(value) >= step) return `${(value / step).toFixed(1)} ${suffix}bps`;
  }
  return `${value.toFixed(0)} bps`;
}

export function formatPenalty(p: number | null): string {
  if (p === null || p === undefined) return "n/a";
  if (Math.abs(p) < 0.05) return "best";
  return `${p > 0 ? "+" : ""}${p.toFixed(1)}%`;
}
