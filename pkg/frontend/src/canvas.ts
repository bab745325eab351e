// Topology canvas: the Clos fabric as layered SVG. Clicking an edge cycles
// its sketched fault (healthy -> low drop -> high drop -> cut), clicking a
// ToR cycles a ToR-level drop; mitigation chips attach next to elements.
// Layout math is pure so it can be unit-tested without a DOM.

import type { Topology } from "./types.js";
import type { EdgeFault } from "./draft.js";

export interface NodePos {
  id: string;
  kind: string;
  x: number;
  y: number;
}

const TIER_Y: Record<string, number> = { t2: 40, t1: 140, tor: 240, agg: 240 };

export function layout(topology: Topology, width = 860): NodePos[] {
  const byKind: Record<string, string[]> = {};
  for (const n of topology.nodes) {
    if (n.kind === "server") continue;
    (byKind[n.kind] ??= []).push(n.id);
  }
  const out: NodePos[] = [];
  for (const [kind, ids] of Object.entries(byKind)) {
    ids.sort();
    const step = width / (ids.length + 1);
    ids.forEach((id, i) =>
      out.push({ id, kind, x: Math.round((i + 1) * step), y: TIER_Y[kind] ?? 300 }),
    );
  }
  return out;
}

export const FAULT_COLORS: Record<EdgeFault, string> = {
  healthy: "#9aa5b1",
  "drop-low": "#e8b339",
  "drop-high": "#e2574c",
  cut: "#2d2d2d",
};

export interface CanvasCallbacks {
  onEdgeClick: (edgeId: string) => void;
  onTorClick: (torId: string) => void;
}

export function renderCanvas(
  svg: SVGSVGElement,
  topology: Topology,
  edgeFaults: Record<string, EdgeFault>,
  torFaults: Record<string, number>,
  chips: Record<string, string[]>,
  cb: CanvasCallbacks,
): void {
  const NS = "http://www.w3.org/2000/svg";
  svg.innerHTML = "";
  const pos = new Map(layout(topology).map((p) => [p.id, p]));

  for (const edge of topology.edges) {
    const [u, v] = edge.endpoints;
    const a = pos.get(u);
    const b = pos.get(v);
    if (!a || !b) continue;
    const fault = edgeFaults[edge.id] ?? "healthy";
    const line = document.createElementNS(NS, "line");
    line.setAttribute("x1", String(a.x));
    line.setAttribute("y1", String(a.y));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y));
    line.setAttribute("stroke", FAULT_COLORS[fault]);
    line.setAttribute("stroke-width", fault === "healthy" ? "2" : "4");
    if (fault === "cut") line.setAttribute("stroke-dasharray", "6 5");
    line.setAttribute("data-edge", edge.id);
    line.classList.add("fabric-edge");
    line.addEventListener("click", () => cb.onEdgeClick(edge.id));
    const title = document.createElementNS(NS, "title");
    title.textContent = `${edge.id} (${fault})`;
    line.appendChild(title);
    svg.appendChild(line);
    const chipList = chips[edge.id] ?? [];
    if (chipList.length) {
      const label = document.createElementNS(NS, "text");
      label.setAttribute("x", String((a.x + b.x) / 2 + 4));
      label.setAttribute("y", String((a.y + b.y) / 2 - 4));
      label.setAttribute("class", "chip");
      label.textContent = chipList.join(",");
      svg.appendChild(label);
    }
  }

  for (const p of pos.values()) {
    const g = document.createElementNS(NS, "g");
    const rect = document.createElementNS(NS, "rect");
    rect.setAttribute("x", String(p.x - 22));
    rect.setAttribute("y", String(p.y - 13));
    rect.setAttribute("width", "44");
    rect.setAttribute("height", "26");
    rect.setAttribute("rx", "5");
    const faulted = torFaults[p.id] !== undefined;
    rect.setAttribute("fill", faulted ? "#e2574c" : p.kind === "t2" ? "#33536b" : p.kind === "t1" ? "#3f6f52" : "#5b5b73");
    rect.setAttribute("data-node", p.id);
    if (p.kind === "tor" || p.kind === "agg") {
      rect.classList.add("clickable");
      rect.addEventListener("click", () => cb.onTorClick(p.id));
    }
    const label = document.createElementNS(NS, "text");
    label.setAttribute("x", String(p.x));
    label.setAttribute("y", String(p.y + 4));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "node-label");
    label.textContent = shortName(p.id);
    const title = document.createElementNS(NS, "title");
    title.textContent = faulted ? `${p.id} drop ${torFaults[p.id]}` : p.id;
    g.appendChild(rect);
    g.appendChild(label);
    g.appendChild(title);
    svg.appendChild(g);
    const chipList = chips[p.id] ?? [];
    if (chipList.length) {
      const chip = document.createElementNS(NS, "text");
      chip.setAttribute("x", String(p.x + 26));
      chip.setAttribute("y", String(p.y - 14));
      chip.setAttribute("class", "chip");
      chip.textContent = chipList.join(",");
      svg.appendChild(chip);
    }
  }
}

export function shortName(id: string): string {
  return id.replace(/^p(\d+)-/, "$1/").replace("tor", "T0.").replace("t1-", "T1.").replace("t2-", "T2.");
}
