// Ranked mitigation cards: CDF charts per metric, summary markers, penalty
// badges, and the comparator transcript between adjacent candidates.

import { cdfPath, DEFAULT_BOX, ecdf, formatMetric, formatPenalty, summaryMarker } from "./charts.js";
import { penaltyVsBest } from "./compare.js";
import type { ResultsDoc } from "./types.js";

const METRIC_LABELS: Record<string, string> = {
  p99_fct: "99p FCT",
  p01_throughput: "1p throughput",
  avg_throughput: "avg throughput",
};

export function renderResults(
  container: HTMLElement,
  results: ResultsDoc,
  ranking: string[],
  previous?: { results: ResultsDoc; ranking: string[] } | null,
): void {
  container.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = `ranking (seed ${results.seed}, ${results.method})`;
  container.appendChild(heading);

  ranking.forEach((mid, index) => {
    const m = results.mitigations[mid];
    const card = document.createElement("div");
    card.className = "card" + (m.partitioned ? " partitioned" : "");

    const head = document.createElement("div");
    head.className = "card-head";
    const rankBadge = index === 0 && !m.partitioned ? "★ " : `${index + 1}. `;
    head.textContent = rankBadge + mid + (m.partitioned ? " — PARTITIONS THE NETWORK" : "");
    card.appendChild(head);

    if (previous) {
      const prevIdx = previous.ranking.indexOf(mid);
      if (prevIdx >= 0 && prevIdx !== index) {
        const delta = document.createElement("span");
        delta.className = "rank-delta";
        delta.textContent = prevIdx > index ? ` ↑${prevIdx - index}` : ` ↓${index - prevIdx}`;
        head.appendChild(delta);
      }
    }

    const row = document.createElement("div");
    row.className = "charts";
    for (const [metric, comp] of Object.entries(m.composites)) {
      const cell = document.createElement("figure");
      const points = ecdf(comp.values);
      const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
      svg.setAttribute("viewBox", `0 0 ${DEFAULT_BOX.width} ${DEFAULT_BOX.height}`);
      svg.setAttribute("class", "cdf");
      const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
      path.setAttribute("d", cdfPath(points));
      path.setAttribute("fill", "none");
      path.setAttribute("stroke", "#3f6f52");
      path.setAttribute("stroke-width", "1.6");
      svg.appendChild(path);
      const mark = summaryMarker(points, comp.summary);
      const marker = document.createElementNS("http://www.w3.org/2000/svg", "line");
      marker.setAttribute("x1", String(mark.x));
      marker.setAttribute("x2", String(mark.x));
      marker.setAttribute("y1", String(mark.y0));
      marker.setAttribute("y2", String(mark.y1));
      marker.setAttribute("stroke", "#e2574c");
      marker.setAttribute("stroke-dasharray", "3 3");
      svg.appendChild(marker);
      cell.appendChild(svg);
      const caption = document.createElement("figcaption");
      const penalty = penaltyVsBest(results, metric, mid);
      caption.innerHTML =
        `${METRIC_LABELS[metric] ?? metric}: <b>${formatMetric(metric, comp.summary)}</b>` +
        ` <span class="penalty">${formatPenalty(penalty)}</span>`;
      cell.appendChild(caption);
      row.appendChild(cell);
    }
    card.appendChild(row);

    const foot = document.createElement("div");
    foot.className = "card-foot";
    foot.textContent =
      m.failure_fraction > 0
        ? `failed flows: ${(m.failure_fraction * 100).toFixed(2)}%`
        : "no failed flows";
    card.appendChild(foot);
    container.appendChild(card);
  });
}

export function renderTranscript(container: HTMLElement, results: ResultsDoc): void {
  const pre = document.createElement("pre");
  pre.className = "transcript";
  const lines = [`comparator: ${JSON.stringify(results.comparator)}`];
  for (const mid of results.ranking) {
    const pen = results.mitigations[mid].penalty_vs_best;
    const parts = Object.entries(pen)
      .map(([k, v]) => `${METRIC_LABELS[k] ?? k} ${formatPenalty(v)}`)
      .join("  ");
    lines.push(`${mid.padEnd(32)} ${parts}`);
  }
  pre.textContent = lines.join("\n");
  container.appendChild(pre);
}
