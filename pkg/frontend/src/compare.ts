// Client-side re-ranking over cached composites. The math mirrors the
// service exactly (nearest-rank quantiles, better-relative tie gaps,
// tournament selection with id tiebreaks) so switching the comparator in the
// console re-sorts without another evaluation and still matches what the
// server would produce.

import type { ComparatorDoc, MitigationResult, ResultsDoc } from "./types.js";

export const LOWER_BETTER = "lower-better";
export const HIGHER_BETTER = "higher-better";

export const METRIC_DIRECTION: Record<string, string> = {
  p99_fct: LOWER_BETTER,
  p01_throughput: HIGHER_BETTER,
  avg_throughput: HIGHER_BETTER,
};

export function nearestRank(values: number[], q: number): number {
  if (values.length === 0) throw new Error("quantile of an empty sample");
  const sorted = [...values].sort((a, b) => a - b);
  const rank = Math.max(1, Math.ceil(q * sorted.length));
  return sorted[rank - 1];
}

export function summaryOf(m: MitigationResult, metric: string, q: number): number {
  return nearestRank(m.composites[metric].values, q);
}

type Verdict = -1 | 0 | 1; // -1: a better, 1: b better, 0: tie

function gapVerdict(a: number, b: number, direction: string, tie: number): Verdict {
  if (a === b) return 0;
  const betterIsA = direction === LOWER_BETTER ? a < b : a > b;
  const better = betterIsA ? a : b;
  if (better === 0) return betterIsA ? -1 : 1;
  const gap = Math.abs(a - b) / Math.abs(better);
  if (gap <= tie) return 0;
  return betterIsA ? -1 : 1;
}

export function compareResults(
  a: MitigationResult,
  b: MitigationResult,
  comparator: ComparatorDoc,
  summaryQ: number,
): Verdict {
  if (comparator.type === "linear") {
    throw new Error("linear re-ranking needs healthy baselines; evaluate server-side");
  }
  const tie = comparator.tie_fraction ?? 0.1;
  const gate = comparator.failure_gate ?? 0.01;
  if (gate !== null) {
    const fa = a.failure_fraction > gate;
    const fb = b.failure_fraction > gate;
    if (fa !== fb) return fa ? 1 : -1;
  }
  for (const metric of comparator.metrics ?? []) {
    const verdict = gapVerdict(
      summaryOf(a, metric, summaryQ),
      summaryOf(b, metric, summaryQ),
      METRIC_DIRECTION[metric] ?? LOWER_BETTER,
      tie,
    );
    if (verdict !== 0) return verdict;
  }
  return 0;
}

export function rerank(results: ResultsDoc, comparator: ComparatorDoc): string[] {
  const q = results.summary_percentile;
  const ids = Object.keys(results.mitigations).sort();
  const healthy = ids.filter((id) => !results.mitigations[id].partitioned);
  const cut = ids.filter((id) => results.mitigations[id].partitioned);
  const ordered: string[] = [];
  const pool = [...healthy];
  while (pool.length) {
    let best = pool[0];
    for (const challenger of pool.slice(1)) {
      const verdict = compareResults(
        results.mitigations[challenger],
        results.mitigations[best],
        comparator,
        q,
      );
      if (verdict === -1) best = challenger;
    }
    ordered.push(best);
    pool.splice(pool.indexOf(best), 1);
  }
  return [...ordered, ...cut];
}

export function penaltyVsBest(
  results: ResultsDoc,
  metric: string,
  mitigationId: string,
): number | null {
  const direction = METRIC_DIRECTION[metric] ?? LOWER_BETTER;
  const healthy = Object.entries(results.mitigations).filter(([, m]) => !m.partitioned);
  if (!healthy.length) return null;
  const values = healthy.map(([, m]) => m.composites[metric].summary);
  const best = direction === LOWER_BETTER ? Math.min(...values) : Math.max(...values);
  if (best === 0) return null;
  const chosen = results.mitigations[mitigationId].composites[metric].summary;
  return direction === LOWER_BETTER
    ? ((chosen - best) / best) * 100
    : ((best - chosen) / best) * 100;
}
