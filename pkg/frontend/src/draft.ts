// Scenario draft: what the operator sketches before submitting. Edits go
// through small reducers so the edit history supports undo, and only
// schema-valid drafts may submit.

import type {
  ActionDoc,
  FailureDoc,
  MitigationDoc,
  ScenarioDoc,
  Topology,
} from "./types.js";

export const LOW_DROP = 1e-5;
export const HIGH_DROP = 1e-2;

// clicking an edge cycles its sketched state
export type EdgeFault = "healthy" | "drop-low" | "drop-high" | "cut";
const EDGE_CYCLE: EdgeFault[] = ["healthy", "drop-low", "drop-high", "cut"];

export interface Draft {
  topology: Topology;
  edgeFaults: Record<string, EdgeFault>;
  torFaults: Record<string, number>;
  candidates: MitigationDoc[];
  comparator: "priority-fct" | "priority-avg-t" | "priority-1p-t";
  seed: number;
  trafficRate: number;
  history: Draft[];
}

export function newDraft(topology: Topology, seed = 7): Draft {
  return {
    topology,
    edgeFaults: {},
    torFaults: {},
    candidates: [],
    comparator: "priority-fct",
    seed,
    trafficRate: 3.0,
    history: [],
  };
}

function push(draft: Draft): Draft {
  const { history, ...rest } = draft;
  const snapshot = { ...rest, history: [] } as Draft;
  return { ...draft, history: [...history, snapshot] };
}

export function undo(draft: Draft): Draft {
  if (!draft.history.length) return draft;
  const prev = draft.history[draft.history.length - 1];
  return { ...prev, history: draft.history.slice(0, -1) };
}

export function cycleEdge(draft: Draft, edgeId: string): Draft {
  const current = draft.edgeFaults[edgeId] ?? "healthy";
  const next = EDGE_CYCLE[(EDGE_CYCLE.indexOf(current) + 1) % EDGE_CYCLE.length];
  const out = push(draft);
  const edgeFaults = { ...out.edgeFaults };
  if (next === "healthy") delete edgeFaults[edgeId];
  else edgeFaults[edgeId] = next;
  return { ...out, edgeFaults };
}

export function setTorFault(draft: Draft, torId: string, dropRate: number): Draft {
  const out = push(draft);
  const torFaults = { ...out.torFaults };
  if (dropRate <= 0) delete torFaults[torId];
  else torFaults[torId] = dropRate;
  return { ...out, torFaults };
}

export function toggleCandidate(draft: Draft, mit: MitigationDoc): Draft {
  const out = push(draft);
  const existing = out.candidates.findIndex((c) => c.id === mit.id);
  const candidates =
    existing >= 0
      ? out.candidates.filter((c) => c.id !== mit.id)
      : [...out.candidates, mit];
  return { ...out, candidates };
}

export function failures(draft: Draft): FailureDoc[] {
  const out: FailureDoc[] = [];
  for (const [edge, fault] of Object.entries(draft.edgeFaults).sort()) {
    if (fault === "cut") out.push({ kind: "link_cut", location: edge, magnitude: 1.0 });
    else if (fault === "drop-low")
      out.push({ kind: "link_drop", location: edge, magnitude: LOW_DROP });
    else out.push({ kind: "link_drop", location: edge, magnitude: HIGH_DROP });
  }
  for (const [tor, rate] of Object.entries(draft.torFaults).sort()) {
    out.push({ kind: "tor_drop", location: tor, magnitude: rate });
  }
  return out;
}

export const COMPARATORS = {
  "priority-fct": { type: "priority", metrics: ["p99_fct", "p01_throughput", "avg_throughput"] },
  "priority-avg-t": { type: "priority", metrics: ["avg_throughput", "p99_fct", "p01_throughput"] },
  "priority-1p-t": { type: "priority", metrics: ["p01_throughput", "avg_throughput", "p99_fct"] },
} as const;

export interface DraftProblem {
  field: string;
  message: string;
}

export function validate(draft: Draft): DraftProblem[] {
  const problems: DraftProblem[] = [];
  if (!draft.topology || !draft.topology.nodes?.length)
    problems.push({ field: "topology", message: "no topology loaded" });
  if (!failures(draft).length)
    problems.push({ field: "events", message: "sketch at least one failure" });
  const ids = new Set<string>();
  for (const c of draft.candidates) {
    if (ids.has(c.id))
      problems.push({ field: "candidates", message: `duplicate candidate id ${c.id}` });
    ids.add(c.id);
    if (!c.actions.length)
      problems.push({ field: "candidates", message: `candidate ${c.id} has no actions` });
  }
  const known = new Set(draft.topology?.edges?.map((e) => e.id) ?? []);
  for (const c of draft.candidates) {
    for (const a of c.actions) {
      if ((a.type === "disable_link" || a.type === "bring_back_link") && !known.has(a.edge))
        problems.push({ field: "candidates", message: `unknown edge ${a.edge} in ${c.id}` });
    }
  }
  if (!Number.isInteger(draft.seed))
    problems.push({ field: "seed", message: "seed must be an integer" });
  return problems;
}

export function toScenario(draft: Draft): ScenarioDoc {
  const problems = validate(draft);
  if (problems.length) {
    throw new Error(`draft not submittable: ${problems[0].field}: ${problems[0].message}`);
  }
  const candidates = draft.candidates.length
    ? draft.candidates
    : [{ id: "no-action", actions: [{ type: "no_action" } as ActionDoc] }];
  return {
    schema: "scenario/v1",
    name: "console",
    topology: draft.topology,
    traffic: {
      schema: "traffic/v1",
      rate_per_server_fps: draft.trafficRate,
      duration_s: 3.0,
      size_cdf: [
        [1e6, 0.4],
        [4e6, 0.8],
        [8e6, 1.0],
      ],
      comm_prob: "uniform",
      short_threshold_bytes: 150e3,
    },
    events: failures(draft).map((failure) => ({ failure })),
    candidates,
    comparator: { ...COMPARATORS[draft.comparator] , metrics: [...COMPARATORS[draft.comparator].metrics]},
    sampling: {
      demand_samples: 3,
      routing_samples: 8,
      interval: [0.5, 2.5],
      epoch_s: 0.1,
    },
    seed: draft.seed,
  };
}
