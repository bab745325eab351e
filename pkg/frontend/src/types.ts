// Mirrors of the service's wire formats (scenario/v1, topo/v1, results/v1).

export interface TopoNode {
  id: string;
  kind: "server" | "tor" | "t1" | "t2" | "agg";
  drop_rate?: number;
}

export interface TopoEdge {
  id: string;
  endpoints: [string, string];
  capacity_bps: number;
  drop_rate?: number;
  prop_delay_s?: number;
  admin_state?: "enabled" | "disabled";
}

export interface Topology {
  schema: "topo/v1";
  nodes: TopoNode[];
  edges: TopoEdge[];
  server_map: Record<string, string>;
  routing: { node: string; table: Record<string, [string, number][]> }[];
}

export type ActionDoc =
  | { type: "no_action" }
  | { type: "disable_link"; edge: string }
  | { type: "disable_switch"; node: string }
  | { type: "bring_back_link"; edge: string }
  | { type: "set_wcmp"; node: string; weights: Record<string, number> }
  | { type: "restore_ecmp"; node: string }
  | { type: "move_traffic"; from: string; to: string; fraction: number };

export interface FailureDoc {
  kind: "link_drop" | "tor_drop" | "link_capacity_reduction" | "link_cut" | "switch_drop";
  location: string;
  magnitude: number;
}

export interface MitigationDoc {
  id: string;
  actions: ActionDoc[];
}

export interface ComparatorDoc {
  type: "priority" | "linear";
  metrics?: string[];
  tie_fraction?: number;
  failure_gate?: number | null;
  weights?: number[];
}

export interface ScenarioDoc {
  schema: "scenario/v1";
  name?: string;
  topology: Topology | { ref: string };
  traffic: {
    schema: "traffic/v1";
    rate_per_server_fps: number;
    duration_s: number;
    size_cdf: [number, number][];
    comm_prob?: "uniform" | [string, string, number][];
    short_threshold_bytes?: number;
  };
  events: ({ failure: FailureDoc } | { mitigation: MitigationDoc })[];
  candidates: MitigationDoc[];
  comparator: ComparatorDoc;
  sampling: {
    demand_samples?: number;
    routing_samples?: number;
    interval: [number, number];
    epoch_s: number;
    [k: string]: unknown;
  };
  seed: number;
}

export interface CompositeDoc {
  values: number[];
  summary: number;
  skipped_samples: number;
}

export interface MitigationResult {
  composites: Record<string, CompositeDoc>;
  failure_fraction: number;
  partitioned: boolean;
  penalty_vs_best: Record<string, number | null>;
}

export interface ResultsDoc {
  schema: "results/v1";
  scenario: string;
  seed: number;
  method: string;
  comparator: ComparatorDoc;
  quantile_method: string;
  summary_percentile: number;
  mitigations: Record<string, MitigationResult>;
  ranking: string[];
  chosen: string;
  chosen_penalty: Record<string, number | null>;
  partitioned: string[];
}

export interface JobStatus {
  status: "queued" | "running" | "done" | "error";
  progress: number;
  error: string | null;
}
