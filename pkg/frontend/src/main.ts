// Console wiring: draft editing on the canvas, submit/poll, ranked result
// cards, client-side comparator re-ranking over cached composites, and a
// side-by-side diff when re-running after a one-mitigation change.

import { Client } from "./api.js";
import { renderCanvas } from "./canvas.js";
import { COMPARATORS, cycleEdge, newDraft, setTorFault, toggleCandidate, toScenario, undo, validate } from "./draft.js";
import type { Draft } from "./draft.js";
import { rerank } from "./compare.js";
import { renderResults, renderTranscript } from "./views.js";
import type { MitigationDoc, ResultsDoc, Topology } from "./types.js";

const client = new Client("");

interface AppState {
  draft: Draft | null;
  results: ResultsDoc | null;
  ranking: string[];
  previous: { results: ResultsDoc; ranking: string[] } | null;
}

const app: AppState = { draft: null, results: null, ranking: [], previous: null };

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function repaintCanvas() {
  if (!app.draft) return;
  const chips: Record<string, string[]> = {};
  for (const c of app.draft.candidates) {
    for (const a of c.actions) {
      if ("edge" in a) (chips[a.edge] ??= []).push(chipLabel(a.type));
      if ("node" in a) (chips[a.node] ??= []).push(chipLabel(a.type));
    }
  }
  renderCanvas(
    el<HTMLElement>("canvas-host").querySelector("svg")!,
    app.draft.topology,
    app.draft.edgeFaults,
    app.draft.torFaults,
    chips,
    {
      onEdgeClick: (edgeId) => {
        app.draft = cycleEdge(app.draft!, edgeId);
        repaintAll();
      },
      onTorClick: (torId) => {
        const current = app.draft!.torFaults[torId] ?? 0;
        const next = current === 0 ? 1e-5 : current === 1e-5 ? 1e-2 : 0;
        app.draft = setTorFault(app.draft!, torId, next);
        repaintAll();
      },
    },
  );
}

function chipLabel(actionType: string): string {
  return { disable_link: "D", bring_back_link: "BB", disable_switch: "drain", set_wcmp: "W", restore_ecmp: "E", move_traffic: "mv", no_action: "NoA" }[actionType] ?? "?";
}

function repaintSidebar() {
  if (!app.draft) return;
  const list = el<HTMLUListElement>("candidate-list");
  list.innerHTML = "";
  for (const c of app.draft.candidates) {
    const li = document.createElement("li");
    li.textContent = c.id;
    const remove = document.createElement("button");
    remove.textContent = "x";
    remove.addEventListener("click", () => {
      app.draft = toggleCandidate(app.draft!, c);
      repaintAll();
    });
    li.appendChild(remove);
    list.appendChild(li);
  }
  const problems = validate(app.draft);
  const warn = el<HTMLElement>("draft-problems");
  warn.innerHTML = "";
  for (const p of problems) {
    const line = document.createElement("div");
    line.className = "problem";
    line.textContent = `${p.field}: ${p.message}`;
    warn.appendChild(line);
  }
  el<HTMLButtonElement>("run").disabled = problems.length > 0;
}

function repaintResults() {
  const host = el<HTMLElement>("results-host");
  host.innerHTML = "";
  if (!app.results) return;
  renderResults(host, app.results, app.ranking, app.previous);
  renderTranscript(host, app.results);
}

function repaintAll() {
  repaintCanvas();
  repaintSidebar();
  repaintResults();
}

function candidateFromControls(): MitigationDoc | null {
  if (!app.draft) return null;
  const kind = el<HTMLSelectElement>("action-kind").value;
  const target = el<HTMLInputElement>("action-target").value.trim();
  if (kind === "no_action") return { id: "no-action", actions: [{ type: "no_action" }] };
  if (!target) return null;
  switch (kind) {
    case "disable_link":
      return { id: `disable:${target}`, actions: [{ type: "disable_link", edge: target }] };
    case "bring_back_link":
      return { id: `bringback:${target}`, actions: [{ type: "bring_back_link", edge: target }] };
    case "disable_switch":
      return { id: `drain:${target}`, actions: [{ type: "disable_switch", node: target }] };
    default:
      return null;
  }
}

async function run() {
  if (!app.draft) return;
  const status = el<HTMLElement>("run-status");
  try {
    const scenario = toScenario(app.draft);
    status.textContent = "submitting…";
    const jobId = await client.submit(scenario);
    const results = await client.waitForResults(jobId, (frac) => {
      status.textContent = `evaluating… ${(frac * 100).toFixed(0)}%`;
    });
    app.previous = app.results ? { results: app.results, ranking: app.ranking } : null;
    app.results = results;
    app.ranking = results.ranking;
    status.textContent = `done; ${results.ranking.length} candidates ranked`;
    repaintResults();
  } catch (err) {
    status.textContent = `error: ${(err as Error).message}`;
  }
}

function switchComparator(name: keyof typeof COMPARATORS) {
  if (!app.draft) return;
  app.draft = { ...app.draft, comparator: name };
  // composites are reused: re-rank locally without another evaluation
  if (app.results) {
    app.ranking = rerank(app.results, { ...COMPARATORS[name], metrics: [...COMPARATORS[name].metrics] });
    repaintResults();
  }
}

async function boot() {
  const svgHost = el<HTMLElement>("canvas-host");
  svgHost.innerHTML = `<svg viewBox="0 0 860 290" width="100%"></svg>`;

  const presets = await client.topologies().catch(() => []);
  const select = el<HTMLSelectElement>("topology-select");
  for (const id of presets) {
    const opt = document.createElement("option");
    opt.value = id;
    opt.textContent = id;
    select.appendChild(opt);
  }

  el<HTMLButtonElement>("load-topology").addEventListener("click", async () => {
    const id = select.value;
    if (!id) return;
    const topo: Topology = await client.topology(id);
    app.draft = newDraft(topo, Number(el<HTMLInputElement>("seed").value) || 7);
    repaintAll();
  });

  el<HTMLButtonElement>("preset-two-failures").addEventListener("click", async () => {
    // the two-consecutive-failures walkthrough: a low-FCS link that was
    // disabled, then a second failure; candidates include bringing it back
    const ids = await client.topologies();
    if (!ids.length) return;
    const topo = await client.topology(ids[0]);
    let draft = newDraft(topo, Number(el<HTMLInputElement>("seed").value) || 7);
    const edges = topo.edges.map((e) => e.id).sort();
    const torT1 = edges.filter((e) => e.includes("tor"));
    const t1T2 = edges.filter((e) => !e.includes("tor"));
    if (torT1.length && t1T2.length) {
      draft = cycleEdge(draft, torT1[0]); // low FCS
      draft = cycleEdge(draft, t1T2[0]);
      draft = cycleEdge(draft, t1T2[0]); // high drop on the second link
      draft = toggleCandidate(draft, { id: "no-action", actions: [{ type: "no_action" }] });
      draft = toggleCandidate(draft, {
        id: `disable:${t1T2[0]}`,
        actions: [{ type: "disable_link", edge: t1T2[0] }],
      });
    }
    app.draft = draft;
    repaintAll();
  });

  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    if (app.draft) {
      app.draft = undo(app.draft);
      repaintAll();
    }
  });

  el<HTMLButtonElement>("add-candidate").addEventListener("click", () => {
    const mit = candidateFromControls();
    if (mit && app.draft) {
      app.draft = toggleCandidate(app.draft, mit);
      repaintAll();
    }
  });

  el<HTMLButtonElement>("run").addEventListener("click", run);
  el<HTMLSelectElement>("comparator-select").addEventListener("change", (ev) => {
    switchComparator((ev.target as HTMLSelectElement).value as keyof typeof COMPARATORS);
  });
  el<HTMLInputElement>("seed").addEventListener("change", (ev) => {
    if (app.draft) app.draft = { ...app.draft, seed: Number((ev.target as HTMLInputElement).value) };
  });

  const ok = await client.healthy();
  el<HTMLElement>("service-status").textContent = ok
    ? "service: connected"
    : "service: offline (start it with `swarm serve`)";
}

if (typeof document !== "undefined" && document.getElementById("canvas-host")) {
  boot();
}
