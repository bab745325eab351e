// Console/CLI parity: the exact scenario the console would submit (built
// through the draft machinery with a pinned seed) must produce the same
// ranking and penalties whether it goes through the HTTP service or the CLI,
// and switching the comparator client-side must match a server-side re-rank.
//
// Requires the Python package to be installed; skipped otherwise.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { rerank } from "../src/compare.js";
import { COMPARATORS, cycleEdge, newDraft, toScenario, toggleCandidate } from "../src/draft.js";
import type { ResultsDoc, ScenarioDoc, Topology } from "../src/types.js";

const PY = process.env.SWARM_PYTHON ?? "python3";
const PORT = 8907;
const BASE = `http://127.0.0.1:${PORT}`;

function pythonAvailable(): boolean {
  try {
    execFileSync(PY, ["-c", "import swarm"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

const available = pythonAvailable();
const suite = available ? describe : describe.skip;

suite("console/CLI parity", () => {
  let server: ChildProcess;
  let workdir: string;
  let scenario: ScenarioDoc;
  const client = new Client(BASE);

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "whatif-"));
    const topoPath = join(workdir, "topo.json");
    execFileSync(PY, [
      "-m", "swarm.cli", "topology", "clos",
      "--pods", "2", "--tors-per-pod", "2", "--t1-per-pod", "2",
      "--t2-count", "2", "--servers-per-tor", "2",
      "--link-capacity-gbps", "1", "--prop-delay-us", "200",
      "--out", topoPath,
    ]);
    const topology: Topology = JSON.parse(readFileSync(topoPath, "utf-8"));

    // build the draft exactly as the console does
    let draft = newDraft(topology, 4242);
    const lossy = "l:p00-tor00:p00-t1-00";
    draft = cycleEdge(draft, lossy); // low drop
    draft = cycleEdge(draft, lossy); // high drop
    draft = toggleCandidate(draft, { id: "no-action", actions: [{ type: "no_action" }] });
    draft = toggleCandidate(draft, {
      id: `disable:${lossy}`,
      actions: [{ type: "disable_link", edge: lossy }],
    });
    scenario = toScenario(draft);
    scenario.sampling = { demand_samples: 2, routing_samples: 4, interval: [0.5, 2.5], epoch_s: 0.1 };

    server = spawn(PY, ["-m", "swarm.cli", "serve", "--bind", `127.0.0.1:${PORT}`], {
      stdio: "ignore",
    });
    const deadline = Date.now() + 30_000;
    while (Date.now() < deadline) {
      if (await client.healthy()) return;
      await new Promise((r) => setTimeout(r, 250));
    }
    throw new Error("service did not come up");
  }, 60_000);

  afterAll(() => {
    server?.kill();
  });

  function runCli(doc: ScenarioDoc, name: string): ResultsDoc {
    const scenarioPath = join(workdir, `${name}.json`);
    const outPath = join(workdir, `${name}.results.json`);
    writeFileSync(scenarioPath, JSON.stringify(doc));
    execFileSync(PY, [
      "-m", "swarm.cli", "evaluate", "--scenario", scenarioPath, "--out", outPath,
    ]);
    return JSON.parse(readFileSync(outPath, "utf-8"));
  }

  it("pinned seed gives identical ranking and penalties via API and CLI", async () => {
    const cliDoc = runCli(scenario, "parity");
    const jobId = await client.submit(scenario);
    const apiDoc = await client.waitForResults(jobId);
    expect(apiDoc.ranking).toEqual(cliDoc.ranking);
    expect(apiDoc.chosen).toBe(cliDoc.chosen);
    expect(apiDoc.chosen_penalty).toEqual(cliDoc.chosen_penalty);
    for (const mid of Object.keys(cliDoc.mitigations)) {
      expect(apiDoc.mitigations[mid].penalty_vs_best).toEqual(
        cliDoc.mitigations[mid].penalty_vs_best,
      );
      expect(apiDoc.mitigations[mid].composites).toEqual(cliDoc.mitigations[mid].composites);
    }
  }, 120_000);

  it("client-side comparator re-rank matches a server re-rank", async () => {
    const jobId = await client.submit(scenario);
    const results = await client.waitForResults(jobId);

    const other = { ...COMPARATORS["priority-avg-t"], metrics: [...COMPARATORS["priority-avg-t"].metrics] };
    const clientRanking = rerank(results, other);

    const reScenario: ScenarioDoc = { ...scenario, comparator: other };
    const serverDoc = runCli(reScenario, "rerank");
    expect(clientRanking).toEqual(serverDoc.ranking);
  }, 120_000);
});
