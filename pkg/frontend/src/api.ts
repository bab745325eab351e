// Thin client for the evaluation service. Every number shown in the console
// originates here; nothing is estimated locally.

import type { JobStatus, ResultsDoc, ScenarioDoc, Topology } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function jsonOrThrow(res: Response): Promise<any> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      detail = (await res.json()).detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return res.json();
}

export class Client {
  constructor(private base: string = "") {}

  async submit(scenario: ScenarioDoc): Promise<string> {
    const res = await fetch(`${this.base}/api/v1/evaluate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(scenario),
    });
    return (await jsonOrThrow(res)).job_id;
  }

  async jobStatus(jobId: string): Promise<JobStatus> {
    return jsonOrThrow(await fetch(`${this.base}/api/v1/jobs/${jobId}`));
  }

  async results(jobId: string): Promise<ResultsDoc> {
    return jsonOrThrow(await fetch(`${this.base}/api/v1/jobs/${jobId}/results`));
  }

  async waitForResults(
    jobId: string,
    onProgress?: (frac: number) => void,
    pollMs = 250,
    timeoutMs = 600_000,
  ): Promise<ResultsDoc> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.jobStatus(jobId);
      onProgress?.(status.progress);
      if (status.status === "done") return this.results(jobId);
      if (status.status === "error") throw new ApiError(409, status.error ?? "job failed");
      if (Date.now() > deadline) throw new ApiError(408, "evaluation timed out");
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }

  async topologies(): Promise<string[]> {
    return (await jsonOrThrow(await fetch(`${this.base}/api/v1/topologies`))).topologies;
  }

  async topology(id: string): Promise<Topology> {
    return jsonOrThrow(await fetch(`${this.base}/api/v1/topologies/${id}`));
  }

  async addTopology(id: string, topology: Topology): Promise<void> {
    await jsonOrThrow(
      await fetch(`${this.base}/api/v1/topologies`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ id, topology }),
      }),
    );
  }

  async healthy(): Promise<boolean> {
    try {
      const res = await fetch(`${this.base}/api/v1/healthz`);
      return res.ok;
    } catch {
      return false;
    }
  }
}
