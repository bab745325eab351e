"""HTTP API serving the operator what-if console.

Asynchronous job model over a bounded thread pool: POST a scenario, poll the
job, fetch results. Results for a pinned seed are byte-identical to the CLI
because the evaluation path is shared and seed-derived.

    POST /api/v1/evaluate            scenario/v1 body -> {"job_id": ...}
    GET  /api/v1/jobs/{id}           {"status", "progress"}
    GET  /api/v1/jobs/{id}/results   results/v1
    GET  /api/v1/topologies          stored topology ids
    POST /api/v1/topologies          {"id", "topology"} (409 on duplicate)
    GET  /api/v1/topologies/{id}     topo/v1
    GET  /api/v1/healthz
"""

from __future__ import annotations

import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .engine import evaluate_scenario
from .errors import ConfigurationError
from .scenario import scenario_from_dict, validate_scenario_doc
from .topo_io import state_from_dict


class JobStore:
    def __init__(self, workers: int, queue_limit: int):
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.queue_limit = queue_limit
        self.lock = threading.Lock()
        self.jobs: dict[str, dict] = {}

    def pending(self) -> int:
        return sum(1 for j in self.jobs.values() if j["status"] in ("queued", "running"))

    def submit(self, scenario, method: str) -> str:
        job_id = uuid.uuid4().hex
        job = {"status": "queued", "progress": 0.0, "result": None, "error": None}
        with self.lock:
            if self.pending() >= self.queue_limit:
                raise OverflowError("worker pool saturated")
            self.jobs[job_id] = job

        def run():
            job["status"] = "running"

            def progress(frac: float):
                job["progress"] = frac

            try:
                job["result"] = evaluate_scenario(
                    scenario, jobs=1, method=method, progress=progress
                )
                job["status"] = "done"
                job["progress"] = 1.0
            except Exception as e:  # surfaced through the job status
                job["status"] = "error"
                job["error"] = str(e)

        self.pool.submit(run)
        return job_id


def create_app(workers: int | None = None, queue_limit: int = 16) -> FastAPI:
    app = FastAPI(title="mitigation what-if service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    workers = workers or int(os.environ.get("SWARM_JOBS", "2"))
    store = JobStore(workers=workers, queue_limit=queue_limit)
    topologies: dict[str, dict] = {}
    app.state.jobs = store
    app.state.topologies = topologies

    @app.post("/api/v1/evaluate")
    async def evaluate(request: Request):
        doc = await request.json()
        method = doc.pop("method", "swarm")
        if isinstance(doc.get("topology"), dict) and "ref" in doc["topology"]:
            ref = doc["topology"]["ref"]
            if ref not in topologies:
                raise HTTPException(404, f"unknown topology {ref!r}")
            doc["topology"] = topologies[ref]
        try:
            validate_scenario_doc(doc)
            scenario = scenario_from_dict(doc)
        except ConfigurationError as e:
            raise HTTPException(400, str(e))
        try:
            job_id = store.submit(scenario, method)
        except OverflowError as e:
            raise HTTPException(503, str(e))
        return {"job_id": job_id}

    @app.get("/api/v1/jobs/{job_id}")
    def job_status(job_id: str):
        job = store.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, "unknown job")
        return {"status": job["status"], "progress": job["progress"], "error": job["error"]}

    @app.get("/api/v1/jobs/{job_id}/results")
    def job_results(job_id: str):
        job = store.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, "unknown job")
        if job["status"] == "error":
            raise HTTPException(409, job["error"] or "job failed")
        if job["status"] != "done":
            raise HTTPException(409, "job not finished")
        return JSONResponse(job["result"])

    @app.get("/api/v1/topologies")
    def list_topologies():
        return {"topologies": sorted(topologies)}

    @app.get("/api/v1/topologies/{topo_id}")
    def get_topology(topo_id: str):
        if topo_id not in topologies:
            raise HTTPException(404, "unknown topology")
        return JSONResponse(topologies[topo_id])

    @app.post("/api/v1/topologies")
    async def add_topology(request: Request):
        doc = await request.json()
        topo_id = doc.get("id")
        body = doc.get("topology")
        if not topo_id or not isinstance(body, dict):
            raise HTTPException(400, "need id and topology")
        if topo_id in topologies:
            raise HTTPException(409, f"topology {topo_id!r} already exists")
        try:
            state_from_dict(body)
        except ConfigurationError as e:
            raise HTTPException(400, str(e))
        topologies[topo_id] = body
        return {"id": topo_id}

    @app.get("/api/v1/healthz")
    def healthz():
        return {"status": "ok"}

    return app
