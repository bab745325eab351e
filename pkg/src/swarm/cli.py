"""Command-line entry points.

    swarm evaluate  --scenario s.json --out results.json [--method ...]
    swarm tables    generate --kind loss|rtt|queue --out DIR
    swarm scenarios run --suite scen1|scen2|scen3 --out DIR
    swarm topology  clos --pods 2 ... --out topo.json
    swarm serve     [--bind HOST:PORT]

Exit codes: 0 success, 1 schema/configuration error (with the JSON path of
the offending field), 2 when any candidate partitions the network (results
are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigurationError, SwarmError, TableGenerationError


def _cmd_evaluate(args) -> int:
    from .engine import evaluate_scenario, write_results
    from .scenario import load_scenario

    try:
        scenario = load_scenario(args.scenario)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=args.seed)
    if args.tables_dir:
        from dataclasses import replace

        scenario = replace(scenario, tables_dir=args.tables_dir)

    def show_progress(frac: float):
        if args.progress:
            print(f"\r{frac * 100:5.1f}% of samples done", end="", file=sys.stderr)

    doc = evaluate_scenario(
        scenario, jobs=args.jobs, method=args.method, progress=show_progress
    )
    if args.progress:
        print(file=sys.stderr)
    write_results(args.out, doc)
    print(f"wrote {args.out}; ranking: {', '.join(doc['ranking'])}")
    return 2 if doc["partitioned"] else 0


def _cmd_tables(args) -> int:
    from .tablegen import (
        TableGenConfig,
        generate_loss_table,
        generate_queue_table,
        generate_rtt_count_table,
    )
    from .tables import (
        loss_table_to_dict,
        queue_table_to_dict,
        rtt_table_to_dict,
        save_table,
    )

    os.makedirs(args.out, exist_ok=True)
    cfg = TableGenConfig(seed=args.seed, alpha=args.alpha, epsilon=args.epsilon)
    try:
        if args.kind in ("loss", "all"):
            t = generate_loss_table(cfg)
            save_table(os.path.join(args.out, "loss_tput.json"), loss_table_to_dict(t))
            print("wrote loss_tput.json")
        if args.kind in ("rtt", "all"):
            t = generate_rtt_count_table(cfg)
            save_table(os.path.join(args.out, "rtt_count.json"), rtt_table_to_dict(t))
            print("wrote rtt_count.json")
        if args.kind in ("queue", "all"):
            t = generate_queue_table(cfg)
            save_table(os.path.join(args.out, "queue_delay.json"), queue_table_to_dict(t))
            print("wrote queue_delay.json")
    except TableGenerationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


def _cmd_scenarios(args) -> int:
    from .suites import SUITES, run_suite

    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite}", file=sys.stderr)
        return 1
    rows = run_suite(
        args.suite,
        args.out,
        seed=args.seed,
        jobs=args.jobs,
        demand_samples=args.demand_samples,
        routing_samples=args.routing_samples,
    )
    print(f"{len(rows)} cases -> {args.out}/{args.suite}-summary.csv")
    return 0


def _cmd_topology(args) -> int:
    from .net_model import build_clos
    from .topo_io import save_topology

    state = build_clos(
        args.pods,
        args.tors_per_pod,
        args.t1_per_pod,
        args.t2_count,
        args.servers_per_tor,
        args.link_capacity_gbps * 1e9,
        args.prop_delay_us * 1e-6,
    )
    save_topology(args.out, state)
    print(f"wrote {args.out} ({len(state.nodes)} nodes, {len(state.edges)} links)")
    return 0


def _cmd_oracle(args) -> int:
    import json as _json

    from .oracle import SimConfig, simulate
    from .routing import sample_routing
    from .topo_io import load_topology
    from .traffic import sample_demand, spec_from_dict

    state = load_topology(args.topology)
    with open(args.traffic) as fh:
        spec = spec_from_dict(_json.load(fh))
    dm = sample_demand(spec, sorted(state.server_map), args.seed)
    rs = sample_routing(state, dm, 1, args.seed)[0]
    cfg = SimConfig(dt=args.dt, seed=args.seed, short_threshold=spec.short_threshold_bytes)
    results = simulate(state, dm, rs, cfg)
    with open(args.out, "w") as fh:
        for r in results:
            fh.write(
                _json.dumps(
                    {
                        "flow": r.flow_id,
                        "throughput_bps": r.throughput,
                        "fct_s": None if r.fct == float("inf") else r.fct,
                        "failed": r.failed,
                        "straggler": r.straggler,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    print(f"wrote {len(results)} flow records to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    bind = args.bind or os.environ.get("SWARM_BIND_ADDR", "127.0.0.1:8080")
    host, _, port = bind.rpartition(":")
    app = create_app()
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarm", description="Rank failure mitigations by connection-level impact"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="evaluate a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--method",
        default="swarm",
        help="swarm | netpilot-orig | netpilot-<th> | corropt-<th> | playbook-<th>",
    )
    p.add_argument("--jobs", "-j", type=int, default=int(os.environ.get("SWARM_JOBS", "1")))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tables-dir", default=os.environ.get("SWARM_TABLES_DIR"))
    p.add_argument("--progress", action="store_true")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("tables", help="generate measurement tables")
    tsub = p.add_subparsers(dest="tables_command", required=True)
    g = tsub.add_parser("generate")
    g.add_argument("--kind", choices=["loss", "rtt", "queue", "all"], default="all")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--alpha", type=float, default=0.1)
    g.add_argument("--epsilon", type=float, default=0.15)
    g.set_defaults(fn=_cmd_tables)

    p = sub.add_parser("scenarios", help="run a reproduction suite")
    ssub = p.add_subparsers(dest="scenarios_command", required=True)
    r = ssub.add_parser("run")
    r.add_argument("--suite", required=True, help="scen1 | scen2 | scen3")
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", "-j", type=int, default=int(os.environ.get("SWARM_JOBS", "1")))
    r.add_argument("--demand-samples", type=int, default=2)
    r.add_argument("--routing-samples", type=int, default=6)
    r.set_defaults(fn=_cmd_scenarios)

    p = sub.add_parser("topology", help="generate a topology file")
    csub = p.add_subparsers(dest="topology_command", required=True)
    c = csub.add_parser("clos")
    c.add_argument("--pods", type=int, default=2)
    c.add_argument("--tors-per-pod", type=int, default=3)
    c.add_argument("--t1-per-pod", type=int, default=2)
    c.add_argument("--t2-count", type=int, default=2)
    c.add_argument("--servers-per-tor", type=int, default=2)
    c.add_argument("--link-capacity-gbps", type=float, default=10.0)
    c.add_argument("--prop-delay-us", type=float, default=50.0)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_topology)

    p = sub.add_parser("oracle", help="run the reference simulator directly")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    o = osub.add_parser("run")
    o.add_argument("--topology", required=True)
    o.add_argument("--traffic", required=True)
    o.add_argument("--out", required=True, help="per-flow results, JSON lines")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--dt", type=float, default=0.01)
    o.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("serve", help="run the what-if HTTP service")
    p.add_argument("--bind", default=None, help="host:port (or SWARM_BIND_ADDR)")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SwarmError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
