"""Topology file format (schema topo/v1)."""

from __future__ import annotations

import json

from .errors import ConfigurationError
from .net_model import Edge, NetworkState, Node

TOPO_SCHEMA = {
    "type": "object",
    "required": ["schema", "nodes", "edges", "server_map", "routing"],
    "properties": {
        "schema": {"const": "topo/v1"},
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": ["server", "tor", "t1", "t2", "agg"]},
                    "drop_rate": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "endpoints", "capacity_bps"],
                "properties": {
                    "id": {"type": "string"},
                    "endpoints": {
                        "type": "array",
                        "items": {"type": "string"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                    "capacity_bps": {"type": "number", "exclusiveMinimum": 0},
                    "drop_rate": {"type": "number", "minimum": 0, "maximum": 1},
                    "prop_delay_s": {"type": "number", "minimum": 0},
                    "admin_state": {"enum": ["enabled", "disabled"]},
                },
            },
        },
        "server_map": {"type": "object", "additionalProperties": {"type": "string"}},
        "routing": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["node", "table"],
                "properties": {
                    "node": {"type": "string"},
                    "table": {
                        "type": "object",
                        "additionalProperties": {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                    },
                },
            },
        },
    },
}


def state_to_dict(state: NetworkState) -> dict:
    return {
        "schema": "topo/v1",
        "nodes": [
            {"id": n.id, "kind": n.kind, "drop_rate": n.drop_rate}
            for n in (state.nodes[k] for k in sorted(state.nodes))
        ],
        "edges": [
            {
                "id": e.id,
                "endpoints": [e.u, e.v],
                "capacity_bps": e.capacity,
                "drop_rate": e.drop_rate,
                "prop_delay_s": e.prop_delay,
                "admin_state": e.admin_state,
                **({"saved_drop_rate": e.saved_drop_rate} if e.saved_drop_rate is not None else {}),
            }
            for e in (state.edges[k] for k in sorted(state.edges))
        ],
        "server_map": dict(sorted(state.server_map.items())),
        "routing": [
            {
                "node": node,
                "table": {
                    dst: [[nh, w] for nh, w in entries]
                    for dst, entries in sorted(state.routing[node].items())
                },
            }
            for node in sorted(state.routing)
        ],
    }


def state_from_dict(doc: dict) -> NetworkState:
    if doc.get("schema") != "topo/v1":
        raise ConfigurationError("expected schema topo/v1")
    nodes = {
        nd["id"]: Node(nd["id"], nd["kind"], float(nd.get("drop_rate", 0.0)))
        for nd in doc["nodes"]
    }
    edges = {}
    for ed in doc["edges"]:
        u, v = ed["endpoints"]
        edges[ed["id"]] = Edge(
            id=ed["id"],
            u=u,
            v=v,
            capacity=float(ed["capacity_bps"]),
            drop_rate=float(ed.get("drop_rate", 0.0)),
            prop_delay=float(ed.get("prop_delay_s", 0.0)),
            admin_state=ed.get("admin_state", "enabled"),
            saved_drop_rate=ed.get("saved_drop_rate"),
        )
    routing = {
        rt["node"]: {
            dst: tuple((nh, float(w)) for nh, w in entries)
            for dst, entries in rt["table"].items()
        }
        for rt in doc["routing"]
    }
    state = NetworkState(nodes, edges, dict(doc["server_map"]), routing)
    state.validate()
    return state


def save_topology(path: str, state: NetworkState) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_topology(path: str) -> NetworkState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
