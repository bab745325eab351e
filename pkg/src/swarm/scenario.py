"""Scenario files (schema scenario/v1): topology + traffic + failure history
+ candidate mitigations + comparator + sampling configuration + seed.

Validation runs through jsonschema so a bad document reports the JSON path
of the offending field.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import jsonschema

from .aggregate import (
    Comparator,
    LinearComparator,
    PriorityComparator,
)
from .errors import ConfigurationError
from .net_model import (
    Action,
    BringBackLink,
    DisableLink,
    DisableSwitch,
    Failure,
    Mitigation,
    MoveTraffic,
    NetworkState,
    NoAction,
    RestoreEcmp,
    SetWcmpWeights,
)
from .topo_io import TOPO_SCHEMA, state_from_dict, load_topology
from .traffic import TrafficSpec, required_samples, spec_from_dict

_ACTION_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {
            "enum": [
                "no_action",
                "disable_link",
                "disable_switch",
                "bring_back_link",
                "set_wcmp",
                "restore_ecmp",
                "move_traffic",
            ]
        },
        "edge": {"type": "string"},
        "node": {"type": "string"},
        "weights": {"type": "object", "additionalProperties": {"type": "number"}},
        "from": {"type": "string"},
        "to": {"type": "string"},
        "fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["schema", "topology", "traffic", "candidates", "comparator", "sampling", "seed"],
    "properties": {
        "schema": {"const": "scenario/v1"},
        "name": {"type": "string"},
        "topology": {
            "oneOf": [TOPO_SCHEMA, {"type": "object", "required": ["file"]}]
        },
        "traffic": {
            "oneOf": [
                {"type": "object", "required": ["schema", "rate_per_server_fps", "duration_s"]},
                {"type": "object", "required": ["file"]},
            ]
        },
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "oneOf": [
                    {
                        "required": ["failure"],
                        "properties": {
                            "failure": {
                                "type": "object",
                                "required": ["kind", "location"],
                                "properties": {
                                    "kind": {
                                        "enum": [
                                            "link_drop",
                                            "tor_drop",
                                            "link_capacity_reduction",
                                            "link_cut",
                                            "switch_drop",
                                        ]
                                    },
                                    "location": {"type": "string"},
                                    "magnitude": {"type": "number"},
                                    "onset": {"type": "number"},
                                },
                            }
                        },
                    },
                    {
                        "required": ["mitigation"],
                        "properties": {
                            "mitigation": {
                                "type": "object",
                                "required": ["id", "actions"],
                                "properties": {
                                    "id": {"type": "string"},
                                    "actions": {"type": "array", "items": _ACTION_SCHEMA},
                                },
                            }
                        },
                    },
                ],
            },
        },
        "candidates": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "actions"],
                "properties": {
                    "id": {"type": "string"},
                    "actions": {"type": "array", "items": _ACTION_SCHEMA},
                },
            },
        },
        "comparator": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["priority", "linear"]},
                "metrics": {"type": "array", "items": {"type": "string"}},
                "tie_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "failure_gate": {"type": ["number", "null"]},
                "weights": {"type": "array", "items": {"type": "number"}},
            },
        },
        "sampling": {
            "type": "object",
            "required": ["interval", "epoch_s"],
            "properties": {
                "demand_samples": {"type": ["integer", "null"], "minimum": 1},
                "routing_samples": {"type": ["integer", "null"], "minimum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "interval": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "epoch_s": {"type": "number", "exclusiveMinimum": 0},
                "window_split": {"type": "integer", "minimum": 1},
                "guard_gap_s": {"type": "number", "minimum": 0},
                "use_fast_maxmin": {"type": "boolean"},
                "short_flow_mc": {"type": "integer", "minimum": 1},
                "summary_percentile": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "seed": {"type": "integer"},
        "tables_dir": {"type": ["string", "null"]},
    },
}

PRIORITY_FCT = ("p99_fct", "p01_throughput", "avg_throughput")
PRIORITY_AVG_T = ("avg_throughput", "p99_fct", "p01_throughput")
PRIORITY_1P_T = ("p01_throughput", "avg_throughput", "p99_fct")


@dataclass
class Scenario:
    name: str
    state: NetworkState
    traffic: TrafficSpec
    events: list  # Failure | Mitigation, in order
    candidates: list[Mitigation]
    comparator: Comparator
    demand_samples: int
    routing_samples: int
    interval: tuple[float, float]
    epoch_s: float
    seed: int
    alpha: float = 0.05
    epsilon: float = 0.05
    window_split: int = 1
    guard_gap_s: float = 0.0
    use_fast_maxmin: bool = False
    short_flow_mc: int = 8
    summary_percentile: float = 0.90
    tables_dir: str | None = None

    def failures(self) -> list[Failure]:
        return [e for e in self.events if isinstance(e, Failure)]


def action_from_dict(doc: dict) -> Action:
    t = doc["type"]
    if t == "no_action":
        return NoAction()
    if t == "disable_link":
        return DisableLink(doc["edge"])
    if t == "disable_switch":
        return DisableSwitch(doc["node"])
    if t == "bring_back_link":
        return BringBackLink(doc["edge"])
    if t == "set_wcmp":
        return SetWcmpWeights(doc["node"], dict(doc["weights"]))
    if t == "restore_ecmp":
        return RestoreEcmp(doc["node"])
    if t == "move_traffic":
        return MoveTraffic(doc["from"], doc["to"], float(doc.get("fraction", 1.0)))
    raise ConfigurationError(f"unknown action type {t!r}")


def action_to_dict(a: Action) -> dict:
    if isinstance(a, NoAction):
        return {"type": "no_action"}
    if isinstance(a, DisableLink):
        return {"type": "disable_link", "edge": a.edge_id}
    if isinstance(a, DisableSwitch):
        return {"type": "disable_switch", "node": a.node_id}
    if isinstance(a, BringBackLink):
        return {"type": "bring_back_link", "edge": a.edge_id}
    if isinstance(a, SetWcmpWeights):
        return {"type": "set_wcmp", "node": a.node_id, "weights": dict(a.weights)}
    if isinstance(a, RestoreEcmp):
        return {"type": "restore_ecmp", "node": a.node_id}
    if isinstance(a, MoveTraffic):
        return {
            "type": "move_traffic",
            "from": a.from_server,
            "to": a.to_server,
            "fraction": a.fraction,
        }
    raise ConfigurationError(f"unknown action {a!r}")


def mitigation_from_dict(doc: dict) -> Mitigation:
    return Mitigation(
        id=doc["id"], actions=tuple(action_from_dict(a) for a in doc["actions"])
    )


def comparator_from_dict(doc: dict) -> Comparator:
    if doc["type"] == "priority":
        return PriorityComparator(
            metrics=tuple(doc.get("metrics", PRIORITY_FCT)),
            tie_fraction=float(doc.get("tie_fraction", 0.10)),
            failure_gate=doc.get("failure_gate", 0.01),
        )
    w = doc.get("weights", [1.0, 1.0, 1.0])
    return LinearComparator(weights=tuple(float(x) for x in w))


def comparator_to_dict(c: Comparator) -> dict:
    if isinstance(c, PriorityComparator):
        return {
            "type": "priority",
            "metrics": list(c.metrics),
            "tie_fraction": c.tie_fraction,
            "failure_gate": c.failure_gate,
        }
    return {"type": "linear", "weights": list(c.weights)}


def validate_scenario_doc(doc: dict) -> None:
    """Raises ConfigurationError carrying the JSON path of the first violation."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/" + "/".join(str(p) for p in e.absolute_path)
        raise ConfigurationError(f"scenario schema violation at {path or '/'}: {e.message}")


def scenario_from_dict(doc: dict, base_dir: str = ".") -> Scenario:
    validate_scenario_doc(doc)

    topo = doc["topology"]
    state = (
        load_topology(os.path.join(base_dir, topo["file"]))
        if "file" in topo
        else state_from_dict(topo)
    )
    traf = doc["traffic"]
    if "file" in traf:
        with open(os.path.join(base_dir, traf["file"])) as fh:
            traffic = spec_from_dict(json.load(fh))
    else:
        traffic = spec_from_dict(traf)

    events = []
    for ev in doc.get("events", []):
        if "failure" in ev:
            f = ev["failure"]
            events.append(
                Failure(
                    kind=f["kind"],
                    location=f["location"],
                    magnitude=float(f.get("magnitude", 1.0)),
                    onset=float(f.get("onset", 0.0)),
                )
            )
        else:
            events.append(mitigation_from_dict(ev["mitigation"]))

    candidates = [mitigation_from_dict(c) for c in doc["candidates"]]
    if not any(
        all(isinstance(a, NoAction) for a in m.actions) for m in candidates
    ):
        candidates.append(Mitigation.no_action())

    sampling = doc["sampling"]
    alpha = float(sampling.get("alpha", 0.05))
    epsilon = float(sampling.get("epsilon", 0.05))
    n = sampling.get("routing_samples") or required_samples(alpha, epsilon)
    k = sampling.get("demand_samples") or required_samples(alpha, epsilon)

    return Scenario(
        name=doc.get("name", "scenario"),
        state=state,
        traffic=traffic,
        events=events,
        candidates=candidates,
        comparator=comparator_from_dict(doc["comparator"]),
        demand_samples=int(k),
        routing_samples=int(n),
        interval=(float(sampling["interval"][0]), float(sampling["interval"][1])),
        epoch_s=float(sampling["epoch_s"]),
        seed=int(doc["seed"]),
        alpha=alpha,
        epsilon=epsilon,
        window_split=int(sampling.get("window_split", 1)),
        guard_gap_s=float(sampling.get("guard_gap_s", 0.0)),
        use_fast_maxmin=bool(sampling.get("use_fast_maxmin", False)),
        short_flow_mc=int(sampling.get("short_flow_mc", 8)),
        summary_percentile=float(sampling.get("summary_percentile", 0.90)),
        tables_dir=doc.get("tables_dir"),
    )


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        doc = json.load(fh)
    return scenario_from_dict(doc, base_dir=os.path.dirname(path) or ".")
