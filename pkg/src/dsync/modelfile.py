"""JSON model files (format ``dsync-net/1``).

Top-level keys: ``format``, ``name``, ``places``, ``transitions``, ``flows``,
``initial_marking``. Guards are constraint text in the grammar of
:mod:`dsync.constraints`; delays and interarrivals are distribution objects
(``{"kind": "constant"|"uniform"|"exponential", ...}``) and attribute
generators support constant, uniform, uniform_int and weighted choice.
"""
from __future__ import annotations

import json
from typing import Any

from .constraints import parse_constraint
from .errors import ModelError
from .net import (
    ArrivalSpec,
    AttrGen,
    DelaySpec,
    Marking,
    Net,
    Place,
    Token,
    Transition,
    validate_net,
)

FORMAT = "dsync-net/1"


def _delay_from_json(obj: Any, context: str) -> DelaySpec:
    if obj is None:
        return DelaySpec.constant(0.0)
    if isinstance(obj, (int, float)):
        return DelaySpec.constant(float(obj))
    kind = obj.get("kind")
    if kind == "constant":
        return DelaySpec.constant(float(obj["value"]))
    if kind == "uniform":
        return DelaySpec.uniform(float(obj["lo"]), float(obj["hi"]))
    if kind == "exponential":
        return DelaySpec.exponential(float(obj["mean"]))
    raise ModelError(f"{context}: unknown delay kind {kind!r}")


def _delay_to_json(spec: DelaySpec) -> Any:
    if spec.kind == "constant":
        return {"kind": "constant", "value": spec.value}
    if spec.kind == "uniform":
        return {"kind": "uniform", "lo": spec.lo, "hi": spec.hi}
    return {"kind": "exponential", "mean": spec.mean}


def _attrgen_from_json(obj: Any, context: str) -> AttrGen:
    kind = obj.get("kind")
    if kind == "constant":
        return AttrGen("constant", value=obj["value"])
    if kind == "uniform":
        return AttrGen("uniform", lo=float(obj["lo"]), hi=float(obj["hi"]))
    if kind == "uniform_int":
        return AttrGen("uniform_int", lo=float(obj["lo"]), hi=float(obj["hi"]))
    if kind == "choice":
        return AttrGen(
            "choice",
            values=tuple(obj["values"]),
            weights=tuple(obj.get("weights", ())),
        )
    raise ModelError(f"{context}: unknown attribute generator kind {kind!r}")


def _attrgen_to_json(gen: AttrGen) -> Any:
    if gen.kind == "constant":
        return {"kind": "constant", "value": gen.value}
    if gen.kind in ("uniform", "uniform_int"):
        return {"kind": gen.kind, "lo": gen.lo, "hi": gen.hi}
    out: dict[str, Any] = {"kind": "choice", "values": list(gen.values)}
    if gen.weights:
        out["weights"] = list(gen.weights)
    return out


def net_from_json(doc: dict) -> Net:
    if doc.get("format") != FORMAT:
        raise ModelError(f"unsupported model format {doc.get('format')!r}, expected {FORMAT!r}")
    places = [
        Place(
            p["id"],
            p.get("kind", "plain"),
            tuple((name, typ) for name, typ in p.get("attributes", [])),
        )
        for p in doc.get("places", [])
    ]
    transitions = []
    for t in doc.get("transitions", []):
        guard = None
        if t.get("guard"):
            guard = parse_constraint(t["guard"])
        arrival = None
        if t.get("arrival_spec"):
            spec = t["arrival_spec"]
            arrival = ArrivalSpec(
                interarrival=_delay_from_json(spec.get("interarrival"), t["id"]),
                attributes={
                    name: _attrgen_from_json(gen, t["id"])
                    for name, gen in sorted(spec.get("attributes", {}).items())
                },
                max_count=spec.get("max_count"),
                case_prefix=spec.get("case_prefix", "c"),
            )
        transitions.append(
            Transition(
                t["id"],
                is_task=t.get("is_task", True),
                delay=_delay_from_json(t.get("delay"), t["id"]),
                guard=guard,
                arrival_spec=arrival,
            )
        )
    flows = [(src, tgt) for src, tgt in doc.get("flows", [])]
    marking = Marking()
    for place_id, tokens in sorted(doc.get("initial_marking", {}).items()):
        for tok in tokens:
            marking = marking.with_added(
                place_id,
                Token(
                    tok.get("case_id"),
                    dict(tok.get("attrs", {})),
                    float(tok.get("available_at", 0.0)),
                ),
            )
    return Net(places, transitions, flows, marking, doc.get("name", ""))


def net_to_json(net: Net) -> dict:
    doc: dict[str, Any] = {"format": FORMAT, "name": net.name}
    doc["places"] = [
        {"id": p.id, "kind": p.kind, "attributes": [list(a) for a in p.attributes]}
        for p in net.places.values()
    ]
    transitions = []
    for t in net.transitions.values():
        obj: dict[str, Any] = {
            "id": t.id,
            "is_task": t.is_task,
            "delay": _delay_to_json(t.delay),
        }
        if t.guard is not None:
            obj["guard"] = t.guard.canonical()
        if t.arrival_spec is not None:
            obj["arrival_spec"] = {
                "interarrival": _delay_to_json(t.arrival_spec.interarrival),
                "attributes": {
                    name: _attrgen_to_json(gen)
                    for name, gen in sorted(t.arrival_spec.attributes.items())
                },
                "max_count": t.arrival_spec.max_count,
                "case_prefix": t.arrival_spec.case_prefix,
            }
        transitions.append(obj)
    doc["transitions"] = transitions
    doc["flows"] = [list(f) for f in net.flows]
    marking: dict[str, list] = {}
    for place_id in net.initial_marking.places():
        marking[place_id] = [
            {"case_id": tok.case_id, "attrs": dict(tok.attrs), "available_at": tok.available_at}
            for tok in net.initial_marking.tokens(place_id)
        ]
    doc["initial_marking"] = marking
    return doc


def load_model(path: str) -> Net:
    """Load and validate a model file; raises ModelError on any violation."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    net = net_from_json(doc)
    problems = validate_net(net)
    if problems:
        raise ModelError(f"model {path!r} is invalid: " + "; ".join(problems))
    return net


def save_model(net: Net, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(net_to_json(net), fh, indent=2, sort_keys=False)
        fh.write("\n")
