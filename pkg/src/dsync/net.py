"""Timed colored Petri nets: structure, markings, and token-game semantics.

Places are typed (case, resource, plain) and declare the attributes their
tokens may carry. Tokens are timestamped: a token can only be bound by a
transition once its availability time has been reached, which is what makes
counts of "enabled" tokens and times-until-availability observable state.

Nets, markings and tokens are immutable; ``fire`` returns a new marking and
never touches its input, so values can be shared across threads freely.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Optional

from .errors import ModelError

if TYPE_CHECKING:  # avoid a runtime cycle; guards are duck-typed here
    from .constraints import ConstraintExpr

AttrValue = object  # number | bool | str

PLACE_KINDS = ("case", "resource", "plain")
ATTR_TYPES = ("number", "boolean", "text")


@dataclass(frozen=True)
class Token:
    """One timestamped, attribute-carrying token.

    ``case_id`` is the case identifier in a case place, the resource
    identifier in a resource place, and ``None`` in plain places.
    """

    case_id: Optional[str]
    attrs: Mapping[str, AttrValue]
    available_at: float

    def sort_key(self) -> tuple:
        return (
            self.available_at,
            self.case_id or "",
            json.dumps(self.attrs, sort_keys=True, default=str),
        )


@dataclass(frozen=True)
class DelaySpec:
    """Duration distribution: constant, uniform(lo, hi) or exponential(mean)."""

    kind: str  # "constant" | "uniform" | "exponential"
    value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    mean: float = 0.0

    @staticmethod
    def constant(value: float) -> "DelaySpec":
        return DelaySpec("constant", value=value)

    @staticmethod
    def uniform(lo: float, hi: float) -> "DelaySpec":
        return DelaySpec("uniform", lo=lo, hi=hi)

    @staticmethod
    def exponential(mean: float) -> "DelaySpec":
        return DelaySpec("exponential", mean=mean)

    def sample(self, rng: Optional[random.Random]) -> float:
        if self.kind == "constant":
            return self.value
        if rng is None:
            raise ModelError("a random stream is required to sample a %s delay" % self.kind)
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi)
        if self.kind == "exponential":
            return rng.expovariate(1.0 / self.mean)
        raise ModelError(f"unknown delay kind {self.kind!r}")

    def problems(self) -> list[str]:
        if self.kind == "constant":
            return [] if self.value >= 0 else ["constant delay is negative"]
        if self.kind == "uniform":
            out = []
            if self.lo < 0:
                out.append("uniform delay lower bound is negative")
            if self.hi < self.lo:
                out.append("uniform delay bounds are inverted")
            return out
        if self.kind == "exponential":
            return [] if self.mean > 0 else ["exponential delay mean must be positive"]
        return [f"unknown delay kind {self.kind!r}"]


@dataclass(frozen=True)
class AttrGen:
    """Generator for one token attribute of newly injected cases."""

    kind: str  # "constant" | "uniform" | "uniform_int" | "choice"
    value: AttrValue = None
    lo: float = 0.0
    hi: float = 0.0
    values: tuple = ()
    weights: tuple = ()

    def sample(self, rng: random.Random) -> AttrValue:
        if self.kind == "constant":
            return self.value
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi)
        if self.kind == "uniform_int":
            return float(rng.randint(int(self.lo), int(self.hi)))
        if self.kind == "choice":
            weights = self.weights or None
            return rng.choices(list(self.values), weights=weights, k=1)[0]
        raise ModelError(f"unknown attribute generator kind {self.kind!r}")


@dataclass(frozen=True)
class ArrivalSpec:
    """Self-scheduling behaviour of a source transition (empty preset).

    ``interarrival`` spaces consecutive injections, ``attributes`` generates
    the new case token's data, and ``max_count`` (when set) caps the number
    of injections regardless of the simulation config.
    """

    interarrival: DelaySpec
    attributes: Mapping[str, AttrGen] = field(default_factory=dict)
    max_count: Optional[int] = None
    case_prefix: str = "c"


@dataclass(frozen=True)
class Place:
    id: str
    kind: str  # "case" | "resource" | "plain"
    attributes: tuple[tuple[str, str], ...] = ()  # (name, "number"|"boolean"|"text")

    def attr_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)


@dataclass(frozen=True)
class Transition:
    id: str
    is_task: bool = True
    delay: DelaySpec = DelaySpec.constant(0.0)
    guard: Optional["ConstraintExpr"] = None
    arrival_spec: Optional[ArrivalSpec] = None


class Marking:
    """Immutable per-place token multisets."""

    __slots__ = ("_by_place",)

    def __init__(self, by_place: Optional[Mapping[str, tuple[Token, ...]]] = None):
        self._by_place: dict[str, tuple[Token, ...]] = dict(by_place or {})

    def tokens(self, place_id: str) -> tuple[Token, ...]:
        return self._by_place.get(place_id, ())

    def places(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_place))

    def with_added(self, place_id: str, token: Token) -> "Marking":
        new = dict(self._by_place)
        new[place_id] = self.tokens(place_id) + (token,)
        return Marking(new)

    def with_removed(self, place_id: str, token: Token) -> "Marking":
        current = self.tokens(place_id)
        for i, tok in enumerate(current):
            if tok == token:
                new = dict(self._by_place)
                new[place_id] = current[:i] + current[i + 1 :]
                return Marking(new)
        raise ModelError(f"token {token} not present in place {place_id!r}")

    def total_tokens(self) -> int:
        return sum(len(toks) for toks in self._by_place.values())

    def _canonical(self) -> dict[str, list[tuple]]:
        return {
            p: sorted(t.sort_key() for t in toks)
            for p, toks in self._by_place.items()
            if toks
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Marking):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __repr__(self) -> str:
        parts = []
        for p in sorted(self._by_place):
            toks = ", ".join(
                f"({t.case_id},{dict(t.attrs)},@{t.available_at:g})" for t in self._by_place[p]
            )
            parts.append(f"{p}: [{toks}]")
        return "Marking{" + "; ".join(parts) + "}"


Binding = dict  # place id -> Token chosen from that place


class Net:
    """A validated-on-demand net: places, transitions, flows, initial marking."""

    def __init__(
        self,
        places: list[Place],
        transitions: list[Transition],
        flows: list[tuple[str, str]],
        initial_marking: Optional[Marking] = None,
        name: str = "",
    ):
        self.name = name
        self.places: dict[str, Place] = {p.id: p for p in places}
        self.transitions: dict[str, Transition] = {t.id: t for t in transitions}
        self.flows: tuple[tuple[str, str], ...] = tuple(flows)
        self.initial_marking = initial_marking or Marking()
        self._preset: dict[str, tuple[str, ...]] = {}
        self._postset: dict[str, tuple[str, ...]] = {}
        self._depth_cache: dict[str, int] = {}
        for node in list(self.places) + list(self.transitions):
            self._preset[node] = tuple(sorted(src for src, tgt in self.flows if tgt == node))
            self._postset[node] = tuple(sorted(tgt for src, tgt in self.flows if src == node))

    # -- structure ---------------------------------------------------------

    def place(self, place_id: str) -> Place:
        try:
            return self.places[place_id]
        except KeyError:
            raise ModelError(f"unknown place {place_id!r}") from None

    def transition(self, t_id: str) -> Transition:
        try:
            return self.transitions[t_id]
        except KeyError:
            raise ModelError(f"unknown transition {t_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self.places or node_id in self.transitions

    def task_ids(self) -> tuple[str, ...]:
        return tuple(sorted(t.id for t in self.transitions.values() if t.is_task))

    def case_inputs(self, t_id: str) -> tuple[str, ...]:
        return tuple(p for p in preset(self, t_id) if self.places[p].kind == "case")

    def resource_inputs(self, t_id: str) -> tuple[str, ...]:
        return tuple(p for p in preset(self, t_id) if self.places[p].kind == "resource")

    def flow_depth(self, t_id: str) -> int:
        """Longest chain of case places feeding ``t_id`` (0 for sources).

        Used to order simultaneous firings: downstream transitions consume
        before upstream ones refill, which is also the order the FIFO policy
        produces (their tokens have been waiting longer).
        """

        def depth(node: str, seen: frozenset) -> int:
            if node in self._depth_cache:
                return self._depth_cache[node]
            if node in seen:
                return 0  # defensive: case-flow cycles get depth 0
            feeders = []
            for p in self._preset.get(node, ()):
                if p in self.places and self.places[p].kind == "case":
                    feeders.extend(self._preset.get(p, ()))
            value = 1 + max(
                (depth(t2, seen | {node}) for t2 in feeders), default=-1
            )
            self._depth_cache[node] = value
            return value

        self.transition(t_id)
        return depth(t_id, frozenset())

    def with_guards(self, guards: Mapping[str, Optional["ConstraintExpr"]]) -> "Net":
        """Copy of the net with the given transitions' guards replaced."""
        transitions = [
            Transition(t.id, t.is_task, t.delay, guards.get(t.id, t.guard), t.arrival_spec)
            for t in self.transitions.values()
        ]
        return Net(
            list(self.places.values()),
            transitions,
            list(self.flows),
            self.initial_marking,
            self.name,
        )

    def without_guards(self) -> "Net":
        return self.with_guards({t: None for t in self.transitions})


def preset(net: Net, node_id: str) -> tuple[str, ...]:
    """Ids of nodes with a flow into ``node_id``, sorted."""
    if not net.has_node(node_id):
        raise ModelError(f"unknown node {node_id!r}")
    return net._preset[node_id]


def postset(net: Net, node_id: str) -> tuple[str, ...]:
    """Ids of nodes with a flow out of ``node_id``, sorted."""
    if not net.has_node(node_id):
        raise ModelError(f"unknown node {node_id!r}")
    return net._postset[node_id]


def _enabled_tokens(m: Marking, place_id: str, now: float) -> list[Token]:
    toks = [t for t in m.tokens(place_id) if t.available_at <= now]
    toks.sort(key=lambda t: (t.available_at, t.case_id or ""))
    return toks


def enabled_bindings(
    net: Net,
    m: Marking,
    t_id: str,
    now: float,
    check_guards: bool = False,
) -> list[Binding]:
    """All bindings of time-enabled tokens for transition ``t_id`` at ``now``.

    The result order is deterministic: the cartesian product runs over the
    preset places sorted by id, each place's tokens sorted by availability
    then case id. With ``check_guards`` set, only bindings that satisfy the
    transition's guard survive. A transition with an empty preset has exactly
    one (empty) binding.
    """
    t = net.transition(t_id)
    in_places = preset(net, t_id)
    pools = []
    for p in in_places:
        toks = _enabled_tokens(m, p, now)
        if not toks:
            return []
        pools.append(toks)
    bindings: list[Binding] = [
        dict(zip(in_places, combo)) for combo in itertools.product(*pools)
    ]
    if check_guards and t.guard is not None:
        if not t.guard.holds(m, now):
            return []
        bindings = [y for y in bindings if t.guard.binding_ok(m, now, y)]
    return bindings


def has_enabled_binding(
    net: Net, m: Marking, t_id: str, now: float, check_guards: bool = False
) -> bool:
    """Cheap existence test; avoids building the full binding product."""
    t = net.transition(t_id)
    in_places = preset(net, t_id)
    for p in in_places:
        if not any(tok.available_at <= now for tok in m.tokens(p)):
            return False
    if check_guards and t.guard is not None:
        return bool(enabled_bindings(net, m, t_id, now, check_guards=True))
    return True


def fire(
    net: Net,
    m: Marking,
    t_id: str,
    binding: Binding,
    now: float,
    rng: Optional[random.Random] = None,
    delay_override: Optional[float] = None,
    produced_case: Optional[tuple[str, Mapping[str, AttrValue]]] = None,
) -> Marking:
    """Fire ``t_id`` under ``binding`` at time ``now`` and return the new marking.

    Consumed tokens are removed; each outgoing place receives one token that
    becomes available at ``now`` plus the sampled (or overridden) delay. Case
    output places carry forward the bound case token's identity and data
    unless ``produced_case`` supplies them explicitly (used for source
    transitions and for log moves, where the event data is authoritative).
    Resource output places receive back the token bound from the same place.
    """
    t = net.transition(t_id)
    new_m = m
    for p, tok in sorted(binding.items()):
        new_m = new_m.with_removed(p, tok)

    delay = t.delay.sample(rng) if delay_override is None else delay_override
    if delay < 0:
        raise ModelError(f"transition {t_id!r} produced a negative delay {delay}")
    out_time = now + delay

    case_id: Optional[str] = None
    case_attrs: Mapping[str, AttrValue] = {}
    if produced_case is not None:
        case_id, case_attrs = produced_case
    else:
        for p in net.case_inputs(t_id):
            if p in binding:
                case_id = binding[p].case_id
                case_attrs = binding[p].attrs
                break

    for p in postset(net, t_id):
        place = net.place(p)
        if place.kind == "case":
            if case_id is None:
                raise ModelError(
                    f"transition {t_id!r} outputs to case place {p!r} but no case token "
                    "was consumed or supplied"
                )
            attrs = {k: v for k, v in case_attrs.items() if k in place.attr_names()}
            new_m = new_m.with_added(p, Token(case_id, attrs, out_time))
        elif place.kind == "resource":
            if p not in binding:
                raise ModelError(
                    f"transition {t_id!r} outputs to resource place {p!r} without "
                    "consuming from it"
                )
            res = binding[p]
            new_m = new_m.with_added(p, Token(res.case_id, res.attrs, out_time))
        else:
            new_m = new_m.with_added(p, Token(None, {}, out_time))
    return new_m


def validate_net(net: Net) -> list[str]:
    """All invariant violations of the net (empty list when valid)."""
    out: list[str] = []
    seen: set[str] = set()
    for pid in net.places:
        if pid in seen:
            out.append(f"duplicate node id {pid!r}")
        seen.add(pid)
    for tid in net.transitions:
        if tid in seen:
            out.append(f"id {tid!r} used by both a place and a transition" if tid in net.places else f"duplicate node id {tid!r}")
        seen.add(tid)

    for p in net.places.values():
        if p.kind not in PLACE_KINDS:
            out.append(f"place {p.id!r} has unknown kind {p.kind!r}")
        if p.kind == "resource" and p.attributes:
            out.append(f"resource place {p.id!r} must not declare attributes")
        for name, typ in p.attributes:
            if typ not in ATTR_TYPES:
                out.append(f"place {p.id!r} attribute {name!r} has unknown type {typ!r}")

    for src, tgt in net.flows:
        if not net.has_node(src) or not net.has_node(tgt):
            out.append(f"flow ({src!r}, {tgt!r}) references an unknown node")
            continue
        src_is_place = src in net.places
        tgt_is_place = tgt in net.places
        if src_is_place == tgt_is_place:
            out.append(f"flow ({src!r}, {tgt!r}) is not place/transition bipartite")

    for t in net.transitions.values():
        for prob in t.delay.problems():
            out.append(f"transition {t.id!r}: {prob}")
        if t.arrival_spec is not None:
            if preset(net, t.id):
                out.append(f"source transition {t.id!r} has a nonempty preset")
            if not t.is_task and t.guard is not None:
                out.append(f"non-task source {t.id!r} cannot carry a guard")
            for prob in t.arrival_spec.interarrival.problems():
                out.append(f"transition {t.id!r} interarrival: {prob}")
        elif not preset(net, t.id):
            out.append(
                f"transition {t.id!r} has an empty preset and no arrival_spec"
            )
        if t.guard is not None:
            for place_id, attr in t.guard.references():
                if place_id not in net.places:
                    out.append(f"guard of {t.id!r} references unknown place {place_id!r}")
                elif attr is not None and attr not in net.places[place_id].attr_names():
                    out.append(
                        f"guard of {t.id!r} references undeclared attribute "
                        f"{attr!r} of place {place_id!r}"
                    )

    for pid in net.initial_marking.places():
        if pid not in net.places:
            out.append(f"initial marking references unknown place {pid!r}")
            continue
        place = net.places[pid]
        for tok in net.initial_marking.tokens(pid):
            out.extend(
                f"initial token in {pid!r}: {prob}" for prob in token_problems(place, tok)
            )
    return out


def token_problems(place: Place, token: Token) -> list[str]:
    """Type-constraint violations of one token against its holding place."""
    out = []
    if place.kind in ("case", "resource") and not token.case_id:
        out.append(f"token in {place.kind} place has no identifier")
    if place.kind == "resource" and token.attrs:
        out.append("token in resource place carries attributes")
    declared = dict(place.attributes)
    for name, value in token.attrs.items():
        if name not in declared:
            out.append(f"attribute {name!r} is not declared by the place")
        elif declared[name] == "number" and not isinstance(value, (int, float)):
            out.append(f"attribute {name!r} should be numeric")
        elif declared[name] == "boolean" and not isinstance(value, bool):
            out.append(f"attribute {name!r} should be boolean")
    return out
