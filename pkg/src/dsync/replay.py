"""Replays an event log over a net via log moves.

Every event is executed as a log move at its start time: the binding with
the highest similarity to the event is consumed and the produced tokens
become available at the event's completion time. One state sample is
emitted per distinct start time; it captures the marking both before and
after that timestamp's moves, because a transition that fired is observed
in the state it fired from, while a transition that was passed over is
observed in the state that remained after everything else happened.

Guard checks are off by default: the discovery input is the unguarded
process model, and moves apply in log order. With ``check_guards`` on (the
replayability check) each move must also satisfy its transition's guard at
the moment it applies; since several moves can share a start time, the
replayer searches for an order of the simultaneous moves under which every
guard holds, mirroring whatever micro-order produced the log.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import ReplayError
from .eventlog import Event, Log
from .net import Binding, Marking, Net, Token, enabled_bindings, fire, preset

# timestamp groups larger than this skip the order search (greedy only)
MAX_SEARCH_GROUP = 8


@dataclass(frozen=True)
class StateSample:
    """State observed at one distinct event start time.

    ``before``/``after`` bracket the timestamp's log moves. ``at_fire`` maps
    each transition that started here to the marking just before its own
    (first) move: the state it actually fired from, with same-instant moves
    ordered downstream-first like the simulator's FIFO policy resolves them.
    """

    time: float
    before: Marking
    after: Marking
    fired: frozenset[str]
    at_fire: Mapping[str, Marking] = field(default_factory=dict)
    repaired: bool = False


@dataclass
class MatchReport:
    matched: int = 0
    unmatched: list[tuple[Event, str]] = field(default_factory=list)
    stats: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.matched + len(self.unmatched)

    @property
    def match_rate(self) -> float:
        return self.matched / self.total if self.total else 1.0


NEVER = (0, -1, -1, float("-inf"), float("-inf"))


def sim_score(net: Net, t_id: str, binding: Binding, e: Event) -> tuple:
    """Similarity of a binding to an event, higher is better.

    Lexicographic components: case-id match (mandatory; a miss scores below
    everything), resource match when both sides name one, preference for a
    case token available at or before the event start, closeness of that
    token's availability to the start, and closeness of the attributes.
    Transitions without case inputs match any binding.
    """
    case_places = net.case_inputs(t_id)
    case_token: Optional[Token] = None
    for p in case_places:
        tok = binding.get(p)
        if tok is not None and tok.case_id == e.case_id:
            case_token = tok
            break
    if case_places and case_token is None:
        return NEVER

    resource_match = 0
    if e.resource:
        for p in net.resource_inputs(t_id):
            tok = binding.get(p)
            if tok is not None and tok.case_id == e.resource:
                resource_match = 1
                break

    if case_token is None:
        leq, closeness = 1, 0.0
    else:
        leq = 1 if case_token.available_at <= e.start else 0
        closeness = -abs(case_token.available_at - e.start)

    attr_dist = 0.0
    if case_token is not None:
        for name, value in e.attrs.items():
            have = case_token.attrs.get(name)
            if have is None:
                continue
            if (
                isinstance(value, (int, float))
                and not isinstance(value, bool)
                and isinstance(have, (int, float))
            ):
                attr_dist += abs(float(have) - float(value))
            elif have != value:
                attr_dist += 1.0
    return (1, resource_match, leq, closeness, -attr_dist)


def _best_move(
    net: Net, marking: Marking, e: Event, tau: float, check_guards: bool
) -> Optional[Binding]:
    """Best case-matching (and, when checking, guard-satisfying) binding."""
    t = net.transitions[e.label]
    bindings = enabled_bindings(net, marking, e.label, tau, check_guards=False)
    if check_guards and t.guard is not None:
        if not t.guard.holds(marking, tau):
            return None
        bindings = [y for y in bindings if t.guard.binding_ok(marking, tau, y)]
    best: Optional[tuple[tuple, int, Binding]] = None
    for i, y in enumerate(bindings):
        score = sim_score(net, e.label, y, e)
        if score[0] != 1:
            continue
        if best is None or (score, -i) > (best[0], -best[1]):
            best = (score, i, y)
    return best[2] if best else None


def _apply(net: Net, marking: Marking, e: Event, binding: Binding, tau: float) -> Marking:
    return fire(
        net,
        marking,
        e.label,
        binding,
        tau,
        delay_override=e.complete - e.start,
        produced_case=(e.case_id, dict(e.attrs)),
    )


def _search_order(
    net: Net, marking: Marking, events: list[Event], tau: float
) -> Optional[tuple[Marking, list[Event]]]:
    """An order of same-instant moves under which every guard holds."""
    if not events:
        return marking, []
    for i, e in enumerate(events):
        binding = _best_move(net, marking, e, tau, check_guards=True)
        if binding is None:
            continue
        rest = events[:i] + events[i + 1 :]
        sub = _search_order(net, _apply(net, marking, e, binding, tau), rest, tau)
        if sub is not None:
            return sub[0], [e] + sub[1]
    return None


def _first_case_input(net: Net, t_id: str) -> Optional[str]:
    places = net.case_inputs(t_id)
    return places[0] if places else None


def replay(
    log: Log, net: Net, check_guards: bool = False
) -> tuple[list[StateSample], MatchReport]:
    """Execute all log moves; returns the sample sequence and a match report.

    Events with no enabled (or, when checking, guard-satisfying) binding are
    recorded as unmatched and skipped; the marking is repaired by injecting
    the event's case token into the transition's case input place so later
    moves of the same case still line up. Samples at repaired timestamps are
    flagged and excluded from pattern mining.
    """
    for label in sorted({e.label for e in log.events}):
        if label not in net.transitions or not net.transitions[label].is_task:
            raise ReplayError(f"log label {label!r} is not a task transition of the net")

    marking = net.initial_marking
    injections = _arrival_plan(log, net)
    inject_idx = 0

    groups: dict[float, list[Event]] = {}
    for e in log.events:  # already in global order
        groups.setdefault(e.start, []).append(e)

    samples: list[StateSample] = []
    report = MatchReport()
    gap_sum, gap_n = 0.0, 0

    for tau in sorted(groups):
        while inject_idx < len(injections) and injections[inject_idx][0] <= tau:
            _, place_id, token = injections[inject_idx]
            marking = marking.with_added(place_id, token)
            inject_idx += 1

        before = marking
        group = groups[tau]
        repaired_here = False

        def applied_ok(e: Event, binding: Binding) -> None:
            nonlocal gap_sum, gap_n
            report.matched += 1
            for p in net.case_inputs(e.label):
                tok = binding.get(p)
                if tok is not None and tok.case_id == e.case_id:
                    gap_sum += abs(tok.available_at - e.start)
                    gap_n += 1
                    break

        def record_unmatched(e: Event) -> None:
            nonlocal marking, repaired_here
            t = net.transitions[e.label]
            reason = "no binding"
            if check_guards and t.guard is not None and _best_move(
                net, marking, e, tau, check_guards=False
            ):
                reason = "guard not satisfied"
            report.unmatched.append((e, reason))
            repaired_here = True
            place_id = _first_case_input(net, e.label)
            if place_id is not None:
                place = net.place(place_id)
                attrs = {k: v for k, v in e.attrs.items() if k in place.attr_names()}
                marking = marking.with_added(place_id, Token(e.case_id, attrs, tau))

        at_fire: dict[str, Marking] = {}
        if not check_guards:
            # downstream moves first (the order the FIFO policy fires them);
            # ties fall back to log order
            ordered = sorted(
                range(len(group)),
                key=lambda i: (-net.flow_depth(group[i].label), i),
            )
            deferred: list[int] = []
            for i in ordered:
                e = group[i]
                binding = _best_move(net, marking, e, tau, check_guards=False)
                if binding is None:
                    deferred.append(i)
                    continue
                at_fire.setdefault(e.label, marking)
                marking = _apply(net, marking, e, binding, tau)
                applied_ok(e, binding)
            for i in deferred:  # retry once: a same-instant producer may have run
                e = group[i]
                binding = _best_move(net, marking, e, tau, check_guards=False)
                if binding is None:
                    record_unmatched(e)
                    continue
                at_fire.setdefault(e.label, marking)
                marking = _apply(net, marking, e, binding, tau)
                applied_ok(e, binding)
        else:
            ordered = group
            if 1 < len(group) <= MAX_SEARCH_GROUP:
                found = _search_order(net, marking, group, tau)
                if found is not None:
                    ordered = found[1]
            pending = list(ordered)
            progress = True
            while pending and progress:
                progress = False
                for e in list(pending):
                    binding = _best_move(net, marking, e, tau, check_guards=True)
                    if binding is None:
                        continue
                    at_fire.setdefault(e.label, marking)
                    marking = _apply(net, marking, e, binding, tau)
                    pending.remove(e)
                    applied_ok(e, binding)
                    progress = True
            for e in pending:
                record_unmatched(e)

        samples.append(
            StateSample(
                time=tau,
                before=before,
                after=marking,
                fired=frozenset(e.label for e in group),
                at_fire=at_fire,
                repaired=repaired_here,
            )
        )

    report.stats = {
        "events": float(report.total),
        "match_rate": report.match_rate,
        "mean_start_gap": (gap_sum / gap_n) if gap_n else 0.0,
    }
    return samples, report


def _arrival_plan(log: Log, net: Net) -> list[tuple[float, str, Token]]:
    """Reconstruct non-task source injections from first-event times.

    Mirrors the simulator's one-ahead behaviour: case k+1 enters the source's
    output place the moment case k becomes available, so upcoming cases are
    visible as pending tokens one interarrival early.
    """
    sources = [
        t for t in net.transitions.values() if t.arrival_spec is not None and not t.is_task
    ]
    if not sources:
        return []

    first_events: dict[str, Event] = {}
    for e in log.events:
        current = first_events.get(e.case_id)
        if current is None or (e.start, e.complete) < (current.start, current.complete):
            first_events[e.case_id] = e

    plan: list[tuple[float, str, Token]] = []
    claimed: set[str] = set()
    for src in sorted(sources, key=lambda t: t.id):
        out_places = [p for p in net._postset[src.id] if net.places[p].kind == "case"]
        if not out_places:
            continue
        out = out_places[0]
        cases = []
        for case_id, e in first_events.items():
            if case_id in claimed:
                continue
            if out in preset(net, e.label):
                cases.append((e.start, case_id, e))
        cases.sort(key=lambda item: (item[0], item[1]))
        place = net.places[out]
        for i, (avail, case_id, e) in enumerate(cases):
            claimed.add(case_id)
            inject_at = cases[i - 1][0] if i > 0 else float("-inf")
            attrs = {k: v for k, v in e.attrs.items() if k in place.attr_names()}
            plan.append((inject_at, out, Token(case_id, attrs, avail)))
    plan.sort(key=lambda item: (item[0], item[1], item[2].case_id or ""))
    return plan
