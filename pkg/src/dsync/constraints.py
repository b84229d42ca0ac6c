"""Constraint expression language over marking-level features.

A constraint is a conjunction of atoms, each comparing one feature of the
current marking against a constant. The same small language serves two
roles: ground-truth guards injected into simulation models and the output
form of discovered constraints.

Grammar::

    expr    := atom ("and" atom)*
    atom    := feature op const
    feature := kind "(" place ["," attr] ["," agg] ")"
             | "ratio" "(" feature "," feature ")"
    op      := "<=" | "<" | ">=" | ">" | "=="
    const   := number | "true" | "false"

Feature kinds: ``attrval`` and ``attrenabled`` take (place, attr, agg) with
agg in {max, min}; ``nrtokens``, ``nrtokensenabled`` and ``timeuntilnext``
take a place; ``ratio`` composes two attrval features.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Optional, Union

from .errors import ConstraintEvalError, ConstraintSyntaxError

if TYPE_CHECKING:
    from .net import Binding, Marking

# Pending tokens further away than this are reported as "no token coming";
# finite so decision trees can still split on the value.
NO_PENDING_SENTINEL = 1e9

# Denominator floor for ratio features, avoiding division by zero when a
# place is empty or its extremum attribute value is 0.
RATIO_EPSILON = 0.01

KINDS_WITH_ATTR = ("attrval", "attrenabled")
KINDS_PLACE_ONLY = ("nrtokens", "nrtokensenabled", "timeuntilnext")
AGGS = ("max", "min")
OPS = ("<=", "<", ">=", ">", "==")


@dataclass(frozen=True)
class FeatureRef:
    """Reference to one extractable feature of a marking."""

    kind: str
    place: str = ""
    attr: Optional[str] = None
    agg: Optional[str] = None
    num: Optional["FeatureRef"] = None  # ratio numerator
    den: Optional["FeatureRef"] = None  # ratio denominator

    @staticmethod
    def attrval(place: str, attr: str, agg: str) -> "FeatureRef":
        return FeatureRef("attrval", place, attr, agg)

    @staticmethod
    def attrenabled(place: str, attr: str, agg: str) -> "FeatureRef":
        return FeatureRef("attrenabled", place, attr, agg)

    @staticmethod
    def nrtokens(place: str) -> "FeatureRef":
        return FeatureRef("nrtokens", place)

    @staticmethod
    def nrtokensenabled(place: str) -> "FeatureRef":
        return FeatureRef("nrtokensenabled", place)

    @staticmethod
    def timeuntilnext(place: str) -> "FeatureRef":
        return FeatureRef("timeuntilnext", place)

    @staticmethod
    def ratio(num: "FeatureRef", den: "FeatureRef") -> "FeatureRef":
        return FeatureRef("ratio", num=num, den=den)

    @property
    def is_boolean(self) -> bool:
        return self.kind == "attrenabled"

    def canonical(self) -> str:
        if self.kind == "ratio":
            return f"ratio({self.num.canonical()}, {self.den.canonical()})"
        if self.kind in KINDS_WITH_ATTR:
            return f"{self.kind}({self.place}, {self.attr}, {self.agg})"
        return f"{self.kind}({self.place})"

    def references(self) -> Iterator[tuple[str, Optional[str]]]:
        if self.kind == "ratio":
            yield from self.num.references()
            yield from self.den.references()
        else:
            yield (self.place, self.attr)

    def __str__(self) -> str:
        return self.canonical()


@dataclass(frozen=True)
class Atom:
    feature: FeatureRef
    op: str
    const: Union[float, bool]

    def canonical(self) -> str:
        if isinstance(self.const, bool):
            rhs = "true" if self.const else "false"
        else:
            rhs = f"{self.const:g}"
        return f"{self.feature.canonical()} {self.op} {rhs}"

    def holds(self, m: "Marking", now: float) -> bool:
        value = eval_feature(self.feature, m, now)
        if self.op == "==":
            return value == self.const
        if self.op == "<=":
            return value <= self.const
        if self.op == "<":
            return value < self.const
        if self.op == ">=":
            return value >= self.const
        if self.op == ">":
            return value > self.const
        raise ConstraintEvalError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class ConstraintExpr:
    """Conjunction of atoms; the empty conjunction is vacuously true."""

    atoms: tuple[Atom, ...]

    def holds(self, m: "Marking", now: float) -> bool:
        return all(atom.holds(m, now) for atom in self.atoms)

    def binding_ok(self, m: "Marking", now: float, binding: "Binding") -> bool:
        """Binding-level strengthening used by the simulator.

        ``attrenabled(p, a, agg) == true`` atoms over a place the binding
        consumes from additionally pin the chosen token: it must attain the
        aggregate value. That is what routes the extremum case (and not an
        arbitrary enabled one) through the guarded transition.
        """
        for atom in self.atoms:
            f = atom.feature
            if f.kind != "attrenabled" or atom.op != "==" or atom.const is not True:
                continue
            if f.place not in binding:
                continue
            extremum = _attr_extremum(m, f.place, f.attr, f.agg)
            if extremum is None:
                return False
            chosen = binding[f.place].attrs.get(f.attr)
            if chosen != extremum:
                return False
        return True

    def conjoin(self, other: "ConstraintExpr") -> "ConstraintExpr":
        return ConstraintExpr(self.atoms + other.atoms)

    def references(self) -> Iterator[tuple[str, Optional[str]]]:
        for atom in self.atoms:
            yield from atom.feature.references()

    def canonical(self) -> str:
        return " and ".join(atom.canonical() for atom in self.atoms)

    def __str__(self) -> str:
        return self.canonical()


# -- feature evaluation ------------------------------------------------------


def _tokens_with_attr(m: "Marking", place: str, attr: Optional[str]):
    for tok in m.tokens(place):
        if attr is None or attr in tok.attrs:
            yield tok


def _attr_extremum(m: "Marking", place: str, attr: str, agg: str):
    values = [tok.attrs[attr] for tok in _tokens_with_attr(m, place, attr)]
    if not values:
        return None
    return max(values) if agg == "max" else min(values)


def eval_feature(f: FeatureRef, m: "Marking", now: float) -> Union[float, bool]:
    """Evaluate one feature on a marking at a moment in time.

    Attribute aggregates range over both enabled and pending tokens;
    ``attrenabled`` reports whether a token attaining the aggregate is
    already available. An attribute aggregate over an empty place is 0 (and
    its enabled flag false) so guards stay evaluable before warm-up.
    """
    if f.kind == "attrval":
        extremum = _attr_extremum(m, f.place, f.attr, f.agg)
        return 0.0 if extremum is None else float(extremum)
    if f.kind == "attrenabled":
        extremum = _attr_extremum(m, f.place, f.attr, f.agg)
        if extremum is None:
            return False
        return any(
            tok.available_at <= now
            for tok in _tokens_with_attr(m, f.place, f.attr)
            if tok.attrs[f.attr] == extremum
        )
    if f.kind == "nrtokens":
        return float(len(m.tokens(f.place)))
    if f.kind == "nrtokensenabled":
        return float(sum(1 for tok in m.tokens(f.place) if tok.available_at <= now))
    if f.kind == "timeuntilnext":
        pending = [tok.available_at - now for tok in m.tokens(f.place) if tok.available_at > now]
        return min(pending) if pending else NO_PENDING_SENTINEL
    if f.kind == "ratio":
        num = eval_feature(f.num, m, now)
        den = eval_feature(f.den, m, now)
        return num / max(den, RATIO_EPSILON)
    raise ConstraintEvalError(f"unknown feature kind {f.kind!r}")


def eval_constraint(c: ConstraintExpr, m: "Marking", now: float) -> bool:
    return c.holds(m, now)


# -- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|<|>)"
    r"|(?P<punct>[(),]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str) -> ConstraintSyntaxError:
        return ConstraintSyntaxError(message, self.pos)

    def peek(self) -> Optional[tuple[str, str, int]]:
        if self.pos >= len(self.text):
            return None
        match = _TOKEN_RE.match(self.text, self.pos)
        if match is None or not match.group().strip():
            rest = self.text[self.pos :].strip()
            if not rest:
                return None
            raise self.error(f"unexpected character {rest[0]!r}")
        for group in ("num", "ident", "op", "punct"):
            if match.group(group) is not None:
                return (group, match.group(group), match.end())
        return None

    def next(self, expect_kind: Optional[str] = None, expect_value: Optional[str] = None):
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        kind, value, end = tok
        if expect_kind is not None and kind != expect_kind:
            raise self.error(f"expected {expect_kind}, found {value!r}")
        if expect_value is not None and value != expect_value:
            raise self.error(f"expected {expect_value!r}, found {value!r}")
        self.pos = end
        return kind, value

    def parse_expr(self) -> ConstraintExpr:
        atoms = [self.parse_atom()]
        while True:
            tok = self.peek()
            if tok is None:
                break
            kind, value, _ = tok
            if kind == "ident" and value.lower() == "and":
                self.next()
                atoms.append(self.parse_atom())
            else:
                raise self.error(f"expected 'and' or end of input, found {value!r}")
        return ConstraintExpr(tuple(atoms))

    def parse_atom(self) -> Atom:
        feature = self.parse_feature()
        _, op = self.next("op")
        tok = self.peek()
        if tok is None:
            raise self.error("expected a constant after operator")
        kind, value, _ = tok
        const: Union[float, bool]
        if kind == "num":
            self.next()
            const = float(value)
        elif kind == "ident" and value.lower() in ("true", "false"):
            self.next()
            const = value.lower() == "true"
        else:
            raise self.error(f"expected a number or true/false, found {value!r}")
        if feature.is_boolean:
            if op != "==" or not isinstance(const, bool):
                raise self.error("boolean features compare only with == true/false")
        elif isinstance(const, bool):
            raise self.error("numeric features cannot be compared against booleans")
        return Atom(feature, op, const)

    def parse_feature(self) -> FeatureRef:
        _, name = self.next("ident")
        name = name.lower()
        self.next("punct", "(")
        if name == "ratio":
            num = self.parse_feature()
            self.next("punct", ",")
            den = self.parse_feature()
            self.next("punct", ")")
            if num.kind != "attrval" or den.kind != "attrval":
                raise self.error("ratio composes exactly two attrval features")
            return FeatureRef.ratio(num, den)
        if name in KINDS_WITH_ATTR:
            _, place = self.next("ident")
            self.next("punct", ",")
            _, attr = self.next("ident")
            self.next("punct", ",")
            _, agg = self.next("ident")
            if agg.lower() not in AGGS:
                raise self.error(f"aggregate must be max or min, found {agg!r}")
            self.next("punct", ")")
            return FeatureRef(name, place, attr, agg.lower())
        if name in KINDS_PLACE_ONLY:
            _, place = self.next("ident")
            self.next("punct", ")")
            return FeatureRef(name, place)
        raise self.error(f"unknown feature kind {name!r}")


def parse_constraint(text: str) -> ConstraintExpr:
    """Parse constraint text; raises ConstraintSyntaxError with the offset."""
    parser = _Parser(text)
    if parser.peek() is None:
        raise parser.error("empty constraint")
    return parser.parse_expr()
