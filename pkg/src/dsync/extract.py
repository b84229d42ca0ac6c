"""Mining pattern constraints out of trained decision trees.

High-confidence False leaves (enough samples, low impurity) mark states in
which the guarded transition was held back. Tracing each such leaf to the
root collects the branch conditions that isolate those states; conditions
matching the pattern's violation template and decreasing impurity along the
path are kept, duplicates on the same feature resolved by the larger
impurity drop. The surviving violation atoms are negated into the
fire-permission constraint, which is only returned when the pattern's
required atom set is complete.

Violation directions per pattern: a high upstream/queue ratio or a pending
extremum token (priority), a full downstream place (blocking), too few
enabled tokens or a too-soon next token (hold-batch and choice).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

from .constraints import Atom, ConstraintExpr, FeatureRef
from .errors import DsyncError, ModelError
from .eventlog import Log
from .net import Net
from .patterns import (
    PatternCandidate,
    PatternKind,
    PatternTransitionLog,
    build_pt_log,
    detect_constructs,
)
from .replay import MatchReport, replay
from .tree import TreeNode, TreeParams, fit

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionParams:
    tau_s: int = 10  # minimum samples in a False leaf
    tau_g: float = 0.1  # maximum Gini impurity of a False leaf

    def check(self) -> None:
        if self.tau_s < 1:
            raise DsyncError("tau_s must be >= 1")
        if not 0.0 <= self.tau_g <= 0.5:
            raise DsyncError("tau_g must be within [0, 0.5]")


@dataclass(frozen=True)
class SplitAtom:
    """One branch-directed split condition from a root-to-leaf path."""

    feature: FeatureRef
    op: str  # "<=", ">", "=="
    threshold: Union[float, bool]
    delta_gini: float  # child-on-path Gini minus parent Gini (negative = purer)
    node_id: int

    def canonical(self) -> str:
        rhs = (
            ("true" if self.threshold else "false")
            if isinstance(self.threshold, bool)
            else f"{self.threshold:g}"
        )
        return f"{self.feature.canonical()} {self.op} {rhs}"


@dataclass(frozen=True)
class PatternConstraint:
    candidate: PatternCandidate
    expr: ConstraintExpr
    support: int  # False rows explained by the selected leaves
    provenance: tuple[SplitAtom, ...] = ()

    @property
    def t_g(self) -> str:
        return self.candidate.t_g

    @property
    def kind(self) -> PatternKind:
        return self.candidate.kind

    def describe(self) -> str:
        return f"{self.kind.value} on {self.t_g}: {self.expr.canonical()}"


def select_false_leaves(tree: TreeNode, p: ExtractionParams) -> list[TreeNode]:
    """Leaves predicting False with samples >= tau_s and Gini <= tau_g."""
    return [
        leaf
        for leaf in tree.leaves()
        if not leaf.prediction and leaf.samples >= p.tau_s and leaf.gini <= p.tau_g
    ]


_VIOLATION_TEMPLATE = {
    PatternKind.PRIORITY: (("ratio", ">"), ("attrenabled", "==")),
    PatternKind.BLOCKING: (("nrtokens", ">"),),
    PatternKind.HOLD_BATCH: (("nrtokensenabled", "<="), ("timeuntilnext", "<=")),
    PatternKind.CHOICE: (("timeuntilnext", "<="),),
}


def trace_and_filter(
    tree: TreeNode,
    leaf: TreeNode,
    kind: PatternKind,
    features: tuple[FeatureRef, ...],
) -> list[SplitAtom]:
    """Branch conditions on the path to ``leaf`` that match the violation
    template of ``kind`` and decrease Gini along the path."""
    path = tree.path_to(leaf)
    if path is None:
        raise DsyncError("leaf does not belong to the given tree")
    template = _VIOLATION_TEMPLATE[kind]
    atoms: list[SplitAtom] = []
    for node, taken in path:
        f_idx, threshold = node.split
        feature = features[f_idx]
        child = node.right if taken else node.left
        delta = child.gini - node.gini
        if delta >= 0:
            continue
        if feature.is_boolean:
            # encoded 0/1, split at 0.5: the taken branch (x <= 0.5) is == false
            op, value = "==", (not taken)
        else:
            op, value = ("<=", threshold) if taken else (">", threshold)
        for t_kind, t_op in template:
            if feature.kind == t_kind and op == t_op:
                atoms.append(SplitAtom(feature, op, value, delta, node.node_id))
                break
    return atoms


def merge_atoms(per_leaf: list[list[SplitAtom]]) -> list[SplitAtom]:
    """Deduplicate atoms on the same feature, keeping the largest |ΔGini|."""
    best: dict[str, SplitAtom] = {}
    for atoms in per_leaf:
        for atom in atoms:
            key = atom.feature.canonical()
            current = best.get(key)
            if current is None or abs(atom.delta_gini) > abs(current.delta_gini):
                best[key] = atom
    return sorted(best.values(), key=lambda a: a.feature.canonical())


def _best(atoms: list[SplitAtom], kind: str) -> Optional[SplitAtom]:
    matching = [a for a in atoms if a.feature.kind == kind]
    if not matching:
        return None
    return max(matching, key=lambda a: (abs(a.delta_gini), a.feature.canonical()))


def assemble_constraint(
    atoms: list[SplitAtom], c: PatternCandidate, support: int = 0
) -> Optional[PatternConstraint]:
    """Negate retained violation atoms into the fire-permission constraint.

    Returns None unless the pattern's required atoms were all discovered:
    priority needs the ratio and the enabled part, hold-batch needs both the
    count and the time part.
    """
    expr_atoms: list[Atom] = []
    used: list[SplitAtom] = []
    if c.kind == PatternKind.PRIORITY:
        ratio = _best(atoms, "ratio")
        enabled = _best(atoms, "attrenabled")
        if ratio is None or enabled is None:
            return None
        expr_atoms.append(Atom(ratio.feature, "<=", float(ratio.threshold)))
        # the enabled atom always normalizes to == true: the permission side
        # requires the extremum token to be available
        expr_atoms.append(Atom(enabled.feature, "==", True))
        used = [ratio, enabled]
    elif c.kind == PatternKind.BLOCKING:
        count = _best(atoms, "nrtokens")
        if count is None:
            return None
        expr_atoms.append(Atom(count.feature, "<=", float(count.threshold)))
        used = [count]
    elif c.kind == PatternKind.HOLD_BATCH:
        count = _best(atoms, "nrtokensenabled")
        until = _best(atoms, "timeuntilnext")
        if count is None or until is None:
            return None
        expr_atoms.append(Atom(count.feature, ">", float(count.threshold)))
        expr_atoms.append(Atom(until.feature, ">", float(until.threshold)))
        used = [count, until]
    elif c.kind == PatternKind.CHOICE:
        until = _best(atoms, "timeuntilnext")
        if until is None:
            return None
        expr_atoms.append(Atom(until.feature, ">", float(until.threshold)))
        used = [until]
    else:
        raise DsyncError(f"unknown pattern kind {c.kind!r}")
    return PatternConstraint(c, ConstraintExpr(tuple(expr_atoms)), support, tuple(used))


@dataclass
class CandidateResult:
    candidate: PatternCandidate
    ptlog: Optional[PatternTransitionLog] = None
    tree: Optional[TreeNode] = None
    constraint: Optional[PatternConstraint] = None
    skip_reason: Optional[str] = None


@dataclass
class DiscoveryRun:
    constraints: list[PatternConstraint]
    results: list[CandidateResult]
    samples: int
    match_report: MatchReport
    tree_params: TreeParams = field(default_factory=TreeParams)
    extraction_params: ExtractionParams = field(default_factory=ExtractionParams)


def discover_run(
    log_data: Log,
    net: Net,
    tree_params: TreeParams = TreeParams(),
    extraction_params: ExtractionParams = ExtractionParams(),
) -> DiscoveryRun:
    """Full pipeline: replay, detect constructs, mine each candidate."""
    extraction_params.check()
    tree_params.check()
    samples, report = replay(log_data, net)
    results: list[CandidateResult] = []
    for c in detect_constructs(net):
        res = CandidateResult(c)
        results.append(res)
        ptlog = build_pt_log(net, c, samples)
        res.ptlog = ptlog
        n_false, n_true = ptlog.label_counts()
        if len(ptlog.rows) < extraction_params.tau_s:
            res.skip_reason = f"only {len(ptlog.rows)} rows (tau_s={extraction_params.tau_s})"
            log.info("skip %s: %s", c.describe(), res.skip_reason)
            continue
        if n_false == 0 or n_true == 0:
            res.skip_reason = f"single-class log ({n_false} false / {n_true} true)"
            log.info("skip %s: %s", c.describe(), res.skip_reason)
            continue
        tree = fit(ptlog.matrix(), ptlog.labels(), tree_params)
        res.tree = tree
        leaves = select_false_leaves(tree, extraction_params)
        if not leaves:
            res.skip_reason = "no qualifying false leaf"
            log.info("skip %s: %s", c.describe(), res.skip_reason)
            continue
        atoms = merge_atoms(
            [trace_and_filter(tree, leaf, c.kind, ptlog.features) for leaf in leaves]
        )
        support = sum(leaf.class_counts[0] for leaf in leaves)
        constraint = assemble_constraint(atoms, c, support)
        if constraint is None:
            res.skip_reason = "violation template not covered"
            log.info("skip %s: %s", c.describe(), res.skip_reason)
            continue
        res.constraint = constraint
        log.info("mined %s", constraint.describe())

    constraints = _dedup([r.constraint for r in results if r.constraint is not None])
    return DiscoveryRun(
        constraints, results, len(samples), report, tree_params, extraction_params
    )


def _dedup(constraints: list[PatternConstraint]) -> list[PatternConstraint]:
    """Keep one constraint per transition, the one explaining the most
    held-back rows.

    All candidates of one transition are trained on the same labeled
    moments, so their supports are directly comparable; a pattern that
    accounts for a handful of those moments while another accounts for
    nearly all of them is a shadow of the stronger one. Overlapping
    patterns on a single transition are out of scope.
    """
    best: dict[str, PatternConstraint] = {}
    for pc in constraints:
        current = best.get(pc.t_g)
        if (
            current is None
            or pc.support > current.support
            or (pc.support == current.support and pc.kind.value < current.kind.value)
        ):
            best[pc.t_g] = pc
    return sorted(best.values(), key=lambda pc: (pc.t_g, pc.kind.value))


def discover(
    log_data: Log,
    net: Net,
    tree_params: TreeParams = TreeParams(),
    extraction_params: ExtractionParams = ExtractionParams(),
) -> list[PatternConstraint]:
    return discover_run(log_data, net, tree_params, extraction_params).constraints


def annotate_net(net: Net, constraints: list[PatternConstraint]) -> Net:
    """Copy of the net with discovered constraints installed as guards.

    Constraints for the same transition are conjoined; a targeted
    transition's previous guard is replaced.
    """
    from .net import validate_net

    guards: dict[str, ConstraintExpr] = {}
    for pc in constraints:
        if pc.t_g not in net.transitions:
            raise ModelError(f"constraint targets unknown transition {pc.t_g!r}")
        if pc.t_g in guards:
            guards[pc.t_g] = guards[pc.t_g].conjoin(pc.expr)
        else:
            guards[pc.t_g] = pc.expr
    if not guards:
        return net
    annotated = net.with_guards(guards)
    problems = validate_net(annotated)
    if problems:
        raise ModelError("annotated net is invalid: " + "; ".join(problems))
    return annotated
