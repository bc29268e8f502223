"""Cut-off decisions by implication between constraints on cuts.

A configuration C with cut B reaches the markings described by ``Constr(C)``: the label of every
cut condition is a free variable, everything else is existentially closed.  ``M(C)`` is contained in
the union of the ``M(C_i)`` iff ``Constr(C)`` implies the disjunction of the ``Constr(C_i)`` whose
cut labels equal those of C.
"""
from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Optional, Sequence

from . import guards as G
from .branching import BranchingProcess
from .guards import Expr

log = logging.getLogger(__name__)


def predb(bp: BranchingProcess, b: int, internal: bool = False) -> Expr:
    """pred(e(b)) and the label variable h(b) equal to var(b) of the producer."""
    c = bp.conditions[b]
    return G.and_(bp.pred(c.event, internal), G.eq(G.Var(c.place), G.Var(bp.cond_var(b, internal))))


def _close(body: Expr, labels: Iterable[str]) -> Expr:
    body = G.simplify(body)
    bound = sorted(G.free_vars(body) - set(labels))
    return G.simplify(G.exists(bound, body)) if bound else body


def cut_constraint(bp: BranchingProcess, conds: Sequence[int], internal: bool = False) -> Expr:
    """Constr(B') for a co-set: conjunction of predb, closed over all non-label variables."""
    labels = [bp.conditions[b].place for b in conds]
    return _close(G.and_(*[predb(bp, b, internal) for b in conds]), labels)


def config_body(bp: BranchingProcess, C: Iterable[int], internal: bool = False) -> Expr:
    """pred(C) with the label equations of cut(C); the open form of ``config_constraint``."""
    C = set(C)
    eqs = [G.eq(G.Var(bp.conditions[b].place), G.Var(bp.cond_var(b, internal))) for b in sorted(bp.cut(C))]
    return G.and_(bp.config_pred(C, internal), *eqs)


def config_constraint(bp: BranchingProcess, C: Iterable[int], internal: bool = False) -> Expr:
    """Constraint describing M(C).

    Unlike ``cut_constraint(cut(C))`` this keeps the local predicates of events whose output
    conditions are all consumed inside C, so it is exact even when such an event constrains a
    colour still present in the cut only through an earlier variable.
    """
    C = set(C)
    return _close(config_body(bp, C, internal), bp.cut_labels(bp.cut(C)))


def covered(bp: BranchingProcess, C: Iterable[int], refs: Sequence[Iterable[int]], solver,
            internal: bool = False) -> Optional[bool]:
    """Does M(C) lie in the union of M(R) for R in refs?  None when the solver gave up."""
    C = set(C)
    if not refs:
        return False
    lhs = config_body(bp, C, internal)
    rhs = G.or_(*[config_constraint(bp, R, internal) for R in refs])
    verdict = solver.implies(lhs, rhs)
    if log.isEnabledFor(logging.DEBUG):
        log.debug("cut-off query %s => %s : %s", G.show(lhs), G.show(rhs), verdict)
    return verdict


def cone_references(bp: BranchingProcess, e: int, include_initial: bool = True) -> List[frozenset]:
    """Cones of non-cut-off events that are smaller than the cone of ``e`` and end in a cut with
    the same labels; the empty configuration stands for the initial markings."""
    ev = bp.events[e]
    labels = bp.cut_labels(bp.cut(ev.cone))
    out = []
    if include_initial and bp.cut_labels(bp.b0) == labels:
        out.append(frozenset())
    for f in bp.events:
        if f.id == e or f.cutoff or not f.key < ev.key:
            continue
        if bp.cut_labels(bp.cut(f.cone)) == labels:
            out.append(f.cone)
    return out


def config_references(bp: BranchingProcess, e: int, configs: Optional[Iterable[frozenset]] = None,
                      include_initial: bool = True) -> List[frozenset]:
    """All structural configurations of non-cut-off events that are smaller than the cone of ``e``
    and have the same cut labels."""
    ev = bp.events[e]
    labels = bp.cut_labels(bp.cut(ev.cone))
    if configs is None:
        pool = [f.id for f in bp.events if not f.cutoff and f.id != e]
        configs = bp.configurations(max_size=len(ev.cone), events=pool)
    out = []
    for C in configs:
        if e in C or (not C and not include_initial):
            continue
        if len(C) > len(ev.cone) or not bp.key_of(C) < ev.key:
            continue
        if bp.cut_labels(bp.cut(C)) == labels:
            out.append(C)
    return out


def is_cutoff(bp: BranchingProcess, e: int, solver, internal: bool = False,
              include_initial: bool = True) -> bool:
    refs = cone_references(bp, e, include_initial)
    return covered(bp, bp.events[e].cone, refs, solver, internal) is True


def is_cutoff_star(bp: BranchingProcess, e: int, solver, internal: bool = False,
                   include_initial: bool = True, configs=None) -> bool:
    refs = config_references(bp, e, configs, include_initial)
    return covered(bp, bp.events[e].cone, refs, solver, internal) is True


class ReferenceIndex:
    """Per cut-label multiset: reference constraints of the prefix so far, in insertion order."""

    def __init__(self):
        self.by_labels: Dict[tuple, List[tuple]] = {}

    def add(self, labels: tuple, key: tuple, constraint: Expr, config: frozenset):
        self.by_labels.setdefault(labels, []).append((key, constraint, config))

    def smaller(self, labels: tuple, key: tuple) -> List[tuple]:
        return [r for r in self.by_labels.get(labels, ()) if r[0] < key]
