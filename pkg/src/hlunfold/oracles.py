"""Enumerative oracles for finite instances.

Everything here walks instantiated configurations explicitly, independently of the symbolic
cut-off machinery, so it can be used to check the unfolder.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set, Tuple

from . import guards as G
from .branching import BOTTOM, BranchingProcess, event_var
from .expansion import PTNet, expand, marking_correspondence, mode_str, place_name, pt_enabled, pt_reachable
from .net import HLNet, Marking, enabled_modes, reachable_markings
from .solver import enumerate_models
from .unfolder import PTProcess


# ---------------------------------------------------------------------------
# symbolic prefixes

def instantiated_configurations(bp: BranchingProcess, domain=None, events=None) -> Iterator[Tuple[frozenset, dict]]:
    """All pairs (C, iota) with C a configuration of ``bp`` and iota an instantiation of it.

    Events are added in increasing id order, which is compatible with causality, so every pair is
    produced exactly once.  ``events`` restricts the pool (e.g. to non-cut-off events).
    """
    domain = domain or bp.net.domain
    pool = sorted(range(len(bp.events)) if events is None else events)
    b0_vars = [bp.conditions[b].ovar for b in bp.b0]
    starts = enumerate_models(bp.pred_bottom, domain, variables=b0_vars) if b0_vars else [{}]

    def modes(e, iota):
        ev = bp.events[e]
        t = bp.transition(ev.transition)
        fixed = {}
        for (b, v) in ev.preset:
            val = iota[bp.conditions[b].ovar]
            if v in fixed and fixed[v] != val:
                return []
            fixed[v] = val
        g = G.substitute(t.guard, fixed)
        free = [v for v in t.vars if v not in fixed]
        if not free:
            return [fixed] if G.evaluate(g, fixed) else []
        out = []
        for a in enumerate_models(g, domain, variables=free):
            s = dict(fixed)
            s.update(a)
            out.append(s)
        return out

    def rec(i, C, cut, iota):
        yield frozenset(C), iota
        for j in range(i, len(pool)):
            e = pool[j]
            ev = bp.events[e]
            pre = [b for b, _ in ev.preset]
            if not all(b in cut for b in pre):
                continue
            for s in modes(e, iota):
                iota2 = dict(iota)
                for v, c in s.items():
                    iota2[event_var(v, e)] = c
                cut2 = (cut - set(pre)) | {b for b, _ in ev.postset}
                C.append(e)
                yield from rec(j + 1, C, cut2, iota2)
                C.pop()

    for iota in starts:
        yield from rec(0, [], frozenset(bp.b0), dict(iota))


def mark_of(bp: BranchingProcess, C, iota) -> Marking:
    return bp.mark(C, iota)


def prefix_markings(bp: BranchingProcess, domain=None, events=None) -> Set[Marking]:
    return {bp.mark(C, i) for C, i in instantiated_configurations(bp, domain, events)}


def _extension_exists(bp: BranchingProcess, C, iota, t, sigma) -> bool:
    cut = bp.cut(C)
    for e in (ev for ev in bp.events if ev.transition == t.name):
        if not all(b in cut for b, _ in e.preset):
            continue
        # input arc variables must pick up the colours of the consumed conditions
        if all(iota[bp.conditions[b].ovar] == sigma[v] for b, v in e.preset):
            return True
    return False


@dataclass
class CompletenessReport:
    reachable: int = 0
    missing: List[Marking] = field(default_factory=list)          # clause i fails
    unextended: List[Marking] = field(default_factory=list)       # clause i holds, clause ii fails
    non_cutoff: int = 0

    @property
    def complete(self) -> bool:
        return not self.missing and not self.unextended


def check_completeness(bp: BranchingProcess, net: Optional[HLNet] = None, domain=None) -> CompletenessReport:
    """Complete-prefix check by exhaustive enumeration (finite nets only)."""
    net = net or bp.net
    reach = reachable_markings(net).markings
    witnesses: Dict[Marking, List[tuple]] = defaultdict(list)
    for C, iota in instantiated_configurations(bp, domain):
        witnesses[bp.mark(C, iota)].append((C, iota))
    rep = CompletenessReport(len(reach), non_cutoff=sum(1 for e in bp.events if not e.cutoff))
    for M in sorted(reach, key=repr):
        ws = witnesses.get(M)
        if not ws:
            rep.missing.append(M)
            continue
        enabled = [(t, s) for t in net.transitions for s in enabled_modes(net, M, t)]
        if not any(all(_extension_exists(bp, C, iota, t, s) for t, s in enabled) for C, iota in ws):
            rep.unextended.append(M)
    return rep


def check_marking_representation(bp: BranchingProcess, net: Optional[HLNet] = None, domain=None, max_depth=None) -> bool:
    """Markings of instantiated configurations are exactly the reachable markings.

    For an unfolding truncated at causal depth ``max_depth`` only inclusions hold: everything
    reachable in at most ``max_depth`` steps is represented, and nothing unreachable is."""
    net = net or bp.net
    marks = prefix_markings(bp, domain)
    reach = set(reachable_markings(net).markings)
    if max_depth is None:
        return marks == reach
    short = set(reachable_markings(net, step_bound=max_depth).markings)
    return short <= marks <= reach


def check_extension_property(bp: BranchingProcess, max_depth: int, net: Optional[HLNet] = None, domain=None) -> List[tuple]:
    """For every instantiated configuration whose events are all shallower than ``max_depth``:
    (t, sigma) is enabled at its marking iff some event labelled t fires in sigma from its cut.
    Returns the violations."""
    net = net or bp.net
    bad = []
    for C, iota in instantiated_configurations(bp, domain):
        if any(bp.events[e].depth >= max_depth for e in C):
            continue
        M = bp.mark(C, iota)
        for t in net.transitions:
            enabled = {tuple(sorted(s.items())) for s in enabled_modes(net, M, t)}
            present = set()
            cut = bp.cut(C)
            for e in bp.events:
                if e.transition != t.name or not all(b in cut for b, _ in e.preset):
                    continue
                fixed = {v: iota[bp.conditions[b].ovar] for b, v in e.preset}
                free = [v for v in t.vars if v not in fixed]
                for a in enumerate_models(G.substitute(t.guard, fixed), domain or net.domain, variables=free):
                    s = dict(fixed)
                    s.update(a)
                    present.add(tuple(sorted(s.items())))
            if enabled != present:
                bad.append((C, M, t.name))
    return bad


# ---------------------------------------------------------------------------
# P/T prefixes and the expansion of symbolic prefixes

def pt_configurations(proc: PTProcess) -> Iterator[frozenset]:
    n = len(proc.ev_trans)
    chosen: List[int] = []
    consumed: set = set()
    inset: set = set()

    def rec(i):
        if i == n:
            yield frozenset(chosen)
            return
        yield from rec(i + 1)
        pre = proc.ev_pre[i]
        if any(b in consumed for b in pre):
            return
        if any(proc.cond_event[b] != BOTTOM and proc.cond_event[b] not in inset for b in pre):
            return
        chosen.append(i)
        inset.add(i)
        consumed.update(pre)
        yield from rec(i + 1)
        chosen.pop()
        inset.discard(i)
        consumed.difference_update(pre)

    yield from rec(0)


def check_pt_completeness(proc: PTProcess, pt: PTNet) -> CompletenessReport:
    reach = pt_reachable(pt)
    witnesses: Dict[frozenset, List[frozenset]] = defaultdict(list)
    for C in pt_configurations(proc):
        witnesses[frozenset(proc.marking(C).items())].append(C)
    rep = CompletenessReport(len(reach), non_cutoff=len(proc.ev_trans) - len(proc.cutoffs))
    for M in sorted(reach, key=lambda m: sorted(m)):
        ws = witnesses.get(M)
        hl = marking_correspondence(dict(M), pt)
        if not ws:
            rep.missing.append(hl)
            continue
        enabled = pt_enabled(pt, dict(M))

        def extended(C):
            cut = proc.cut(C)
            for t in enabled:
                if not any(proc.label(e) == t.name and all(b in cut for b in proc.ev_pre[e])
                           for e in range(len(proc.ev_trans))):
                    return False
            return True
        if not any(extended(C) for C in ws):
            rep.unextended.append(hl)
    return rep


def expand_prefix(bp: BranchingProcess, pt: Optional[PTNet] = None, domain=None) -> PTProcess:
    """The P/T occurrence net of coloured conditions (b, c) and moded events (e, sigma) that occur
    in some instantiated configuration of ``bp``; transitions are named as in ``expand(net)``."""
    net = bp.net
    pt = pt or expand(net)
    tindex = {t.name: i for i, t in enumerate(pt.transitions)}
    pindex = {p: i for i, p in enumerate(pt.places)}
    proc = PTProcess(pt)
    cond_id: Dict[tuple, int] = {}
    ev_id: Dict[tuple, int] = {}

    def cond(b, c, producer):
        key = (b, c, producer)
        if key not in cond_id:
            cond_id[key] = len(proc.cond_place)
            proc.cond_place.append(pindex[place_name(bp.conditions[b].place, c)])
            proc.cond_event.append(producer)
            if producer == BOTTOM:
                proc.b0.append(cond_id[key])
        return cond_id[key]

    for C, iota in instantiated_configurations(bp, domain):
        pt_of = {BOTTOM: BOTTOM}
        for b in bp.b0:
            cond(b, iota[bp.conditions[b].ovar], BOTTOM)
        for e in sorted(C, key=lambda e: (bp.events[e].depth, e)):
            ev = bp.events[e]
            t = bp.transition(ev.transition)
            sigma = {v: iota[event_var(v, e)] for v in t.vars}
            pre = tuple(cond(b, iota[bp.conditions[b].ovar], pt_of[bp.conditions[b].event]) for b, _ in ev.preset)
            key = (e, pre, tuple(sorted(sigma.items())))
            if key not in ev_id:
                eid = ev_id[key] = len(proc.ev_trans)
                proc.ev_trans.append(tindex[f"{t.name}.{mode_str(t, sigma)}"])
                proc.ev_pre.append(pre)
                proc.ev_post.append(tuple(cond(b, sigma[v], eid) for b, v in ev.postset))
                proc.ev_depth.append(ev.depth)
                proc.ev_cone.append(frozenset())
                proc.cutoff_flags.append(ev.cutoff)
            pt_of[e] = ev_id[key]
    for e in range(len(proc.ev_trans)):
        cone = {e}
        for b in proc.ev_pre[e]:
            if proc.cond_event[b] != BOTTOM:
                cone |= proc.ev_cone[proc.cond_event[b]]
        proc.ev_cone[e] = frozenset(cone)
    return proc


def non_cutoff_bound(bp, net: HLNet) -> Tuple[int, int]:
    """(non-cut-off events, |R(N)|)."""
    if isinstance(bp, BranchingProcess):
        k = sum(1 for e in bp.events if not e.cutoff)
    else:
        k = len(bp.ev_trans) - len(bp.cutoffs)
    return k, len(reachable_markings(net).markings)


def prefix_witness_counts(bp: BranchingProcess) -> Counter:
    return Counter(len(C) for C, _ in instantiated_configurations(bp))
