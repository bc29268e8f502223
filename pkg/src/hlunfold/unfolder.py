"""Complete finite prefixes: the generalized ERV loop on high-level nets, and classic ERV on P/T nets."""
from __future__ import annotations

import heapq
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from . import cutoff as CO
from . import guards as G
from .branching import BOTTOM, BranchingProcess, internal_local_predicate, local_predicate
from .expansion import PTNet, expand
from .guards import Expr
from .net import HLNet, NetError, Transition
from .orders import TransitionOrder, key_from_layers
from .solver import Solver, SolverConfig

log = logging.getLogger(__name__)

COMPLETE, GOAL, CAP, TIMEOUT = "complete", "goal", "cap", "timeout"


@dataclass(frozen=True)
class UnfoldConfig:
    order: str = "f"                 # m | e | f
    cutoff: str = "standard"         # standard | star | none
    max_events: int = 100_000
    max_depth: Optional[int] = None
    timeout_s: Optional[float] = None
    internal_vars: bool = True
    initial_reference: bool = True   # the initial markings count as an earlier configuration
    transition_order: Optional[Tuple[str, ...]] = None
    goal: Tuple[str, ...] = ()       # stop as soon as an event with one of these labels is added
    solver: SolverConfig = SolverConfig()


@dataclass
class PossibleExtension:
    transition: str
    preset: Tuple[Tuple[int, str], ...]
    pred: Optional[Expr] = None
    key: tuple = ()


@dataclass
class PrefixResult:
    process: object
    status: str
    goal_event: Optional[int] = None
    solver_calls: int = 0
    sat_time_ms: float = 0.0
    total_ms: float = 0.0
    unknown: int = 0

    @property
    def conditions(self) -> int:
        return len(self.process.conditions) if isinstance(self.process, BranchingProcess) \
            else len(self.process.cond_place)

    @property
    def events(self) -> int:
        return len(self.process.events) if isinstance(self.process, BranchingProcess) \
            else len(self.process.ev_trans)

    @property
    def cutoffs(self) -> List[int]:
        return self.process.cutoffs

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE

    def stats(self) -> dict:
        return {"conditions": self.conditions, "events": self.events, "cutoffs": len(self.cutoffs),
                "solver_calls": self.solver_calls, "sat_time_ms": round(self.sat_time_ms, 3),
                "total_ms": round(self.total_ms, 3), "status": self.status,
                "unknown_verdicts": self.unknown}


def _transition_order(names: Sequence[str], cfg: UnfoldConfig) -> TransitionOrder:
    if cfg.transition_order:
        given = [n for n in cfg.transition_order if n in names]
        return TransitionOrder(tuple(given)).extend(names)
    return TransitionOrder(tuple(names))


# ---------------------------------------------------------------------------
# symbolic


class SymbolicUnfolder:
    """The generalized ERV loop with lazily checked possible extensions.

    Candidates are generated structurally whenever new (non-cut-off) conditions appear and checked
    for satisfiability when they leave the queue, immediately before insertion.
    """

    def __init__(self, net: HLNet, cfg: UnfoldConfig = UnfoldConfig(), solver: Solver = None):
        self.net = net
        self.cfg = cfg
        order = _transition_order([t.name for t in net.transitions], cfg)
        self.bp = BranchingProcess(net, order, cfg.order)
        self.solver = solver or Solver(net.domain, cfg.solver)
        self._own_solver = solver is None
        self.queue: List[tuple] = []
        self.seen = set()
        self.dead = set()
        self.refs = CO.ReferenceIndex()
        self.by_input: Dict[str, List[Transition]] = defaultdict(list)
        for t in net.transitions:
            for p in dict.fromkeys(t.in_places):
                self.by_input[p].append(t)
        self.goal = set(cfg.goal)
        self.goal_event = None
        self.internal = cfg.internal_vars
        self._config_cache: Dict[frozenset, Expr] = {}
        if cfg.initial_reference:
            self.refs.add(self.bp.cut_labels(self.bp.b0), self.bp.key_of(()), None, frozenset())
        self._extend_from(self.bp.b0)

    def close(self):
        if self._own_solver:
            self.solver.close()

    # -- candidates -------------------------------------------------------
    def _extend_from(self, new_conds: Iterable[int]):
        bp = self.bp
        for b in new_conds:
            place = bp.conditions[b].place
            for t in self.by_input[place]:
                slots = []
                for p, _ in t.pre:
                    if p == place:
                        slots.append([b])
                    else:
                        slots.append([c for c in bp.co[b] if bp.conditions[c].place == p and c not in self.dead])
                self._combine(t, slots, [], 0)

    def _combine(self, t: Transition, slots, chosen, i):
        if i == len(slots):
            self._push(t, tuple(chosen))
            return
        co = self.bp.co
        for c in slots[i]:
            if all(c in co[x] for x in chosen):
                chosen.append(c)
                self._combine(t, slots, chosen, i + 1)
                chosen.pop()

    def _push(self, t: Transition, preset: Tuple[int, ...]):
        sig = (t.name, tuple(sorted(preset)))
        if sig in self.seen:
            return
        self.seen.add(sig)
        key = self.bp.candidate_key(t.name, preset)
        heapq.heappush(self.queue, (key, self.bp.order.rank(t.name), sig[1], t.name, preset))

    def candidate_pred(self, t: str, preset: Sequence[int]) -> Expr:
        """pred of the event the candidate would become, using the next free event id."""
        bp = self.bp
        tr = bp.transition(t)
        eid = len(bp.events)
        inputs = [bp.conditions[b] for b in preset]
        past, _ = bp.cone_of_preset(preset)
        if self.internal:
            lp, _ = internal_local_predicate(tr, eid, inputs)
        else:
            lp = local_predicate(tr, eid, inputs)
        return G.and_(bp.config_pred(past, self.internal), lp)

    def pending(self) -> List[PossibleExtension]:
        """Queued candidates whose predicate is satisfiable (checked now, in queue order)."""
        out = []
        for key, _, _, t, preset in sorted(self.queue):
            if any(b in self.dead for b in preset):
                continue
            p = self.candidate_pred(t, preset)
            if self.solver.is_sat(p) is not False:
                tr = self.bp.transition(t)
                out.append(PossibleExtension(t, tuple(zip(preset, (v for _, v in tr.pre))), p, key))
        return out

    # -- main loop ----------------------------------------------------------
    def step(self):
        """Pop candidates until one becomes an event; return it, or None when the queue is empty."""
        bp = self.bp
        while self.queue:
            key, _, _, t, preset = heapq.heappop(self.queue)
            if any(b in self.dead for b in preset):
                continue
            if self.cfg.max_depth is not None and bp.cone_of_preset(preset)[1] > self.cfg.max_depth:
                continue
            sat = self.solver.is_sat(self.candidate_pred(t, preset))
            if sat is False:
                continue
            if sat is None:
                log.warning("satisfiability of %s on %s unknown; keeping it", t, preset)
            ev = bp.add_event(t, preset)
            if t in self.goal:
                self.goal_event = ev.id
                return ev
            if self._is_cutoff(ev):
                ev.cutoff = True
                self.dead.update(b for b, _ in ev.postset)
            else:
                self._register(ev)
                self._extend_from([b for b, _ in ev.postset])
            return ev
        return None

    def _register(self, ev):
        if self.cfg.cutoff == "standard":
            labels = self.bp.cut_labels(self.bp.cut(ev.cone))
            self.refs.add(labels, ev.key, None, ev.cone)

    def _is_cutoff(self, ev) -> bool:
        mode = self.cfg.cutoff
        if mode == "none":
            return False
        bp = self.bp
        if mode == "standard":
            labels = bp.cut_labels(bp.cut(ev.cone))
            refs = [r[2] for r in self.refs.smaller(labels, ev.key)]
        elif mode == "star":
            refs = CO.config_references(bp, ev.id, include_initial=self.cfg.initial_reference)
        else:
            raise ValueError(f"unknown cut-off mode {mode!r}")
        if not refs:
            return False
        lhs = CO.config_body(bp, ev.cone, self.internal)
        rhs = G.or_(*[self._constraint(R) for R in refs])
        verdict = self.solver.implies(lhs, rhs)
        if verdict is None:
            log.warning("cut-off check for event %d unknown; treating it as no cut-off", ev.id)
        return verdict is True

    def _constraint(self, R: frozenset) -> Expr:
        c = self._config_cache.get(R)
        if c is None:
            c = self._config_cache[R] = CO.config_constraint(self.bp, R, self.internal)
        return c

    def run(self) -> PrefixResult:
        t0 = time.perf_counter()
        status = COMPLETE
        try:
            while True:
                if len(self.bp.events) >= self.cfg.max_events:
                    status = CAP if self._has_more() else COMPLETE
                    break
                if self.cfg.timeout_s is not None and time.perf_counter() - t0 > self.cfg.timeout_s:
                    status = TIMEOUT
                    break
                ev = self.step()
                if ev is None:
                    break
                if self.goal_event is not None:
                    status = GOAL
                    break
        finally:
            self.close()
        st = self.solver.stats
        return PrefixResult(self.bp, status, self.goal_event, st.calls, st.time_ms,
                            (time.perf_counter() - t0) * 1000, st.unknown)

    def _has_more(self) -> bool:
        return any(not any(b in self.dead for b in q[4]) for q in self.queue)


def build_symbolic_prefix(n: HLNet, cfg: UnfoldConfig = UnfoldConfig(), solver: Solver = None) -> PrefixResult:
    return SymbolicUnfolder(n, cfg, solver).run()


def possible_extensions(u: SymbolicUnfolder) -> List[PossibleExtension]:
    return u.pending()


# ---------------------------------------------------------------------------
# internal variables


@dataclass(frozen=True)
class _Slot:
    ivar: str


@dataclass
class InternalForm:
    locpred: Dict[int, Expr]
    var: Dict[int, str]

    def pred(self, bp: BranchingProcess, events: Iterable[int]) -> Expr:
        return G.simplify(G.and_(bp.pred_bottom, *[self.locpred[e] for e in sorted(set(events))]))


def rewrite_internal_variables(prefix) -> InternalForm:
    """One variable per condition, named after the event that chose its colour.

    Input arc variables of an event are replaced by the variable of the consumed condition; a
    variable read on two input arcs yields an equality between the two condition variables.
    Output-only variables are the only fresh ones.  Applying the function to its own result
    returns it unchanged.
    """
    if isinstance(prefix, InternalForm):
        return prefix
    bp = prefix.process if isinstance(prefix, PrefixResult) else prefix
    var: Dict[int, str] = {b: bp.conditions[b].ovar for b in bp.b0}
    locpred: Dict[int, Expr] = {}
    for ev in bp.events:
        tr = bp.transition(ev.transition)
        lp, vmap = internal_local_predicate(tr, ev.id, [_Slot(var[b]) for b, _ in ev.preset])
        locpred[ev.id] = lp
        for b, v in ev.postset:
            var[b] = vmap[v]
    return InternalForm(locpred, var)


# ---------------------------------------------------------------------------
# low level


class PTProcess:
    """Occurrence net of a P/T prefix with integer-indexed nodes."""

    def __init__(self, net: PTNet):
        self.net = net
        self.places = list(net.places)
        self.cond_place: List[int] = []
        self.cond_event: List[int] = []
        self.ev_trans: List[int] = []
        self.ev_pre: List[Tuple[int, ...]] = []
        self.ev_post: List[Tuple[int, ...]] = []
        self.ev_depth: List[int] = []
        self.ev_cone: List[FrozenSet[int]] = []
        self.cutoff_flags: List[bool] = []
        self.b0: List[int] = []

    @property
    def conditions(self):
        return self.cond_place

    @property
    def events(self):
        return self.ev_trans

    @property
    def cutoffs(self) -> List[int]:
        return [e for e, f in enumerate(self.cutoff_flags) if f]

    def label(self, e: int) -> str:
        return self.net.transitions[self.ev_trans[e]].name

    def cut(self, C: Iterable[int]) -> FrozenSet[int]:
        produced = set(self.b0)
        consumed = set()
        for e in C:
            produced.update(self.ev_post[e])
            consumed.update(self.ev_pre[e])
        return frozenset(produced - consumed)

    def marking(self, C: Iterable[int]) -> Dict[str, int]:
        m: Dict[str, int] = {}
        for b in self.cut(C):
            p = self.places[self.cond_place[b]]
            m[p] = m.get(p, 0) + 1
        return m

    def stats(self) -> dict:
        return {"conditions": len(self.cond_place), "events": len(self.ev_trans), "cutoffs": len(self.cutoffs)}


def build_lowlevel_prefix(pt: PTNet, cfg: UnfoldConfig = UnfoldConfig()) -> PrefixResult:
    """Classic ERV: cut-off when the cone reaches a marking already reached by a smaller cone."""
    t0 = time.perf_counter()
    if len(pt.initial) != 1:
        raise NetError("the low-level prefix needs exactly one initial marking")
    if cfg.cutoff == "star":
        raise NetError("cut-off* is only defined for the symbolic prefix")
    pidx = {p: i for i, p in enumerate(pt.places)}
    sources = list(dict.fromkeys(t.source or t.name for t in pt.transitions))
    horder = _transition_order(sources, cfg)
    # rank by the high-level order, then by mode order within the transition
    ranked = sorted(range(len(pt.transitions)),
                    key=lambda i: (horder.rank(pt.transitions[i].source or pt.transitions[i].name), i))
    rank = [0] * len(pt.transitions)
    for r, i in enumerate(ranked):
        rank[i] = r
    pre = [tuple(pidx[p] for p in t.pre) for t in pt.transitions]
    post = [tuple(pidx[p] for p in t.post) for t in pt.transitions]
    for i, t in enumerate(pt.transitions):
        if len(set(pre[i])) != len(pre[i]):
            raise NetError(f"{t.name} consumes twice from one place; not a safe net")
        if not pre[i]:
            raise NetError(f"{t.name} has an empty preset")
    goal = {i for i, t in enumerate(pt.transitions) if t.name in cfg.goal or t.source in cfg.goal}
    by_in: Dict[int, List[int]] = defaultdict(list)
    for i, ps in enumerate(pre):
        for p in ps:
            by_in[p].append(i)

    proc = PTProcess(pt)
    co: List[set] = []
    by_place: Dict[int, List[int]] = defaultdict(list)

    def add_cond(p, e):
        proc.cond_place.append(p)
        proc.cond_event.append(e)
        co.append(set())
        by_place[p].append(len(proc.cond_place) - 1)
        return len(proc.cond_place) - 1

    for p, k in sorted(pt.initial[0].items(), key=lambda x: pidx[x[0]]):
        if k != 1:
            raise NetError("initial marking is not safe")
        proc.b0.append(add_cond(pidx[p], BOTTOM))
    for b in proc.b0:
        co[b] = set(proc.b0) - {b}

    queue: List[tuple] = []
    seen = set()
    kind = cfg.order

    def key_of(past, t, depth):
        layers: Dict[int, List[int]] = defaultdict(list)
        for e in past:
            layers[proc.ev_depth[e]].append(rank[proc.ev_trans[e]])
        layers[depth].append(rank[t])
        return key_from_layers(kind, [layers[d] for d in sorted(layers)])

    dead = set()

    def push(t, chosen):
        ps = tuple(sorted(chosen))
        sig = (t, ps)
        if sig in seen:
            return
        seen.add(sig)
        past = set()
        depth = 0
        for b in ps:
            e = proc.cond_event[b]
            if e != BOTTOM:
                past |= proc.ev_cone[e]
                depth = max(depth, proc.ev_depth[e])
        depth += 1
        heapq.heappush(queue, (key_of(past, t, depth), rank[t], ps, t, frozenset(past), depth))

    def extend(new):
        for b in new:
            p = proc.cond_place[b]
            for t in by_in[p]:
                others = [q for q in pre[t] if q != p]
                cands = [[c for c in co[b] if proc.cond_place[c] == q and c not in dead] for q in others]

                def rec(i, chosen):
                    if i == len(others):
                        push(t, chosen + [b])
                        return
                    for c in cands[i]:
                        if all(c in co[x] for x in chosen):
                            rec(i + 1, chosen + [c])
                rec(0, [])

    extend(proc.b0)
    best: Dict[frozenset, tuple] = {}
    if cfg.initial_reference:
        best[frozenset(proc.marking(()).items())] = key_from_layers(kind, [])
    status = COMPLETE
    goal_event = None
    while queue:
        if len(proc.ev_trans) >= cfg.max_events:
            status = CAP
            break
        if cfg.timeout_s is not None and time.perf_counter() - t0 > cfg.timeout_s:
            status = TIMEOUT
            break
        key, _, ps, t, past, depth = heapq.heappop(queue)
        if any(b in dead for b in ps):
            continue
        if cfg.max_depth is not None and depth > cfg.max_depth:
            continue
        eid = len(proc.ev_trans)
        proc.ev_trans.append(t)
        proc.ev_pre.append(ps)
        proc.ev_depth.append(depth)
        proc.ev_cone.append(past | {eid})
        outs = tuple(add_cond(p, eid) for p in post[t])
        proc.ev_post.append(outs)
        base = set.intersection(*(co[b] for b in ps)) - set(ps)
        for o in outs:
            co[o] = (base | set(outs)) - {o}
        for c in base:
            co[c].update(outs)
        if t in goal:
            proc.cutoff_flags.append(False)
            goal_event = eid
            status = GOAL
            break
        mk = frozenset(proc.marking(proc.ev_cone[eid]).items())
        prev = best.get(mk)
        is_cut = cfg.cutoff != "none" and prev is not None and prev < key
        proc.cutoff_flags.append(is_cut)
        if is_cut:
            dead.update(outs)
        else:
            if prev is None or key < prev:
                best[mk] = key
            extend(outs)
    if status == CAP and not any(not any(b in dead for b in q[2]) for q in queue):
        status = COMPLETE
    res = PrefixResult(proc, status, goal_event, 0, 0.0, (time.perf_counter() - t0) * 1000, 0)
    return res


def unfold_expansion(n: HLNet, cfg: UnfoldConfig = UnfoldConfig(), reachable_only: bool = False) -> PrefixResult:
    return build_lowlevel_prefix(expand(n, reachable_only), cfg)


# ---------------------------------------------------------------------------
# reachability


def parse_goal(text: str, n: HLNet, name: str = "goal") -> Transition:
    """``PLACE:VAR[,PLACE:VAR...] [GUARD]``, e.g. ``bucket0:x (= x 4)``.

    The goal transition consumes one token from each listed place and produces nothing.
    """
    text = text.strip()
    head, _, guard = text.partition(" ")
    pre = []
    for part in head.split(","):
        p, sep, v = part.partition(":")
        if not sep or not p or not v:
            raise NetError(f"bad goal arc {part!r}; expected PLACE:VAR")
        pre.append((p, v))
    g = G.parse(guard) if guard.strip() else G.TRUE
    return Transition(name, g, tuple(pre), ())


@dataclass
class ReachResult:
    reachable: bool
    prefix: PrefixResult
    witness: Optional[List[Tuple[str, Dict]]] = None

    @property
    def steps(self) -> Optional[int]:
        return None if self.witness is None else len(self.witness)


def with_goals(n: HLNet, goals: Sequence[Transition]) -> HLNet:
    return n.with_transitions(goals)


def check_reachability(n: HLNet, goal, cfg: UnfoldConfig = UnfoldConfig(), mode: str = "symbolic") -> ReachResult:
    """Add the goal transition(s) to the net and unfold until an instance of one is added."""
    if isinstance(goal, str):
        goal = [parse_goal(goal, n)]
    elif isinstance(goal, Transition):
        goal = [goal]
    goal = list(goal)
    names = tuple(g.name for g in goal)
    net = with_goals(n, goal)
    c = replace(cfg, goal=names)
    if mode == "symbolic":
        u = SymbolicUnfolder(net, c)
        solver = u.solver
        u._own_solver = False
        try:
            res = u.run()
            if res.status != GOAL:
                return ReachResult(False, res)
            bp = res.process
            C = bp.cone(res.goal_event)
            inst = bp.some_instantiation(C, solver)
            seq = bp.firing_sequence(C - {res.goal_event}, inst) if inst is not None else None
            return ReachResult(True, res, seq)
        finally:
            solver.close()
    res = unfold_expansion(net, c)
    if res.status != GOAL:
        return ReachResult(False, res)
    proc = res.process
    C = proc.ev_cone[res.goal_event] - {res.goal_event}
    seq = []
    for e in sorted(C, key=lambda e: (proc.ev_depth[e], e)):
        tr = proc.net.transitions[proc.ev_trans[e]]
        seq.append((tr.source or tr.name, dict(tr.mode)))
    return ReachResult(True, res, seq)
