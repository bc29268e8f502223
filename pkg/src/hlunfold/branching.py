"""Symbolic branching processes: conditions, events, predicates, conflicts, configurations."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from . import guards as G
from .guards import Expr
from .net import HLNet, Marking, NetError, Transition
from .orders import TransitionOrder, key_from_layers

BOTTOM = -1  # the pseudo-event that produces the initial conditions


def event_var(v: str, eid: int) -> str:
    return f"{v}@e{eid}"


def bottom_var(place: str) -> str:
    return f"{place}@bot"


@dataclass
class Condition:
    id: int
    place: str
    event: int            # producer id, or BOTTOM
    var: str              # arc variable of the producer (the place name for initial conditions)
    ivar: str = ""        # internal variable: names the event that chose the colour

    @property
    def is_initial(self) -> bool:
        return self.event == BOTTOM

    @property
    def ovar(self) -> str:
        """var(b) indexed by its producer."""
        return bottom_var(self.place) if self.is_initial else event_var(self.var, self.event)


@dataclass
class Event:
    id: int
    transition: str
    preset: Tuple[Tuple[int, str], ...]      # (condition id, arc variable)
    postset: Tuple[Tuple[int, str], ...] = ()
    depth: int = 1
    cone: FrozenSet[int] = frozenset()
    locpred: Expr = G.TRUE
    ilocpred: Expr = G.TRUE
    vmap: Dict[str, str] = field(default_factory=dict)
    key: tuple = ()
    cutoff: bool = False

    @property
    def signature(self) -> tuple:
        return (self.transition, tuple(sorted(self.preset)))


def pred_bottom(n: HLNet, conds: Sequence[Condition]) -> Expr:
    """Symbolic set of initial cuts over one variable per initial condition."""
    by_place = {b.place: b for b in conds}
    init = n.initial
    if init.is_explicit:
        alts = []
        for m in init.markings:
            alts.append(G.and_(*[G.eq(G.Var(by_place[p].ovar), c) for p, c in m.pairs()]))
        return G.simplify(G.or_(*alts))
    ren = {v: by_place[p].ovar for p, v in zip(init.places, init.vars)}
    return G.simplify(G.rename(init.guard, ren))


def local_predicate(t: Transition, eid: int, inputs: Sequence[Condition]) -> Expr:
    """guard[v <- v_e] plus one equality per input arc binding v_e to the producer's variable."""
    ren = {v: event_var(v, eid) for v in t.vars}
    parts = list(G.conjuncts(G.rename(t.guard, ren)))
    for (p, v), b in zip(t.pre, inputs):
        parts.append(G.eq(G.Var(ren[v]), G.Var(b.ovar)))
    return G.and_(*parts)


def internal_local_predicate(t: Transition, eid: int, inputs: Sequence[Condition]):
    """Predicate over internal variables: input variables are renamed to the producing
    condition's variable, only output-only variables are fresh. Returns (pred, vmap)."""
    vmap: Dict[str, str] = {}
    eqs = []
    for (p, v), b in zip(t.pre, inputs):
        if v in vmap:
            eqs.append(G.eq(G.Var(vmap[v]), G.Var(b.ivar)))
        else:
            vmap[v] = b.ivar
    for v in t.vars:
        if v not in vmap:
            vmap[v] = event_var(v, eid)
    guard = G.rename(t.guard, vmap)
    return G.and_(*G.conjuncts(guard), *eqs), vmap


class BranchingProcess:
    """Occurrence-net store.  Events are kept in insertion order, which is causal order."""

    def __init__(self, net: HLNet, order: TransitionOrder = None, order_kind: str = "f"):
        if not net.is_ordinary():
            raise NetError(f"net {net.name} is not ordinary; symbolic unfolding needs an ordinary net")
        if any(not t.pre for t in net.transitions):
            raise NetError("transitions with empty preset have no finite unfolding")
        self.net = net
        self.order = order or TransitionOrder(tuple(t.name for t in net.transitions))
        self.order_kind = order_kind
        self.conditions: List[Condition] = []
        self.events: List[Event] = []
        self.co: List[set] = []
        self.consumers: List[List[int]] = []
        self.by_place: Dict[str, List[int]] = {p: [] for p in net.places}
        self.by_signature: Dict[tuple, int] = {}
        self.b0: List[int] = []
        self._transitions = {t.name: t for t in net.transitions}
        places = net.initial.marked_places()
        if len(set(places)) != len(places):
            raise NetError("initial markings put two tokens on one place")
        for p in places:
            b = self._new_condition(p, BOTTOM, p)
            b.ivar = b.ovar
            self.b0.append(b.id)
        for b in self.b0:
            self.co[b] = set(self.b0) - {b}
        self.pred_bottom = pred_bottom(net, [self.conditions[b] for b in self.b0])
        self._pred_cache: Dict[tuple, Expr] = {}

    # ------------------------------------------------------------------
    # construction

    def _new_condition(self, place: str, event: int, var: str) -> Condition:
        b = Condition(len(self.conditions), place, event, var)
        self.conditions.append(b)
        self.co.append(set())
        self.consumers.append([])
        self.by_place[place].append(b.id)
        return b

    def transition(self, name: str) -> Transition:
        return self._transitions[name]

    def cone_of_preset(self, preset: Iterable[int]) -> Tuple[FrozenSet[int], int]:
        """Union of producer cones and the depth a new event on this preset would get."""
        cone = set()
        depth = 0
        for b in preset:
            e = self.conditions[b].event
            if e != BOTTOM:
                cone |= self.events[e].cone
                depth = max(depth, self.events[e].depth)
        return frozenset(cone), depth + 1

    def candidate_key(self, t: str, preset: Iterable[int], kind: str = None) -> tuple:
        past, depth = self.cone_of_preset(preset)
        return self.key_of(past, extra=(self.order.rank(t), depth), kind=kind)

    def key_of(self, events: Iterable[int], extra=None, kind: str = None) -> tuple:
        """Order key of a causally closed set: Foata rounds of a configuration are its depth levels."""
        layers: Dict[int, List[int]] = {}
        for e in events:
            ev = self.events[e]
            layers.setdefault(ev.depth, []).append(self.order.rank(ev.transition))
        if extra is not None:
            layers.setdefault(extra[1], []).append(extra[0])
        return key_from_layers(kind or self.order_kind, [layers[d] for d in sorted(layers)])

    def add_event(self, t: str, preset: Sequence[int]) -> Event:
        """Attach an event for transition ``t`` consuming ``preset`` (one condition per input arc,
        in the order of the transition's input arcs)."""
        tr = self.transition(t)
        if len(preset) != len(tr.pre):
            raise NetError(f"{t} needs {len(tr.pre)} input conditions, got {len(preset)}")
        for (p, _), b in zip(tr.pre, preset):
            if self.conditions[b].place != p:
                raise NetError(f"condition {b} does not lie on {p}")
        sig = (t, tuple(sorted(preset)))
        if sig in self.by_signature:
            raise NetError(f"event {sig} already present")
        eid = len(self.events)
        inputs = [self.conditions[b] for b in preset]
        past, depth = self.cone_of_preset(preset)
        ilp, vmap = internal_local_predicate(tr, eid, inputs)
        ev = Event(eid, t, tuple((b, v) for b, (_, v) in zip(preset, tr.pre)), (), depth,
                   past | {eid}, local_predicate(tr, eid, inputs), ilp, vmap)
        ev.key = self.key_of(past, extra=(self.order.rank(t), depth))
        self.events.append(ev)
        self.by_signature[sig] = eid
        for b in preset:
            self.consumers[b].append(eid)
        outs = []
        for p, v in tr.post:
            c = self._new_condition(p, eid, v)
            c.ivar = vmap[v]
            outs.append(c.id)
        ev.postset = tuple((c, self.conditions[c].var) for c in outs)
        base = set.intersection(*(self.co[b] for b in preset)) - set(preset)
        for c in outs:
            self.co[c] = (base | set(outs)) - {c}
        for c in base:
            self.co[c].update(outs)
        return ev

    # ------------------------------------------------------------------
    # structure

    def producer(self, b: int) -> int:
        return self.conditions[b].event

    def immediate_predecessors(self, e: int) -> List[int]:
        return sorted({self.conditions[b].event for b, _ in self.events[e].preset} - {BOTTOM})

    def cone(self, e: int) -> FrozenSet[int]:
        return self.events[e].cone

    def cut(self, config: Iterable[int]) -> FrozenSet[int]:
        C = set(config)
        produced = set(self.b0)
        consumed = set()
        for e in C:
            ev = self.events[e]
            produced.update(b for b, _ in ev.postset)
            consumed.update(b for b, _ in ev.preset)
        return frozenset(produced - consumed)

    def cut_labels(self, conds: Iterable[int]) -> Tuple[str, ...]:
        return tuple(sorted(self.conditions[b].place for b in conds))

    def causally_closed(self, C) -> bool:
        C = set(C)
        return all(p in C for e in C for p in self.immediate_predecessors(e))

    def structurally_conflict_free(self, C) -> bool:
        seen = set()
        for e in C:
            for b, _ in self.events[e].preset:
                if b in seen:
                    return False
                seen.add(b)
        return True

    def structurally_concurrent(self, conds: Sequence[int]) -> bool:
        conds = list(conds)
        return all(conds[j] in self.co[conds[i]]
                   for i in range(len(conds)) for j in range(i + 1, len(conds)))

    # ------------------------------------------------------------------
    # predicates

    def local_pred(self, e: int, internal: bool = False) -> Expr:
        ev = self.events[e]
        return ev.ilocpred if internal else ev.locpred

    def config_pred(self, events: Iterable[int], internal: bool = False) -> Expr:
        es = tuple(sorted(set(events)))
        key = (es, internal)
        hit = self._pred_cache.get(key)
        if hit is None:
            hit = G.simplify(G.and_(self.pred_bottom, *[self.local_pred(e, internal) for e in es]))
            if len(self._pred_cache) < 100_000:
                self._pred_cache[key] = hit
        return hit

    def pred(self, e: int, internal: bool = False) -> Expr:
        """pred(e) = pred(bottom) and the local predicates of the cone."""
        if e == BOTTOM:
            return self.pred_bottom
        return self.config_pred(self.events[e].cone, internal)

    def cond_var(self, b: int, internal: bool = False) -> str:
        c = self.conditions[b]
        return c.ivar if internal else c.ovar

    def variables(self, events: Iterable[int], internal: bool = False) -> List[str]:
        """The variables of the events plus those of the initial conditions."""
        vs = [self.conditions[b].ovar for b in self.b0]
        for e in sorted(set(events)):
            ev = self.events[e]
            if internal:
                vs.extend(v for v in dict.fromkeys(ev.vmap.values()) if v.endswith(f"@e{e}"))
            else:
                vs.extend(event_var(v, e) for v in self.transition(ev.transition).vars)
        return vs

    def nodes_pred(self, events: Iterable[int] = (), conditions: Iterable[int] = (),
                   internal: bool = False) -> Expr:
        cone = set()
        for e in events:
            cone |= self.events[e].cone
        for b in conditions:
            p = self.producer(b)
            if p != BOTTOM:
                cone |= self.events[p].cone
        return self.config_pred(cone, internal)

    def is_color_conflict(self, solver, events: Iterable[int] = (), conditions: Iterable[int] = (),
                          internal: bool = False) -> Optional[bool]:
        """True iff the predicates of the nodes are jointly unsatisfiable; None on Unknown."""
        s = solver.is_sat(self.nodes_pred(events, conditions, internal))
        return None if s is None else not s

    def is_co_set(self, conds: Sequence[int], solver=None, internal: bool = False) -> Optional[bool]:
        if not self.structurally_concurrent(conds):
            return False
        if solver is None:
            return True
        cc = self.is_color_conflict(solver, conditions=conds, internal=internal)
        return None if cc is None else not cc

    def is_configuration(self, C: Iterable[int], solver=None, internal: bool = False) -> Optional[bool]:
        C = set(C)
        if not (self.causally_closed(C) and self.structurally_conflict_free(C)):
            return False
        if solver is None:
            return True
        return solver.is_sat(self.config_pred(C, internal))

    # ------------------------------------------------------------------
    # configurations and instantiations

    def configurations(self, max_size: Optional[int] = None, events: Optional[Iterable[int]] = None,
                       solver=None) -> Iterator[FrozenSet[int]]:
        """Causally closed, structurally conflict-free subsets; with ``solver``, only those whose
        predicate is satisfiable (i.e. configurations)."""
        pool = sorted(set(range(len(self.events)) if events is None else events))
        limit = len(pool) if max_size is None else max_size
        chosen: List[int] = []
        consumed: set = set()
        inset: set = set()

        def rec(i):
            if i == len(pool):
                C = frozenset(chosen)
                if solver is None or solver.is_sat(self.config_pred(C)):
                    yield C
                return
            yield from rec(i + 1)
            if len(chosen) >= limit:
                return
            e = pool[i]
            ev = self.events[e]
            pre = [b for b, _ in ev.preset]
            if any(b in consumed for b in pre):
                return
            if not all(p in inset for p in self.immediate_predecessors(e)):
                return
            chosen.append(e)
            inset.add(e)
            consumed.update(pre)
            yield from rec(i + 1)
            chosen.pop()
            inset.discard(e)
            consumed.difference_update(pre)

        yield from rec(0)

    def instantiations(self, C: Iterable[int], domain=None, cap: int = 1_000_000) -> List[Dict[str, G.Color]]:
        from .solver import enumerate_models
        C = set(C)
        return enumerate_models(self.config_pred(C), domain or self.net.domain, cap,
                                variables=self.variables(C))

    def some_instantiation(self, C: Iterable[int], solver) -> Optional[Dict[str, G.Color]]:
        from .solver import Sat
        C = set(C)
        v = solver.check_sat(self.config_pred(C))
        if not isinstance(v, Sat):
            return None
        full = dict(v.model or {})
        for var in self.variables(C):
            if var not in full:
                full[var] = _any_color(solver.domain)
        return full

    def mark(self, C: Iterable[int], inst: Dict[str, G.Color], internal: bool = False) -> Marking:
        return Marking((self.conditions[b].place, inst[self.cond_var(b, internal)]) for b in self.cut(C))

    def configuration_markings(self, C: Iterable[int], domain=None) -> FrozenSet[Marking]:
        C = set(C)
        return frozenset(self.mark(C, i) for i in self.instantiations(C, domain))

    def firing_sequence(self, C: Iterable[int], inst: Dict[str, G.Color]) -> List[Tuple[str, Dict]]:
        """Events of C in a causal order with their modes."""
        out = []
        for e in sorted(C, key=lambda e: (self.events[e].depth, e)):
            ev = self.events[e]
            t = self.transition(ev.transition)
            out.append((ev.transition, {v: inst[event_var(v, e)] for v in t.vars}))
        return out

    # ------------------------------------------------------------------

    @property
    def cutoffs(self) -> List[int]:
        return [e.id for e in self.events if e.cutoff]

    def stats(self) -> dict:
        return {"conditions": len(self.conditions), "events": len(self.events), "cutoffs": len(self.cutoffs)}

    def label_counts(self) -> Tuple[Counter, Counter]:
        return (Counter(b.place for b in self.conditions), Counter(e.transition for e in self.events))


def _any_color(d):
    if isinstance(d, G.TupleOf):
        return tuple(_any_color(p) for p in d.parts)
    return d.lo if isinstance(d, G.FiniteRange) else 0
