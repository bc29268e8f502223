"""Expansion of high-level nets into P/T nets, and skeletons of occurrence nets."""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from . import guards as G
from .net import HLNet, InfiniteModes, Marking, NetError, enabled_modes, fire, initial_markings
from .solver import enumerate_models


def color_str(c) -> str:
    return "(" + ",".join(str(x) for x in c) + ")" if isinstance(c, tuple) else str(c)


def parse_color(s: str):
    if s.startswith("("):
        return tuple(int(x) for x in s[1:-1].split(",") if x)
    return int(s)


def place_name(p: str, c) -> str:
    return f"{p}.{color_str(c)}"


def mode_str(t, sigma: Mapping) -> str:
    return "{" + ",".join(f"{v}={color_str(sigma[v])}" for v in t.vars) + "}"


@dataclass(frozen=True)
class PTTransition:
    name: str
    pre: Tuple[str, ...]
    post: Tuple[str, ...]
    source: str = ""                 # high-level transition
    mode: Tuple[Tuple[str, object], ...] = ()


@dataclass
class PTNet:
    places: List[str]
    transitions: List[PTTransition]
    initial: List[Dict[str, int]]
    place_of: Dict[str, Tuple[str, object]] = field(default_factory=dict)
    name: str = "pt"

    def __post_init__(self):
        for p in self.places:
            if p not in self.place_of and "." in p:
                base, c = p.split(".", 1)
                self.place_of[p] = (base, parse_color(c))

    def source_place(self, p: str) -> str:
        return self.place_of.get(p, (p, None))[0]

    def to_text(self) -> str:
        """Line format: ``place NAME``, ``trans NAME : IN* -> OUT*``, ``init P*N ...``."""
        lines = [f"net {self.name}"]
        lines += [f"place {p}" for p in self.places]
        for t in self.transitions:
            lines.append(f"trans {t.name} : {' '.join(t.pre)} -> {' '.join(t.post)}")
        for m in self.initial:
            lines.append("init " + " ".join(f"{p}*{n}" for p, n in sorted(m.items())))
        return "\n".join(lines) + "\n"

    def to_dot(self) -> str:
        out = [f'digraph "{self.name}" {{', "  rankdir=TB;"]
        ids = {p: f"p{i}" for i, p in enumerate(self.places)}
        for p, i in ids.items():
            out.append(f'  {i} [shape=circle,label="{p}"];')
        for k, t in enumerate(self.transitions):
            out.append(f'  t{k} [shape=box,label="{t.name}"];')
            for p, n in Counter(t.pre).items():
                out.append(f"  {ids[p]} -> t{k}" + (f' [label="{n}"]' if n > 1 else "") + ";")
            for p, n in Counter(t.post).items():
                out.append(f"  t{k} -> {ids[p]}" + (f' [label="{n}"]' if n > 1 else "") + ";")
        out.append("}")
        return "\n".join(out) + "\n"


def _mode_list(n: HLNet, t) -> List[Dict]:
    return enumerate_models(t.guard, n.domain, variables=t.vars)


def expand(n: HLNet, reachable_only: bool = False) -> PTNet:
    """Places p.c for every colour c, transitions t.sigma for every mode sigma satisfying the guard.

    With ``reachable_only`` the expansion keeps only the modes fired from some reachable marking.
    """
    if not G.is_finite(n.domain):
        raise InfiniteModes(f"cannot expand {n.name}: colour domain {n.domain} is infinite")
    colors = G.domain_values(n.domain)
    places = [place_name(p, c) for p in n.places for c in colors]
    place_of = {place_name(p, c): (p, c) for p in n.places for c in colors}
    if reachable_only:
        fired = _fired_modes(n)
    ts = []
    for t in n.transitions:
        modes = fired[t.name] if reachable_only else _mode_list(n, t)
        for s in modes:
            ts.append(PTTransition(f"{t.name}.{mode_str(t, s)}",
                                   tuple(place_name(p, s[v]) for p, v in t.pre),
                                   tuple(place_name(p, s[v]) for p, v in t.post),
                                   t.name, tuple((v, s[v]) for v in t.vars)))
    init = [dict(Counter(place_name(p, c) for p, c in m.pairs())) for m in initial_markings(n)]
    return PTNet(places, ts, init, place_of, f"exp({n.name})")


def _fired_modes(n: HLNet) -> Dict[str, List[Dict]]:
    seen = set(initial_markings(n))
    queue = deque(seen)
    found: Dict[str, Dict[tuple, Dict]] = {t.name: {} for t in n.transitions}
    while queue:
        m = queue.popleft()
        for t in n.transitions:
            for s in enabled_modes(n, m, t):
                found[t.name][tuple(s[v] for v in t.vars)] = s
                m2 = fire(m, t, s)
                if m2 not in seen:
                    seen.add(m2)
                    queue.append(m2)
    return {k: [v[key] for key in sorted(v, key=lambda row: tuple(_ck(c) for c in row))]
            for k, v in found.items()}


def _ck(c):
    return (1, c) if isinstance(c, tuple) else (0, c)


def marking_correspondence(m_pt: Mapping[str, int], pt: Optional[PTNet] = None) -> Marking:
    """P/T marking over places ``p.c`` to the high-level marking with M(p,c) = m(p.c)."""
    counts = {}
    for name, k in m_pt.items():
        if k <= 0:
            continue
        if pt is not None and name in pt.place_of:
            key = pt.place_of[name]
        else:
            base, c = name.split(".", 1)
            key = (base, parse_color(c))
        counts[key] = counts.get(key, 0) + k
    return Marking(counts=counts)


def inverse_correspondence(m: Marking) -> Dict[str, int]:
    return {place_name(p, c): k for (p, c), k in m.counts().items()}


# ---------------------------------------------------------------------------
# P/T semantics (used by oracles)

def pt_enabled(pt: PTNet, m: Mapping[str, int]) -> List[PTTransition]:
    out = []
    for t in pt.transitions:
        need = Counter(t.pre)
        if all(m.get(p, 0) >= k for p, k in need.items()):
            out.append(t)
    return out


def pt_fire(m: Mapping[str, int], t: PTTransition) -> Dict[str, int]:
    r = dict(m)
    for p in t.pre:
        r[p] = r.get(p, 0) - 1
        if r[p] < 0:
            raise NetError(f"{t.name} not enabled")
        if r[p] == 0:
            del r[p]
    for p in t.post:
        r[p] = r.get(p, 0) + 1
    return r


def pt_reachable(pt: PTNet, cap: int = 1_000_000) -> set:
    key = lambda m: frozenset(m.items())
    seen = {key(m) for m in pt.initial}
    queue = deque(pt.initial)
    while queue:
        m = queue.popleft()
        for t in pt_enabled(pt, m):
            m2 = pt_fire(m, t)
            k = key(m2)
            if k not in seen:
                seen.add(k)
                if len(seen) > cap:
                    raise NetError(f"more than {cap} reachable markings")
                queue.append(m2)
    return seen


# ---------------------------------------------------------------------------
# skeletons

@dataclass
class Skeleton:
    """Occurrence-net shape: condition labels with producers, event labels with presets."""
    conditions: List[Tuple[str, int]]            # (label, producing event index or -1)
    events: List[Tuple[str, Tuple[int, ...]]]    # (label, preset condition indices)

    @property
    def size(self) -> Tuple[int, int]:
        return len(self.conditions), len(self.events)

    def arcs(self) -> int:
        return sum(1 for _, e in self.conditions if e >= 0) + sum(len(p) for _, p in self.events)

    def signatures(self, table: Dict) -> Tuple[Counter, Counter]:
        """Canonical history signatures, interned in ``table`` so two skeletons can share ids."""
        csig: List[int] = [None] * len(self.conditions)
        esig: List[int] = [None] * len(self.events)
        for b, (lab, e) in enumerate(self.conditions):
            if e < 0:
                csig[b] = _intern(table, ("c", lab, None))
        pending = list(range(len(self.events)))
        while pending:
            rest = []
            for e in pending:
                lab, pre = self.events[e]
                if any(csig[b] is None for b in pre):
                    rest.append(e)
                    continue
                esig[e] = _intern(table, ("e", lab, tuple(sorted(csig[b] for b in pre))))
            if len(rest) == len(pending):
                raise ValueError("skeleton is not acyclic")
            pending = rest
            for b, (lab, e) in enumerate(self.conditions):
                if csig[b] is None and esig[e] is not None:
                    csig[b] = _intern(table, ("c", lab, esig[e]))
        return Counter(csig), Counter(esig)


def _intern(table: Dict, key) -> int:
    v = table.get(key)
    if v is None:
        v = table[key] = len(table)
    return v


def isomorphic(s1: Skeleton, s2: Skeleton) -> bool:
    if s1.size != s2.size:
        return False
    table: Dict = {}
    return s1.signatures(table) == s2.signatures(table)


def skeleton(proc, strip_colors: bool = True) -> Skeleton:
    """Erase predicates and arc variables; for P/T prefixes of expansions also erase colours so the
    labels are the underlying high-level place and transition names."""
    from .branching import BranchingProcess
    if isinstance(proc, BranchingProcess):
        conds = [(b.place, b.event) for b in proc.conditions]
        evs = [(e.transition, tuple(b for b, _ in e.preset)) for e in proc.events]
        return Skeleton(conds, evs)
    conds = []
    for p, e in zip(proc.cond_place, proc.cond_event):
        lab = proc.places[p]
        conds.append((proc.net.source_place(lab) if strip_colors else lab, e))
    evs = []
    for t, pre in zip(proc.ev_trans, proc.ev_pre):
        tr = proc.net.transitions[t]
        evs.append((tr.source if strip_colors and tr.source else tr.name, tuple(pre)))
    return Skeleton(conds, evs)
