"""High-level Petri nets: structure, markings, firing rule and explicit-state reachability."""
from __future__ import annotations

import itertools
import json
import logging
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import guards as G
from .guards import Expr

log = logging.getLogger(__name__)

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


class NetError(ValueError):
    pass


class InfiniteModes(NetError):
    """Raised when a transition has infinitely many modes; use the symbolic path instead."""


class Marking:
    """Finite multiset over (place, colour) pairs; hashable and immutable."""

    __slots__ = ("_items", "_hash")

    def __init__(self, pairs: Iterable = (), counts: Mapping = None):
        c = Counter()
        for p in pairs:
            c[p] += 1
        if counts:
            for k, n in counts.items():
                c[k] += n
        self._items = tuple(sorted(((k, n) for k, n in c.items() if n > 0), key=_mkey))
        self._hash = hash(self._items)

    @classmethod
    def of(cls, *pairs) -> "Marking":
        return cls(pairs)

    def counts(self) -> Dict[tuple, int]:
        return dict(self._items)

    def pairs(self) -> List[tuple]:
        return [k for k, n in self._items for _ in range(n)]

    def support(self) -> List[tuple]:
        return [k for k, _ in self._items]

    def places(self) -> Counter:
        c = Counter()
        for (p, _), n in self._items:
            c[p] += n
        return c

    def colors_on(self, place) -> List:
        return [c for (p, c), n in self._items if p == place for _ in range(n)]

    def __add__(self, other: "Marking") -> "Marking":
        c = Counter(self.counts())
        c.update(other.counts())
        return Marking(counts=c)

    def __sub__(self, other: "Marking") -> "Marking":
        c = Counter(self.counts())
        for k, n in other._items:
            if c[k] < n:
                raise NetError(f"cannot remove {k} from marking")
            c[k] -= n
        return Marking(counts=c)

    def __ge__(self, other: "Marking") -> bool:
        mine = dict(self._items)
        return all(mine.get(k, 0) >= n for k, n in other._items)

    def __eq__(self, other):
        return isinstance(other, Marking) and self._items == other._items

    def __hash__(self):
        return self._hash

    def __len__(self):
        return sum(n for _, n in self._items)

    def __iter__(self):
        return iter(self.pairs())

    def __repr__(self):
        inner = ", ".join(f"({p},{c})" + (f"x{n}" if n > 1 else "") for (p, c), n in self._items)
        return f"[[{inner}]]"


def _mkey(item):
    (p, c), _ = item
    return (p, (1, c) if isinstance(c, tuple) else (0, c))


@dataclass(frozen=True)
class Arc:
    place: str
    var: str
    transition: str
    dir: str  # "in" | "out"
    mult: int = 1


@dataclass(frozen=True)
class Transition:
    name: str
    guard: Expr = G.TRUE
    pre: Tuple[Tuple[str, str], ...] = ()   # (place, variable), repeated for multiplicities
    post: Tuple[Tuple[str, str], ...] = ()

    @property
    def vars(self) -> Tuple[str, ...]:
        vs = {v for _, v in self.pre} | {v for _, v in self.post} | G.free_vars(self.guard)
        return tuple(sorted(vs))

    @property
    def in_places(self) -> Tuple[str, ...]:
        return tuple(p for p, _ in self.pre)

    @property
    def out_places(self) -> Tuple[str, ...]:
        return tuple(p for p, _ in self.post)

    def is_ordinary(self) -> bool:
        return (len(set(self.in_places)) == len(self.pre)
                and len(set(self.out_places)) == len(self.post))


@dataclass(frozen=True)
class InitialSpec:
    """Either an explicit list of markings or a predicate over one variable per marked place."""
    markings: Optional[Tuple[Marking, ...]] = None
    places: Tuple[str, ...] = ()
    vars: Tuple[str, ...] = ()
    guard: Expr = G.TRUE

    @classmethod
    def explicit(cls, *markings: Marking) -> "InitialSpec":
        return cls(markings=tuple(markings))

    @classmethod
    def predicate(cls, places: Sequence[str], vars: Sequence[str], guard: Expr) -> "InitialSpec":
        return cls(places=tuple(places), vars=tuple(vars), guard=guard)

    @property
    def is_explicit(self) -> bool:
        return self.markings is not None

    def marked_places(self) -> Tuple[str, ...]:
        if self.is_explicit:
            return tuple(sorted(self.markings[0].places().elements()))
        return tuple(sorted(self.places))


@dataclass(frozen=True)
class HLNet:
    domain: G.ColorDomain
    places: Tuple[str, ...]
    transitions: Tuple[Transition, ...]
    initial: InitialSpec
    name: str = "net"
    safe: bool = True

    def __post_init__(self):
        validate(self)

    def transition(self, name: str) -> Transition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def arcs(self) -> List[Arc]:
        out = []
        for t in self.transitions:
            for (p, v), n in Counter(t.pre).items():
                out.append(Arc(p, v, t.name, "in", n))
            for (p, v), n in Counter(t.post).items():
                out.append(Arc(p, v, t.name, "out", n))
        return out

    def is_ordinary(self) -> bool:
        return all(t.is_ordinary() for t in self.transitions)

    def with_transitions(self, extra: Sequence[Transition], keep: Sequence[str] = None) -> "HLNet":
        ts = [t for t in self.transitions if keep is None or t.name in keep]
        return HLNet(self.domain, self.places, tuple(ts) + tuple(extra), self.initial, self.name, self.safe)

    def with_domain(self, d: G.ColorDomain) -> "HLNet":
        return HLNet(d, self.places, self.transitions, self.initial, self.name, self.safe)


def validate(n: HLNet) -> None:
    places = set(n.places)
    if len(places) != len(n.places):
        raise NetError("duplicate place names")
    names = [t.name for t in n.transitions]
    if len(set(names)) != len(names):
        raise NetError("duplicate transition names")
    variables = set()
    for t in n.transitions:
        for p, v in t.pre + t.post:
            if p not in places:
                raise NetError(f"transition {t.name} uses unknown place {p}")
            if not _IDENT.match(v):
                raise NetError(f"bad variable name {v!r} in {t.name}")
        arc_vars = {v for _, v in t.pre + t.post}
        extra = G.free_vars(t.guard) - arc_vars
        if extra:
            raise NetError(f"guard of {t.name} mentions {sorted(extra)} which label no arc")
        variables |= arc_vars
    clash = (places & set(names)) | (places & variables) | (set(names) & variables)
    if clash:
        raise NetError(f"names used for more than one kind of node or variable: {sorted(clash)}")
    init = n.initial
    if init.is_explicit:
        if not init.markings:
            raise NetError("no initial marking")
        shape = init.markings[0].places()
        for m in init.markings:
            if m.places() != shape:
                raise NetError("initial markings must mark the same places")
            for p, c in m.support():
                if p not in places:
                    raise NetError(f"initial marking uses unknown place {p}")
                if not G.in_domain(c, n.domain):
                    raise NetError(f"initial colour {c!r} outside {n.domain}")
    else:
        if len(init.places) != len(init.vars):
            raise NetError("initial predicate needs one variable per marked place")
        if G.free_vars(init.guard) - set(init.vars):
            raise NetError("initial predicate mentions unknown variables")
    if n.safe and not n.is_ordinary():
        log.warning("net %s is not ordinary; only the expansion path accepts it", n.name)


# ---------------------------------------------------------------------------
# semantics

def initial_markings(n: HLNet) -> List[Marking]:
    init = n.initial
    if init.is_explicit:
        return list(init.markings)
    from .solver import enumerate_models
    if not G.is_finite(n.domain):
        raise InfiniteModes("initial predicate over an infinite domain")
    out = []
    for a in enumerate_models(init.guard, n.domain, variables=init.vars):
        out.append(Marking(zip(init.places, (a[v] for v in init.vars))))
    return out


def _token_choices(m: Marking, t: Transition) -> Iterable[Dict[str, G.Color]]:
    """Input bindings: one colour per input arc, respecting token multiplicities."""
    options = []
    for p, v in t.pre:
        options.append((p, v, sorted(set(m.colors_on(p)), key=_ckey)))
    for combo in itertools.product(*(o[2] for o in options)):
        bind: Dict[str, G.Color] = {}
        need = Counter()
        ok = True
        for (p, v, _), c in zip(options, combo):
            if v in bind and bind[v] != c:
                ok = False
                break
            bind[v] = c
            need[(p, c)] += 1
        if ok and m >= Marking(counts=need):
            yield bind


def _ckey(c):
    return (1, c) if isinstance(c, tuple) else (0, c)


def enabled_modes(n: HLNet, m: Marking, t: Transition) -> List[Dict[str, G.Color]]:
    from .solver import enumerate_models
    modes = []
    free = [v for v in t.vars if v not in {v for _, v in t.pre}]
    if free and not G.is_finite(n.domain):
        # try the guard under the input binding; infinitely many modes are reported
        raise InfiniteModes(f"{t.name} chooses {free} from the infinite domain {n.domain}")
    for bind in _token_choices(m, t):
        g = G.substitute(t.guard, bind)
        if not free:
            if G.evaluate(g, bind):
                modes.append(dict(bind))
            continue
        for a in enumerate_models(g, n.domain, variables=free):
            s = dict(bind)
            s.update(a)
            modes.append(s)
    modes.sort(key=lambda s: tuple(_ckey(s[v]) for v in t.vars))
    return modes


def fire(m: Marking, t: Transition, sigma: Mapping[str, G.Color]) -> Marking:
    if not G.evaluate(t.guard, sigma):
        raise NetError(f"guard of {t.name} is false in mode {dict(sigma)}")
    pre = Marking((p, sigma[v]) for p, v in t.pre)
    if not m >= pre:
        raise NetError(f"{t.name} not enabled in mode {dict(sigma)}")
    return (m - pre) + Marking((p, sigma[v]) for p, v in t.post)


@dataclass
class Reachability:
    markings: frozenset
    depth: int                     # length of the longest shortest path (BFS diameter)
    complete: bool = True          # False when a step bound cut the search
    dist: Dict[Marking, int] = field(default_factory=dict)


def reachable_markings(n: HLNet, step_bound: Optional[int] = None, cap: int = 1_000_000) -> Reachability:
    start = initial_markings(n)
    dist = {m: 0 for m in start}
    queue = deque(start)
    complete = True
    while queue:
        m = queue.popleft()
        d = dist[m]
        if step_bound is not None and d >= step_bound:
            complete = False if _has_successor(n, m) else complete
            continue
        for t in n.transitions:
            for s in enabled_modes(n, m, t):
                m2 = fire(m, t, s)
                if m2 not in dist:
                    dist[m2] = d + 1
                    if len(dist) > cap:
                        raise NetError(f"more than {cap} reachable markings")
                    queue.append(m2)
    return Reachability(frozenset(dist), max(dist.values()), complete, dist)


def _has_successor(n: HLNet, m: Marking) -> bool:
    return any(enabled_modes(n, m, t) for t in n.transitions)


def is_safe(n: HLNet, cap: int = 1_000_000) -> bool:
    r = reachable_markings(n, cap=cap)
    return all(max(m.places().values(), default=0) <= 1 for m in r.markings)


# ---------------------------------------------------------------------------
# JSON net format

def domain_to_json(d: G.ColorDomain) -> dict:
    if isinstance(d, G.FiniteRange):
        return {"kind": "range", "lo": d.lo, "hi": d.hi}
    if isinstance(d, G.Naturals):
        return {"kind": "nat"}
    if isinstance(d, G.Integers):
        return {"kind": "int"}
    return {"kind": "tuple", "parts": [domain_to_json(p) for p in d.parts]}


def domain_from_json(j: dict) -> G.ColorDomain:
    k = j.get("kind")
    if k == "range":
        return G.FiniteRange(int(j["lo"]), int(j["hi"]))
    if k == "nat":
        return G.Naturals()
    if k == "int":
        return G.Integers()
    if k == "tuple":
        return G.TupleOf(tuple(domain_from_json(p) for p in j["parts"]))
    raise NetError(f"unknown domain kind {k!r}")


def _color_json(c):
    return list(c) if isinstance(c, tuple) else c


def _color_py(c):
    return tuple(c) if isinstance(c, list) else c


def to_json(n: HLNet) -> dict:
    out = {
        "name": n.name,
        "safe": n.safe,
        "domain": domain_to_json(n.domain),
        "places": list(n.places),
        "transitions": [{"name": t.name, "guard": G.show(t.guard)} for t in n.transitions],
        "arcs": [{"place": a.place, "var": a.var, "transition": a.transition, "dir": a.dir, "mult": a.mult}
                 for a in n.arcs],
    }
    if n.initial.is_explicit:
        out["initial"] = {"markings": [[[p, _color_json(c)] for p, c in m.pairs()] for m in n.initial.markings]}
    else:
        out["initial"] = {"places": list(n.initial.places), "vars": list(n.initial.vars),
                          "guard": G.show(n.initial.guard)}
    return out


def from_json(j: dict) -> HLNet:
    try:
        domain = domain_from_json(j["domain"])
        places = tuple(j["places"])
        tinfo = {t["name"]: t for t in j["transitions"]}
        order = [t["name"] for t in j["transitions"]]
        pre: Dict[str, list] = {k: [] for k in order}
        post: Dict[str, list] = {k: [] for k in order}
        unlabelled: Dict[str, bool] = {k: False for k in order}
        for a in j.get("arcs", []):
            tn = a["transition"]
            if tn not in tinfo:
                raise NetError(f"arc refers to unknown transition {tn}")
            var = a.get("var")
            if not var:
                unlabelled[tn] = True
                var = None
            mult = int(a.get("mult", 1))
            side = pre if a["dir"] == "in" else post if a["dir"] == "out" else None
            if side is None:
                raise NetError(f"arc dir must be 'in' or 'out', got {a['dir']!r}")
            side[tn].extend([(a["place"], var)] * mult)
        ts = []
        for name in order:
            guard = G.parse(tinfo[name].get("guard", "true"))
            ps, qs = pre[name], post[name]
            if unlabelled[name]:
                used = {v for _, v in ps + qs if v} | G.free_vars(guard)
                x0 = _fresh_dot_var(used)
                ps = [(p, v or x0) for p, v in ps]
                qs = [(p, v or x0) for p, v in qs]
                guard = G.and_(*G.conjuncts(guard), G.eq(x0, 0))
            ts.append(Transition(name, guard, tuple(ps), tuple(qs)))
        ij = j["initial"]
        if "markings" in ij:
            init = InitialSpec.explicit(*[Marking((p, _color_py(c)) for p, c in m) for m in ij["markings"]])
        else:
            init = InitialSpec.predicate(ij["places"], ij["vars"], G.parse(ij.get("guard", "true")))
        return HLNet(domain, places, tuple(ts), init, j.get("name", "net"), bool(j.get("safe", True)))
    except (KeyError, TypeError) as exc:
        raise NetError(f"malformed net file: missing or mistyped field {exc}") from exc


def _fresh_dot_var(used) -> str:
    """Unlabelled arcs carry colour 0 through a fresh variable."""
    name = "x0"
    k = 0
    while name in used:
        k += 1
        name = f"x0_{k}"
    return name


def load(path) -> HLNet:
    with open(path) as fh:
        try:
            j = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetError(f"{path}: invalid JSON: {exc}") from exc
    return from_json(j)


def dump(n: HLNet, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json(n), fh, indent=1)
