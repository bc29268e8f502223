"""Generators for the four benchmark families and the mode-determinism checks."""
from __future__ import annotations

from typing import List, Optional, Sequence

from . import guards as G
from .guards import Var
from .net import HLNet, InitialSpec, Marking, Transition, enabled_modes, reachable_markings


def gen_fork_join(domain: G.ColorDomain, n: int) -> HLNet:
    """t moves the token from p0 and puts an arbitrary colour on each of p1..pn; eps consumes them."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(domain, int):
        domain = G.FiniteRange(0, domain)
    mids = [f"p{i}" for i in range(1, n + 1)]
    xs = [f"x{i}" for i in range(1, n + 1)]
    t = Transition("t", G.eq("z", 0), (("p0", "z"),), tuple(zip(mids, xs)))
    eps = Transition("eps", G.TRUE, tuple(zip(mids, xs)), ())
    return HLNet(domain, tuple(["p0"] + mids), (t, eps),
                 InitialSpec.explicit(Marking.of(("p0", 0))), f"forkjoin_{n}")


# ---------------------------------------------------------------------------

def bucket(i: int) -> str:
    return f"bucket{i}"


def gen_water_pouring(caps: Sequence[int], target: int, domain: Optional[G.ColorDomain] = None) -> HLNet:
    """Buckets with fill/empty transitions, a transfer for every ordered pair, and one goal
    transition per bucket large enough to hold ``target``."""
    caps = list(caps)
    if not caps or any(c <= 0 for c in caps):
        raise ValueError("capacities must be positive")
    domain = domain or G.FiniteRange(0, max(caps))
    k = len(caps)
    ts: List[Transition] = []
    for i, c in enumerate(caps):
        b = bucket(i)
        ts.append(Transition(f"fill{i}", G.eq("y", c), ((b, "x"),), ((b, "y"),)))
        ts.append(Transition(f"empty{i}", G.eq("y", 0), ((b, "x"),), ((b, "y"),)))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            s = G.add("x1", "x2")
            fits = G.and_(G.le(s, caps[j]), G.eq("y1", 0), G.eq("y2", s))
            over = G.and_(G.gt(s, caps[j]), G.eq("y1", G.sub(s, caps[j])), G.eq("y2", caps[j]))
            ts.append(Transition(f"transfer{i}_{j}", G.or_(fits, over),
                                 ((bucket(i), "x1"), (bucket(j), "x2")),
                                 ((bucket(i), "y1"), (bucket(j), "y2"))))
    ts += water_goals(caps, target)
    init = InitialSpec.explicit(Marking((bucket(i), 0) for i in range(k)))
    name = "water_" + "_".join(map(str, caps)) + f"_to{target}"
    return HLNet(domain, tuple(bucket(i) for i in range(k)), tuple(ts), init, name)


def water_goals(caps: Sequence[int], target: int) -> List[Transition]:
    return [Transition(f"goal{i}", G.eq("x", target), ((bucket(i), "x"),), ())
            for i, c in enumerate(caps) if target <= c]


def water_goal_names(caps: Sequence[int], target: int) -> tuple:
    return tuple(t.name for t in water_goals(caps, target))


# ---------------------------------------------------------------------------

def _h(x):
    return G.proj(x, 0)


def _o(x):
    return G.proj(x, 1)


def _bank_safe(x):
    return G.or_(G.eq(_h(x), 0), G.ge(_h(x), _o(x)))


def gen_hobbits_orcs(m: int, n: int, domain: Optional[G.ColorDomain] = None, safety: bool = True,
                     goal: bool = True) -> HLNet:
    """Colours are (hobbits, orcs) pairs on the two banks and in the boat.

    The boat is either docked empty on a bank or loaded on the river.  Loading takes 1..n
    passengers, unloading adds them to the other bank; with ``safety`` hobbits are never
    outnumbered on a bank or in the boat.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    domain = domain or G.TupleOf((G.Naturals(), G.Naturals()))
    zero = G.TupleLit((G.Const(0), G.Const(0)))
    ts = []
    for side, other, river in (("l", "r", "river_lr"), ("r", "l", "river_rl")):
        # load: x on the bank, boat takes b, bank keeps y
        parts = [G.eq("e", zero), G.le(1, G.add(_h("b"), _o("b"))), G.le(G.add(_h("b"), _o("b")), n),
                 G.eq(_h("y"), G.sub(_h("x"), _h("b"))), G.eq(_o("y"), G.sub(_o("x"), _o("b"))),
                 G.ge(_h("y"), 0), G.ge(_o("y"), 0)]
        if safety:
            parts += [_bank_safe("y"), _bank_safe("b")]
        ts.append(Transition(f"load_{side}", G.and_(*parts),
                             ((f"bank_{side}", "x"), (f"docked_{side}", "e")),
                             ((f"bank_{side}", "y"), (river, "b"))))
    for side, river in (("r", "river_lr"), ("l", "river_rl")):
        parts = [G.eq("e", zero), G.eq(_h("y"), G.add(_h("x"), _h("b"))), G.eq(_o("y"), G.add(_o("x"), _o("b")))]
        if safety:
            parts.append(_bank_safe("y"))
        ts.append(Transition(f"unload_{side}", G.and_(*parts),
                             ((f"bank_{side}", "x"), (river, "b")),
                             ((f"bank_{side}", "y"), (f"docked_{side}", "e"))))
    if goal:
        ts.append(hobbits_goal(m))
    places = ("bank_l", "bank_r", "docked_l", "docked_r", "river_lr", "river_rl")
    init = InitialSpec.explicit(Marking.of(("bank_l", (m, m)), ("bank_r", (0, 0)), ("docked_l", (0, 0))))
    return HLNet(domain, places, tuple(ts), init, f"hobbits_{m}_{n}")


def hobbits_goal(m: int) -> Transition:
    return Transition("goal", G.eq("x", G.TupleLit((G.Const(m), G.Const(m)))), (("bank_r", "x"),), ())


def boat_occupancies(n: int) -> int:
    """Passenger pairs allowed by the capacity alone: sum over i = 1..n of (i + 1)."""
    return n * (n + 3) // 2


# ---------------------------------------------------------------------------

def board_code(guess: Sequence[int], m: int) -> int:
    return sum(g * (m + 1) ** j for j, g in enumerate(guess))


def pins(code: Sequence[int], guess: Sequence[int]):
    """Procedural (red, white) count for codes without repeated colours."""
    red = sum(1 for c, g in zip(code, guess) if c == g)
    white = sum(1 for g in guess if g in code) - red
    return red, white


def result_code(red: int, white: int, n: int) -> int:
    return red * (n + 1) + white


def mastermind_domain(m: int, n: int) -> G.FiniteRange:
    return G.FiniteRange(0, max(m, (m + 1) ** n - 1, result_code(n, n, n)))


def evaluate_guard(m: int, n: int, cs: Sequence[str], gs: Sequence[str], board: str, result: str) -> G.Expr:
    ind = lambda a, b: G.ite(G.eq(a, b), 1, 0)
    red = G.add(*[ind(gs[i], cs[i]) for i in range(n)]) if n > 1 else ind(gs[0], cs[0])
    cross = [ind(gs[i], cs[j]) for i in range(n) for j in range(n) if i != j]
    white = G.add(*cross) if len(cross) > 1 else (cross[0] if cross else G.Const(0))
    rng = [G.and_(G.le(1, v), G.le(v, m)) for v in list(cs) + list(gs)]
    board_e = G.add(*[G.mul(g, (m + 1) ** j) for j, g in enumerate(gs)]) if n > 1 else G.Var(gs[0])
    return G.and_(*rng, G.eq(board, board_e), G.eq(result, G.add(G.mul(red, n + 1), white)))


def gen_mastermind(m: int, n: int, k: int, domain: Optional[G.ColorDomain] = None) -> HLNet:
    """Code maker picks a code without repeated colours, breaker guesses, evaluate_i puts the board
    and the pin result of attempt i, retry_i hands the breaker attempt i+1 unless all pins are red."""
    if not (m >= n >= 1 and k >= 1):
        raise ValueError("need m >= n >= 1 and k >= 1")
    domain = domain or mastermind_domain(m, n)
    codes = [f"code{i}" for i in range(1, n + 1)]
    guesses = [f"guess{i}" for i in range(1, n + 1)]
    cs = [f"c{i}" for i in range(1, n + 1)]
    gs = [f"g{i}" for i in range(1, n + 1)]

    def distinct(vs):
        parts = [G.and_(G.le(1, v), G.le(v, m)) for v in vs]
        parts += [G.ne(vs[i], vs[j]) for i in range(len(vs)) for j in range(i + 1, len(vs))]
        return G.and_(*parts)

    ts = [
        Transition("pick", G.and_(G.eq("z", 0), distinct(cs)), (("maker", "z"),), tuple(zip(codes, cs))),
        Transition("guess", G.and_(G.eq("z", 0), distinct(gs)), (("breaker", "z"),), tuple(zip(guesses, gs))),
    ]
    places = ["maker", "breaker"] + codes + guesses
    for i in range(1, k + 1):
        turn, board, result = f"turn{i}", f"board{i}", f"result{i}"
        places += [turn, board, result]
        g = G.and_(G.eq("z", 0), evaluate_guard(m, n, cs, gs, "bd", "rs"))
        ts.append(Transition(f"evaluate{i}", g,
                             tuple(zip(codes, cs)) + tuple(zip(guesses, gs)) + ((turn, "z"),),
                             tuple(zip(codes, cs)) + ((board, "bd"), (result, "rs"))))
    for i in range(1, k):
        ts.append(Transition(f"retry{i}", G.and_(G.lt("rs", n * (n + 1)), G.eq("z", 0)),
                             ((f"result{i}", "rs"),), (("breaker", "z"), (f"turn{i + 1}", "z"))))
    init = InitialSpec.explicit(Marking.of(("maker", 0), ("breaker", 0), ("turn1", 0)))
    return HLNet(domain, tuple(places), tuple(ts), init, f"mastermind_{m}_{n}_{k}")


def mastermind_goals(n: int, k: int) -> List[Transition]:
    """Goal: some attempt is answered with n-1 red pins and one white pin."""
    target = result_code(n - 1, 1, n)
    return [Transition(f"goal{i}", G.eq("rs", target), ((f"result{i}", "rs"),), ()) for i in range(1, k + 1)]


# ---------------------------------------------------------------------------

def is_mode_deterministic(n: HLNet, method: str = "exhaustive", solver=None) -> Optional[bool]:
    """At most one enabled mode per transition in every reachable marking.

    ``static`` checks the sufficient condition that the input variables determine all other
    variables; it answers True or None (unknown).
    """
    if method == "exhaustive":
        r = reachable_markings(n)
        return all(len(enabled_modes(n, m, t)) <= 1 for m in r.markings for t in n.transitions)
    if method != "static":
        raise ValueError(f"unknown method {method!r}")
    from .solver import Solver
    own = solver is None
    s = solver or Solver(n.domain)
    try:
        for t in n.transitions:
            ins = {v for _, v in t.pre}
            outs = [v for v in t.vars if v not in ins]
            if not outs:
                continue
            ren = {v: f"{v}'2" for v in outs}
            other = G.rename(t.guard, ren)
            differ = G.or_(*[G.ne(Var(v), Var(ren[v])) for v in outs])
            verdict = s.is_sat(G.and_(t.guard, other, differ))
            if verdict is not False:
                return None
        return True
    finally:
        if own:
            s.close()


# ---------------------------------------------------------------------------
# experiment rows

FAMILIES = ("forkjoin", "water", "hobbits", "mastermind")


def instance(family: str, **p):
    """(net without goal transitions, goal transitions, instance label)."""
    if family == "forkjoin":
        m = p.get("m")
        dom = G.Naturals() if m is None else G.FiniteRange(0, m)
        return gen_fork_join(dom, p.get("n", 2)), [], f"m={'nat' if m is None else m} n={p.get('n', 2)}"
    if family == "water":
        caps, target = list(p.get("buckets", (3, 5))), p.get("target", 4)
        net = gen_water_pouring(caps, target)
        keep = [t.name for t in net.transitions if not t.name.startswith("goal")]
        return net.with_transitions([], keep=keep), water_goals(caps, target), \
            f"buckets={','.join(map(str, caps))} target={target}"
    if family == "hobbits":
        m, n = p.get("m", 2), p.get("n", 2)
        dom = G.TupleOf((G.FiniteRange(0, m), G.FiniteRange(0, m)))
        return gen_hobbits_orcs(m, n, dom, goal=False), [hobbits_goal(m)], f"m={m} n={n}"
    if family == "mastermind":
        m, n, k = p.get("m", 3), p.get("n", 3), p.get("k", 1)
        return gen_mastermind(m, n, k), [], f"m={m} n={n} k={k}"
    raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


def run_benchmark(family: str, mode: str = "symbolic", cfg=None, **params) -> dict:
    """Unfold one instance (as a reachability query when the family has goals) and report sizes."""
    from .unfolder import UnfoldConfig, build_symbolic_prefix, check_reachability, unfold_expansion
    cfg = cfg or UnfoldConfig()
    net, goals, label = instance(family, **params)
    row = {"family": family, "instance": label, "mode": mode}
    if goals:
        r = check_reachability(net, goals, cfg, mode=mode)
        res = r.prefix
        row.update(reachable=r.reachable, steps=r.steps)
    else:
        res = build_symbolic_prefix(net, cfg) if mode == "symbolic" else unfold_expansion(net, cfg)
        row.update(reachable=None, steps=None)
    row.update(res.stats())
    row["nodes"] = row["conditions"] + row["events"]
    return row


CSV_FIELDS = ("family", "instance", "mode", "status", "reachable", "steps", "conditions", "events",
              "nodes", "cutoffs", "solver_calls", "sat_time_ms", "total_ms", "unknown_verdicts")
