"""Random formulas and small nets shared by the property tests."""
import random

from hypothesis import strategies as st

from hlunfold import guards as G
from hlunfold.net import HLNet, InitialSpec, Marking, Transition

VARS = ("x", "y", "z")
OPS = ("=", "distinct", "<=", "<", ">=", ">")


def random_term(rng: random.Random, depth: int, names=VARS):
    if depth <= 0 or rng.random() < 0.35:
        return G.Var(rng.choice(names)) if rng.random() < 0.7 else G.Const(rng.randint(-2, 4))
    op = rng.choice(("+", "-", "*", "ite", "min", "max"))
    a, b = random_term(rng, depth - 1, names), random_term(rng, depth - 1, names)
    if op == "*":
        b = G.Const(rng.randint(-2, 3))  # keep products linear on one side
    if op == "ite":
        return G.Ite(random_formula(rng, depth - 1, names, quant=False), a, b)
    return G.Arith(op, (a, b))


def random_formula(rng: random.Random, depth: int = 3, names=VARS, quant: bool = True):
    r = rng.random()
    if depth <= 0 or r < 0.3:
        return G.Cmp(rng.choice(OPS), random_term(rng, 1, names), random_term(rng, 1, names))
    if r < 0.55:
        return G.and_(*(random_formula(rng, depth - 1, names, quant) for _ in range(rng.randint(2, 3))))
    if r < 0.75:
        return G.or_(*(random_formula(rng, depth - 1, names, quant) for _ in range(rng.randint(2, 3))))
    if r < 0.85 or not quant:
        return G.not_(random_formula(rng, depth - 1, names, quant))
    v = rng.choice(names)
    return G.exists([v], random_formula(rng, depth - 1, names, quant))


formulas = st.builds(lambda seed, d: random_formula(random.Random(seed), d),
                     st.integers(0, 2**32 - 1), st.integers(0, 3))
terms = st.builds(lambda seed, d: random_term(random.Random(seed), d),
                  st.integers(0, 2**32 - 1), st.integers(0, 3))
assignments = st.fixed_dictionaries({v: st.integers(-3, 5) for v in VARS})


def random_safe_net(rng: random.Random, domain=G.FiniteRange(0, 0), components: int = 2, size: int = 3,
                    sync: int = 2) -> HLNet:
    """Parallel composition of state machines with a few synchronising transitions.

    Every transition moves one token inside each component it touches, so the net is safe.
    Guards are trivial; with a singleton domain this is a P/T net in disguise.
    """
    places, trans, init = [], [], []
    for c in range(components):
        ps = [f"s{c}_{i}" for i in range(size)]
        places += ps
        init.append((ps[0], domain_values_first(domain)))
        for i in range(size):
            j = rng.randrange(size)
            if rng.random() < 0.7:
                trans.append(Transition(f"m{c}_{i}", G.TRUE, ((ps[i], "x"),), ((ps[j], "x"),)))
    for k in range(sync):
        cs = rng.sample(range(components), 2)
        pre, post = [], []
        for n, c in enumerate(cs):
            pre.append((f"s{c}_{rng.randrange(size)}", f"x{n}"))
            post.append((f"s{c}_{rng.randrange(size)}", f"x{n}"))
        trans.append(Transition(f"sync{k}", G.TRUE, tuple(pre), tuple(post)))
    return HLNet(domain, tuple(places), tuple(trans), InitialSpec.explicit(Marking(init)), f"rand{rng.random():.6f}")


def domain_values_first(domain):
    return G.domain_values(domain)[0]


safe_nets = st.builds(lambda seed: random_safe_net(random.Random(seed)), st.integers(0, 2**32 - 1))
