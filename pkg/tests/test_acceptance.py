"""End-to-end acceptance checks; the terminal summary prints one verdict line per criterion."""
import random
import time
from collections import Counter

import pytest

from hlunfold import guards as G
from hlunfold.benchmarks import gen_fork_join, instance, is_mode_deterministic, run_benchmark
from hlunfold.branching import BranchingProcess
from hlunfold.cutoff import config_references, cone_references, covered
from hlunfold.expansion import expand, isomorphic, skeleton
from hlunfold.library import color_conflict_net, nsc_cycles_net, running_example, simple_nsc_net
from hlunfold.oracles import (check_completeness, check_extension_property, check_marking_representation,
                              check_pt_completeness, expand_prefix)
from hlunfold.orders import compare
from hlunfold.solver import Sat, Solver, SolverConfig, Unsat
from hlunfold.unfolder import CAP, COMPLETE, UnfoldConfig, build_symbolic_prefix, unfold_expansion

from conftest import needs_z3
from strategies import random_formula, random_safe_net

ENUM = SolverConfig(backend="enumerator")
EXTERNAL = SolverConfig(backend="external")
_elapsed = Counter()


def criterion(n, title):
    return pytest.mark.criterion(n, title)


class timed:
    def __init__(self, bucket):
        self.bucket = bucket

    def __enter__(self):
        self.t = time.perf_counter()

    def __exit__(self, *exc):
        _elapsed[self.bucket] += time.perf_counter() - self.t


# ---------------------------------------------------------------------------
c1 = criterion(1, "running example m=3")


@pytest.fixture(scope="module")
def running3():
    t = time.perf_counter()
    sym = build_symbolic_prefix(running_example(3), UnfoldConfig(solver=ENUM))
    low = unfold_expansion(running_example(3))
    rep = check_completeness(sym.process)
    return sym, low, rep, time.perf_counter() - t


@c1
def test_running_example_cutoff_set(running3):
    bp = running3[0].process
    counts = Counter(e.transition for e in bp.events)
    assert counts["eps"] == 2 and counts["t"] == 2
    first_eps = next(e for e in bp.events if e.transition == "eps" and not e.cutoff)
    cut = [e for e in bp.events if e.cutoff]
    assert sorted(e.transition for e in cut) == ["eps", "t"]
    # both cut-offs sit on top of the first eps
    assert all(first_eps.id in e.cone for e in cut)


@c1
def test_running_example_complete(running3):
    assert running3[2].complete


@c1
def test_running_example_lowlevel_count(running3):
    low = running3[1]
    assert low.conditions + low.events == 500


@c1
def test_running_example_runtime(running3):
    assert running3[3] < 10


# ---------------------------------------------------------------------------
c2 = criterion(2, "fork and join sizes")


@c2
def test_fork_join_symbolic_finite():
    with timed("forkjoin"):
        for m in range(1, 6):
            for n in range(1, 7):
                r = build_symbolic_prefix(gen_fork_join(m, n), UnfoldConfig(solver=ENUM))
                assert r.conditions + r.events == n + 3, (m, n)


@c2
@needs_z3
def test_fork_join_symbolic_naturals():
    with timed("forkjoin"):
        for n in range(1, 7):
            r = build_symbolic_prefix(gen_fork_join(G.Naturals(), n), UnfoldConfig(solver=EXTERNAL))
            assert r.status == COMPLETE and r.conditions + r.events == n + 3, n


@c2
def test_fork_join_lowlevel():
    with timed("forkjoin"):
        for m in (1, 2):
            for n in (1, 2, 3):
                r = unfold_expansion(gen_fork_join(m, n))
                assert r.conditions + r.events == (n + 2) * (m + 1) ** n + 1, (m, n)


@c2
def test_fork_join_runtime():
    assert _elapsed["forkjoin"] < 30


# ---------------------------------------------------------------------------
c3 = criterion(3, "water pouring rows")
WATER = [([3, 5], 4, True, 6, 90, 75), ([9, 12], 4, False, None, 106, 74), ([15, 17], 10, True, 18, 258, 195)]


@c3
@pytest.mark.parametrize("caps, target, reach, steps, B, E", WATER, ids=["3-5", "9-12", "15-17"])
def test_water_row(caps, target, reach, steps, B, E):
    with timed("water"):
        r = run_benchmark("water", "symbolic", UnfoldConfig(solver=ENUM), buckets=caps, target=target)
    assert (r["reachable"], r["steps"], r["conditions"], r["events"]) == (reach, steps, B, E)


@c3
def test_water_runtime():
    assert _elapsed["water"] < 120


# ---------------------------------------------------------------------------
c4 = criterion(4, "mastermind rows")
MASTERMIND = [(1, "lowlevel", 219, 48), (1, "symbolic", 14, 3), (2, "lowlevel", 1719, 438),
              (2, "symbolic", 24, 6), (4, "symbolic", 44, 12)]


@c4
@pytest.mark.parametrize("k, mode, B, E", MASTERMIND, ids=[f"k{r[0]}-{r[1]}" for r in MASTERMIND])
def test_mastermind_row(k, mode, B, E):
    with timed("mastermind"):
        r = run_benchmark("mastermind", mode, UnfoldConfig(solver=ENUM), m=3, n=3, k=k)
    assert r["status"] == COMPLETE
    assert (r["conditions"], r["events"]) == (B, E)


@c4
def test_mastermind_runtime():
    assert _elapsed["mastermind"] < 300


# ---------------------------------------------------------------------------
c5 = criterion(5, "colour conflict triple")


def _conflict_process(domain=None):
    bp = BranchingProcess(color_conflict_net(domain))
    e0 = bp.add_event("t0", [bp.b0[0]])
    outs = [b for b, _ in e0.postset]
    es = [bp.add_event(f"t{i}", [outs[i - 1]]) for i in (1, 2, 3)]
    return bp, [e.id for e in es], [e.postset[0][0] for e in es]


def _conflict_outcomes(bp, es, qs, s):
    pairs = [bp.is_color_conflict(s, events=[es[i], es[j]]) for i in range(3) for j in range(i + 1, 3)]
    return bp.is_color_conflict(s, events=es), pairs, bp.is_co_set(qs, s)


@c5
@needs_z3
def test_colour_conflict_over_integers():
    bp, es, qs = _conflict_process()
    with Solver(G.Integers(), EXTERNAL) as s:
        assert _conflict_outcomes(bp, es, qs, s) == (True, [False] * 3, False)


@c5
def test_colour_conflict_finite_truncation():
    d = G.FiniteRange(-3, 3)
    bp, es, qs = _conflict_process(d)
    assert _conflict_outcomes(bp, es, qs, Solver(d, ENUM)) == (True, [False] * 3, False)


# ---------------------------------------------------------------------------
c6 = criterion(6, "symbolically compact nets")


@c6
@needs_z3
def test_one_place_net_star_mode():
    r = build_symbolic_prefix(simple_nsc_net(), UnfoldConfig(cutoff="star", solver=EXTERNAL))
    assert r.status == COMPLETE
    assert [e.transition for e in r.process.events if not e.cutoff] == ["t"]


@c6
@needs_z3
def test_cycles_net_standard_diverges_star_terminates():
    std = build_symbolic_prefix(nsc_cycles_net(), UnfoldConfig(max_events=50, solver=EXTERNAL))
    assert std.status == CAP
    chain = sorted(e.depth for e in std.process.events if e.transition == "t" and not e.cutoff)
    # an unbroken chain of ever deeper t events
    assert chain[-1] >= 15 and set(range(1, chain[-1] + 1)) <= set(chain)
    star = build_symbolic_prefix(nsc_cycles_net(), UnfoldConfig(cutoff="star", max_events=50, solver=EXTERNAL))
    assert star.status == COMPLETE and star.events < 50


# ---------------------------------------------------------------------------
c7 = criterion(7, "property suites")
DEPTH_CASES = [(running_example(3), 4), (nsc_cycles_net(3), 4), (gen_fork_join(2, 2), 3)]


@c7
@pytest.mark.parametrize("net, depth", DEPTH_CASES, ids=lambda x: getattr(x, "name", str(x)))
def test_marking_representation_and_extension(net, depth):
    with timed("props"):
        bp = build_symbolic_prefix(net, UnfoldConfig(cutoff="none", max_depth=depth, solver=ENUM)).process
        assert check_marking_representation(bp, max_depth=depth)
        assert check_extension_property(bp, depth) == []
        full = build_symbolic_prefix(gen_fork_join(1, 2), UnfoldConfig(cutoff="none", solver=ENUM)).process
        assert check_marking_representation(full)


@c7
@pytest.mark.parametrize("net, depth", DEPTH_CASES, ids=lambda x: getattr(x, "name", str(x)))
def test_implication_equals_enumeration(net, depth):
    with timed("props"):
        bp = build_symbolic_prefix(net, UnfoldConfig(cutoff="none", max_depth=min(depth, 3), solver=ENUM)).process
        s = Solver(net.domain, ENUM)
        for e in bp.events:
            for refs in (cone_references(bp, e.id), config_references(bp, e.id)):
                theirs = set().union(*(bp.configuration_markings(R) for R in refs)) if refs else set()
                assert covered(bp, e.cone, refs, s) == (bp.configuration_markings(e.cone) <= theirs)


@c7
@pytest.mark.parametrize("net", [running_example(3), gen_fork_join(2, 2)], ids=lambda n: n.name)
def test_expansion_completeness_correspondence(net):
    with timed("props"):
        pt = expand(net)
        full = build_symbolic_prefix(net, UnfoldConfig(solver=ENUM)).events
        for cap in range(1, full + 1):
            bp = build_symbolic_prefix(net, UnfoldConfig(max_events=cap, solver=ENUM)).process
            assert check_completeness(bp).complete == check_pt_completeness(expand_prefix(bp, pt), pt).complete


@c7
def test_foata_order_total():
    with timed("props"):
        bp = build_symbolic_prefix(nsc_cycles_net(3), UnfoldConfig(cutoff="none", max_depth=5, solver=ENUM)).process
        configs = list(bp.configurations())
        rng = random.Random(1000)
        for _ in range(1000):
            c1, c2 = rng.sample(configs, 2)
            assert compare("f", c1, c2, bp) in ("less", "greater")


@c7
def test_pt_degeneration():
    with timed("props"):
        rng = random.Random(7)
        for _ in range(200):
            n = random_safe_net(rng)
            a, b = build_symbolic_prefix(n, UnfoldConfig(solver=ENUM)), unfold_expansion(n)
            assert isomorphic(skeleton(a.process), skeleton(b.process)), n.name
            assert len(a.cutoffs) == len(b.cutoffs)


@c7
def test_water_mode_determinism_skeleton():
    with timed("props"):
        net, _, _ = instance("water", buckets=[3, 5], target=4)
        assert is_mode_deterministic(net)
        a, b = build_symbolic_prefix(net, UnfoldConfig(solver=ENUM)), unfold_expansion(net)
        assert a.status == b.status == COMPLETE
        assert isomorphic(skeleton(a.process), skeleton(b.process))


@c7
def test_property_suite_runtime():
    assert _elapsed["props"] < 300


# ---------------------------------------------------------------------------
c8 = criterion(8, "backend agreement")


@c8
@needs_z3
def test_enumerator_agrees_with_external_solver():
    d = G.FiniteRange(-2, 3)
    rng = random.Random(20261014)
    disagree = []
    with Solver(d, ENUM) as en, Solver(d, EXTERNAL) as ex:
        for i in range(500):
            f = random_formula(rng, rng.randint(1, 3))
            a, b = en.check_sat(f), ex.check_sat(f)
            assert isinstance(a, (Sat, Unsat)) and isinstance(b, (Sat, Unsat)), G.show(f)
            if type(a) is not type(b):
                disagree.append(G.show(f))
            elif isinstance(b, Sat):
                env = {v: b.model.get(v, 0) for v in G.free_vars(f)}
                assert G.evaluate(f, env, d), G.show(f)
    assert disagree == []
