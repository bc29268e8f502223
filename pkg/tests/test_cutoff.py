import pytest

from hlunfold import guards as G
from hlunfold.benchmarks import gen_fork_join, gen_water_pouring
from hlunfold.branching import BranchingProcess
from hlunfold.cutoff import (ReferenceIndex, config_constraint, config_references, cone_references,
                             covered, cut_constraint, is_cutoff, is_cutoff_star)
from hlunfold.library import nsc_cycles_net, running_example
from hlunfold.net import HLNet, InitialSpec, Marking, Transition
from hlunfold.solver import Solver, SolverConfig
from hlunfold.unfolder import UnfoldConfig, build_symbolic_prefix


def enum(n):
    return Solver(n.domain, SolverConfig(backend="enumerator"))


def equivalent(s, a, b):
    return s.implies(a, b) and s.implies(b, a)


CASES = [(running_example(2), 3), (running_example(3), 3), (nsc_cycles_net(3), 4),
         (gen_fork_join(2, 2), 2), (gen_water_pouring([2, 3], 1), 2)]


@pytest.mark.parametrize("net, depth", CASES, ids=[c[0].name for c in CASES])
def test_implication_matches_marking_enumeration(net, depth):
    bp = build_symbolic_prefix(net, UnfoldConfig(cutoff="none", max_depth=depth)).process
    s = enum(net)
    for e in bp.events:
        for refs in (cone_references(bp, e.id), config_references(bp, e.id)):
            mine = bp.configuration_markings(e.cone)
            theirs = set()
            for R in refs:
                theirs |= bp.configuration_markings(R)
            assert covered(bp, e.cone, refs, s) == (mine <= theirs), (e.id, refs)


@pytest.mark.parametrize("internal", [False, True])
def test_running_example_cutoffs(internal):
    bp = build_symbolic_prefix(running_example(3), UnfoldConfig(cutoff="none", max_depth=3)).process
    s = enum(bp.net)
    got = [e.transition for e in bp.events if is_cutoff(bp, e.id, s, internal)]
    # the second t and the second eps, both stacked on the first eps
    assert got == ["t", "eps"]
    for e in bp.events:
        if is_cutoff(bp, e.id, s, internal):
            assert is_cutoff_star(bp, e.id, s, internal)


def test_cut_constraint_equals_config_constraint_when_nothing_is_hidden():
    bp = build_symbolic_prefix(running_example(3), UnfoldConfig(cutoff="none", max_depth=3)).process
    s = enum(bp.net)
    checked = 0
    for C in bp.configurations():
        cut = bp.cut(C)
        seen = set()
        for b in cut:
            e = bp.conditions[b].event
            if e >= 0:
                seen |= bp.events[e].cone
        if seen == set(C):
            checked += 1
            assert equivalent(s, cut_constraint(bp, sorted(cut)), config_constraint(bp, C))
    assert checked >= 5


def test_config_constraint_keeps_hidden_predicates():
    # e1 copies x to c and d; e2 eats d demanding 3: afterwards c must hold 3
    d = G.FiniteRange(0, 4)
    t1 = Transition("t1", G.eq("y", "x"), (("a", "z"),), (("c", "x"), ("d", "y")))
    t2 = Transition("t2", G.eq("y", 3), (("d", "y"),), ())
    n = HLNet(d, ("a", "c", "d"), (t1, t2), InitialSpec.explicit(Marking.of(("a", 0))))
    bp = BranchingProcess(n)
    e1 = bp.add_event("t1", [bp.b0[0]])
    e2 = bp.add_event("t2", [e1.postset[1][0]])
    C = {e1.id, e2.id}
    s = enum(n)
    exact = config_constraint(bp, C)
    loose = cut_constraint(bp, sorted(bp.cut(C)))
    assert s.implies(exact, G.eq("c", 3))
    assert not s.implies(loose, G.eq("c", 3))
    assert bp.configuration_markings(C) == {Marking.of(("c", 3))}


def test_initial_reference():
    bp = build_symbolic_prefix(nsc_cycles_net(3), UnfoldConfig(cutoff="none", max_depth=2)).process
    # beta after alpha returns to the initial cut labels
    ab = [e for e in bp.events if e.transition == "beta"][0]
    assert frozenset() in cone_references(bp, ab.id)
    assert frozenset() not in cone_references(bp, ab.id, include_initial=False)
    s = enum(bp.net)
    assert is_cutoff(bp, ab.id, s)
    assert not is_cutoff(bp, ab.id, s, include_initial=False)


def test_no_references_no_cutoff():
    bp = build_symbolic_prefix(running_example(3)).process
    assert covered(bp, bp.events[0].cone, [], enum(bp.net)) is False


def test_reference_index():
    r = ReferenceIndex()
    r.add(("c", "d"), (2,), G.TRUE, frozenset({0, 1}))
    r.add(("c", "d"), (4,), G.TRUE, frozenset({0, 1, 2}))
    r.add(("a",), (0,), G.TRUE, frozenset())
    assert [x[0] for x in r.smaller(("c", "d"), (3,))] == [(2,)]
    assert r.smaller(("q",), (9,)) == []
