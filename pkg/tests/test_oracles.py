import pytest

from hlunfold import guards as G
from hlunfold.benchmarks import gen_fork_join, instance
from hlunfold.expansion import expand
from hlunfold.library import color_conflict_net, nsc_cycles_net, running_example
from hlunfold.net import Marking
from hlunfold.oracles import (check_completeness, check_extension_property,
                              check_marking_representation, check_pt_completeness, expand_prefix,
                              instantiated_configurations, non_cutoff_bound)
from hlunfold.unfolder import UnfoldConfig, build_symbolic_prefix, unfold_expansion


def nets():
    water, _, _ = instance("water", buckets=[2, 3], target=1)
    hob, _, _ = instance("hobbits", m=1, n=1)
    return [running_example(2), running_example(3), gen_fork_join(2, 2), nsc_cycles_net(3), water, hob,
            color_conflict_net(G.FiniteRange(-1, 1))]


@pytest.mark.parametrize("net", nets(), ids=lambda n: n.name)
@pytest.mark.parametrize("cutoff", ["standard", "star"])
def test_prefixes_are_complete(net, cutoff):
    r = build_symbolic_prefix(net, UnfoldConfig(cutoff=cutoff))
    rep = check_completeness(r.process)
    assert rep.complete, (rep.missing[:3], rep.unextended[:3])
    k, reach = non_cutoff_bound(r.process, net)
    assert k <= reach


@pytest.mark.parametrize("net", nets()[:5], ids=lambda n: n.name)
def test_lowlevel_prefixes_are_complete(net):
    r = unfold_expansion(net)
    assert check_pt_completeness(r.process, r.process.net).complete
    k, reach = non_cutoff_bound(r.process, net)
    assert k <= reach


@pytest.mark.parametrize("net", nets()[:5], ids=lambda n: n.name)
def test_symbolic_completeness_matches_expansion(net):
    pt = expand(net)
    full = build_symbolic_prefix(net).events
    outcomes = set()
    for cap in range(1, full + 1):
        bp = build_symbolic_prefix(net, UnfoldConfig(max_events=cap)).process
        a = check_completeness(bp).complete
        b = check_pt_completeness(expand_prefix(bp, pt), pt).complete
        assert a == b, cap
        outcomes.add(a)
    assert True in outcomes


def test_truncated_prefixes_are_incomplete():
    # alpha and beta only: the empty marking reached by t is missing
    rep = check_completeness(build_symbolic_prefix(running_example(3), UnfoldConfig(max_events=2)).process)
    assert Marking() in rep.missing
    # with t as well every marking is there, but nothing extends by eps
    rep = check_completeness(build_symbolic_prefix(running_example(3), UnfoldConfig(max_events=3)).process)
    assert not rep.missing and len(rep.unextended) == 9


@pytest.mark.parametrize("net, depth", [
    (running_example(3), 3), (running_example(2), 4), (color_conflict_net(G.FiniteRange(-2, 2)), 2),
    (nsc_cycles_net(2), 4),
], ids=lambda x: getattr(x, "name", str(x)))
def test_unfolding_represents_reachable_markings(net, depth):
    bp = build_symbolic_prefix(net, UnfoldConfig(cutoff="none", max_depth=depth)).process
    assert check_marking_representation(bp, max_depth=depth)
    assert check_extension_property(bp, depth) == []


def test_unfolding_of_finite_occurrence_net_is_exact():
    # colour-conflict net: the full unfolding is finite, so the markings match exactly
    bp = build_symbolic_prefix(color_conflict_net(G.FiniteRange(-2, 2)), UnfoldConfig(cutoff="none")).process
    assert check_marking_representation(bp)


def test_instantiated_configurations_are_unique():
    bp = build_symbolic_prefix(running_example(3)).process
    seen = set()
    for C, iota in instantiated_configurations(bp):
        key = (C, tuple(sorted(iota.items())))
        assert key not in seen
        seen.add(key)
        assert bp.config_pred(C) is not None
        assert G.evaluate(bp.config_pred(C), iota)
    assert len({C for C, _ in seen}) == len(list(bp.configurations()))


def test_expanded_prefix_is_an_occurrence_net():
    bp = build_symbolic_prefix(running_example(3)).process
    e = expand_prefix(bp)
    consumed = {}
    for ev, pre in enumerate(e.ev_pre):
        for b in pre:
            consumed.setdefault(b, []).append(ev)
    # every condition has at most one producer and events are unique per (label, preset)
    sigs = [(e.ev_trans[i], tuple(sorted(p))) for i, p in enumerate(e.ev_pre)]
    assert len(set(sigs)) == len(sigs)
    assert all(ev in e.ev_cone[ev] for ev in range(len(e.ev_trans)))
