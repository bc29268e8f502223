import pytest

from hlunfold import guards as G
from hlunfold.benchmarks import gen_fork_join
from hlunfold.expansion import expand
from hlunfold.library import running_example
from hlunfold.net import Marking, NetError, fire
from hlunfold.unfolder import (CAP, COMPLETE, GOAL, SymbolicUnfolder, UnfoldConfig,
                               build_lowlevel_prefix, build_symbolic_prefix, check_reachability,
                               parse_goal, possible_extensions, rewrite_internal_variables,
                               unfold_expansion)


def lowlevel_nodes(m):
    return 6 * m ** 4 + 4 * m + 2 * (m // 3) + 2


@pytest.mark.parametrize("internal", [True, False])
def test_running_example_symbolic(internal):
    r = build_symbolic_prefix(running_example(3), UnfoldConfig(internal_vars=internal))
    assert r.status == COMPLETE
    assert (r.conditions, r.events) == (8, 6)
    labels = [e.transition for e in r.process.events]
    assert sorted(labels) == ["alpha", "beta", "eps", "eps", "t", "t"]
    assert [r.process.events[e].transition for e in r.cutoffs] == ["t", "eps"]
    # both cut-offs sit on top of the first eps
    first_eps = labels.index("eps")
    assert all(first_eps in r.process.events[e].cone for e in r.cutoffs)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_running_example_lowlevel_formula(m):
    r = unfold_expansion(running_example(m))
    assert r.conditions + r.events == lowlevel_nodes(m)


def test_running_example_m2_has_no_t():
    r = build_symbolic_prefix(running_example(2))
    assert [e.transition for e in r.process.events].count("t") == 0


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_fork_join_sizes(m, n):
    s = build_symbolic_prefix(gen_fork_join(m, n))
    assert s.conditions + s.events == n + 3
    lo = unfold_expansion(gen_fork_join(m, n))
    assert lo.conditions + lo.events == (n + 2) * (m + 1) ** n + 1


def test_orders_agree_on_completeness():
    from hlunfold.oracles import check_completeness
    for order in "mef":
        for cutoff in ("standard", "star"):
            r = build_symbolic_prefix(running_example(3), UnfoldConfig(order=order, cutoff=cutoff))
            assert check_completeness(r.process).complete, (order, cutoff)


def test_star_mode_is_never_larger():
    for n in (running_example(3), gen_fork_join(2, 2)):
        a = build_symbolic_prefix(n)
        b = build_symbolic_prefix(n, UnfoldConfig(cutoff="star"))
        assert b.events <= a.events


def test_possible_extensions_and_steps():
    u = SymbolicUnfolder(running_example(3))
    assert [p.transition for p in possible_extensions(u)] == ["alpha", "beta"]
    u.step()
    u.step()
    pend = possible_extensions(u)
    assert [p.transition for p in pend] == ["t", "eps"]
    assert all(u.solver.is_sat(p.pred) for p in pend)
    u.close()


def test_event_cap_and_timeout():
    r = build_symbolic_prefix(running_example(3), UnfoldConfig(max_events=3))
    assert r.status == CAP and r.events == 3
    r = build_symbolic_prefix(running_example(3), UnfoldConfig(max_events=6))
    assert r.status == COMPLETE
    r = build_symbolic_prefix(running_example(3), UnfoldConfig(timeout_s=0.0))
    assert r.status == "timeout"


def test_stats_schema():
    st = build_symbolic_prefix(running_example(3)).stats()
    assert set(st) == {"conditions", "events", "cutoffs", "solver_calls", "sat_time_ms", "total_ms",
                       "status", "unknown_verdicts"}
    assert st["cutoffs"] == 2 and st["solver_calls"] > 0


def test_internal_variable_rewriting():
    r = build_symbolic_prefix(running_example(3))
    f = rewrite_internal_variables(r)
    assert rewrite_internal_variables(f) is f
    bp = r.process
    for b, c in enumerate(bp.conditions):
        assert f.var[b] == c.ivar
    # every condition variable is named after the event that chose the colour
    t = next(e for e in bp.events if e.transition == "t")
    assert G.free_vars(f.locpred[t.id]) <= {bp.conditions[b].ivar for b, _ in t.preset}
    # the internal and the original predicates describe the same markings
    from hlunfold.solver import Solver, SolverConfig
    from hlunfold.cutoff import config_constraint
    s = Solver(bp.net.domain, SolverConfig(backend="enumerator"))
    for C in bp.configurations():
        a, b = config_constraint(bp, C, False), config_constraint(bp, C, True)
        assert s.implies(a, b) and s.implies(b, a)


def test_reachability_with_witness():
    n = running_example(3)
    r = check_reachability(n, "c:x,d:y (= y (* 2 x))")
    assert r.reachable and r.prefix.status == GOAL
    # replay the witness and check the goal marking is reached
    m = Marking.of(("a", 0), ("b", 0))
    for t, sigma in r.witness:
        m = fire(m, n.transition(t), sigma)
    # y = 2x with both colours in 1..3 leaves only (1, 2)
    assert m == Marking.of(("c", 1), ("d", 2))
    assert not check_reachability(n, "c:x,d:y (= y (* 5 x))").reachable


def test_reachability_lowlevel_agrees():
    n = running_example(3)
    for goal, expected in [("c:x,d:y (= y (* 2 x))", True), ("c:x (= x 0)", False), ("a:x", True)]:
        assert check_reachability(n, goal).reachable is expected
        assert check_reachability(n, goal, mode="lowlevel").reachable is expected


@pytest.mark.parametrize("bad", ["c", "c:", ":x", "c:x (= x"])
def test_parse_goal_errors(bad):
    with pytest.raises((NetError, G.ParseError)):
        parse_goal(bad, running_example(3))


def test_lowlevel_restrictions():
    pt = expand(running_example(3))
    with pytest.raises(ValueError):
        build_lowlevel_prefix(pt, UnfoldConfig(cutoff="star"))
    pt.initial.append(dict(pt.initial[0]))
    with pytest.raises(ValueError):
        build_lowlevel_prefix(pt)


def test_lowlevel_marks_are_reachable():
    from hlunfold.expansion import pt_reachable
    r = unfold_expansion(running_example(2))
    proc = r.process
    reach = pt_reachable(proc.net)
    for e in range(len(proc.ev_trans)):
        assert frozenset(proc.marking(proc.ev_cone[e]).items()) in reach
