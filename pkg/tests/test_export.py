import json
import re

from hlunfold.export import dumps_json, prefix_to_dot, prefix_to_json
from hlunfold.library import resolve
from hlunfold.unfolder import UnfoldConfig, build_symbolic_prefix, unfold_expansion


def _prefixes():
    n = resolve("running_m3")
    return n, build_symbolic_prefix(n, UnfoldConfig()).process, unfold_expansion(n, UnfoldConfig()).process


def _check_links(j):
    cids = {c["id"] for c in j["conditions"]}
    for e in j["events"]:
        assert set(e["preset"]) <= cids and set(e["postset"]) <= cids
        for b in e["postset"]:
            assert j["conditions"][b]["event"] == e["id"]
    for b in j["initial"]:
        assert j["conditions"][b]["event"] in (None, -1)


def test_symbolic_json():
    n, bp, _ = _prefixes()
    j = prefix_to_json(bp)
    assert j["kind"] == "symbolic" and j["net"] == n.name
    assert len(j["events"]) == len(bp.events) and len(j["conditions"]) == len(bp.conditions)
    assert sum(e["cutoff"] for e in j["events"]) == 2
    assert all(isinstance(e["pred"], str) for e in j["events"])
    assert json.loads(dumps_json(bp)) == j
    _check_links(j)


def test_lowlevel_json():
    _, _, pt = _prefixes()
    j = prefix_to_json(pt)
    assert j["kind"] == "lowlevel"
    assert (len(j["conditions"]), len(j["events"])) == (332, 170)
    assert sum(e["cutoff"] for e in j["events"]) == 154
    assert "pred" not in j["events"][0]
    _check_links(j)


def test_dot_shape():
    _, bp, pt = _prefixes()
    for proc in (bp, pt):
        j = prefix_to_json(proc)
        d = prefix_to_dot(proc, 'we"ird')
        assert d.startswith('digraph "we\\"ird" {') and d.rstrip().endswith("}")
        assert len(re.findall(r"shape=circle", d)) == len(j["conditions"])
        assert len(re.findall(r"shape=box", d)) == len(j["events"])
        arcs = sum(len(e["preset"]) + len(e["postset"]) for e in j["events"])
        assert len(re.findall(r" -> ", d)) == arcs
