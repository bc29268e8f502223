"""Small nets used throughout the tests and bundled with the CLI."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Optional

from . import guards as G
from .net import HLNet, NetError, from_json, load


def _arc(place, t, direction, var=None):
    a = {"place": place, "transition": t, "dir": direction}
    if var:
        a["var"] = var
    return a


def running_example_json(m: Optional[int] = 3) -> dict:
    """Two tokens get colours in 1..m, then either t consumes both (if y = 3x) or eps recolours them."""
    dom = {"kind": "nat"} if m is None else {"kind": "range", "lo": 0, "hi": m}
    return {
        "name": f"running_m{m}" if m is not None else "running_nat",
        "domain": dom,
        "places": ["a", "b", "c", "d"],
        "transitions": [
            {"name": "alpha", "guard": "(> x 0)"},
            {"name": "beta", "guard": "(> x 0)"},
            {"name": "t", "guard": "(= y (* 3 x))"},
            {"name": "eps", "guard": "(and (> z 0) (> w 0))"},
        ],
        "arcs": [
            _arc("a", "alpha", "in"), _arc("c", "alpha", "out", "x"),
            _arc("b", "beta", "in"), _arc("d", "beta", "out", "x"),
            _arc("c", "t", "in", "x"), _arc("d", "t", "in", "y"),
            _arc("c", "eps", "in", "x"), _arc("d", "eps", "in", "y"),
            _arc("c", "eps", "out", "z"), _arc("d", "eps", "out", "w"),
        ],
        "initial": {"markings": [[["a", 0], ["b", 0]]]},
    }


def running_example(m: Optional[int] = 3) -> HLNet:
    return from_json(running_example_json(m))


def color_conflict_json() -> dict:
    """t0 copies one integer to three places; t1, t2, t3 need x<=0, x!=0, x>=0 respectively."""
    guards = {"t1": "(<= x 0)", "t2": "(distinct x 0)", "t3": "(>= x 0)"}
    arcs = [_arc("p0", "t0", "in")] + [_arc(f"p{i}", "t0", "out", "x") for i in (1, 2, 3)]
    for i in (1, 2, 3):
        arcs += [_arc(f"p{i}", f"t{i}", "in", "x"), _arc(f"q{i}", f"t{i}", "out", "x")]
    return {
        "name": "color_conflict",
        "domain": {"kind": "int"},
        "places": ["p0", "p1", "p2", "p3", "q1", "q2", "q3"],
        "transitions": [{"name": "t0", "guard": "true"}] + [{"name": k, "guard": v} for k, v in guards.items()],
        "arcs": arcs,
        "initial": {"markings": [[["p0", 0]]]},
    }


def color_conflict_net(domain: Optional[G.ColorDomain] = None) -> HLNet:
    n = from_json(color_conflict_json())
    return n if domain is None else n.with_domain(domain)


def simple_nsc_json() -> dict:
    """One place, one transition replacing the token by an arbitrary natural number."""
    return {
        "name": "simple_nsc",
        "domain": {"kind": "nat"},
        "places": ["p"],
        "transitions": [{"name": "t", "guard": "true"}],
        "arcs": [_arc("p", "t", "in", "x"), _arc("p", "t", "out", "y")],
        "initial": {"markings": [[["p", 0]]]},
    }


def simple_nsc_net() -> HLNet:
    return from_json(simple_nsc_json())


def nsc_cycles_json(hi: Optional[int] = None) -> dict:
    """Two 0-tokens cycle a<->b and c<->d; t increments the number on p; eps, enabled with
    tokens on b and d, puts an arbitrary number on p."""
    dom = {"kind": "nat"} if hi is None else {"kind": "range", "lo": 0, "hi": hi}
    arcs = []
    for t, src, dst in (("alpha", "a", "b"), ("beta", "b", "a"), ("gamma", "c", "d"), ("delta", "d", "c")):
        arcs += [_arc(src, t, "in"), _arc(dst, t, "out")]
    arcs += [_arc("p", "t", "in", "x"), _arc("p", "t", "out", "y")]
    arcs += [_arc("b", "eps", "in"), _arc("d", "eps", "in"), _arc("p", "eps", "in", "x"),
             _arc("b", "eps", "out"), _arc("d", "eps", "out"), _arc("p", "eps", "out", "y")]
    ttg = "(= y (+ x 1))" if hi is None else f"(and (= y (+ x 1)) (<= y {hi}))"
    return {
        "name": "nsc_cycles" if hi is None else f"nsc_cycles_{hi}",
        "domain": dom,
        "places": ["a", "b", "c", "d", "p"],
        "transitions": [{"name": n, "guard": "true"} for n in ("alpha", "beta", "gamma", "delta")]
        + [{"name": "t", "guard": ttg}, {"name": "eps", "guard": "true"}],
        "arcs": arcs,
        "initial": {"markings": [[["a", 0], ["c", 0], ["p", 1]]]},
    }


def nsc_cycles_net(hi: Optional[int] = None) -> HLNet:
    return from_json(nsc_cycles_json(hi))


BUNDLED = {
    "running_m3": lambda: running_example_json(3),
    "running_m2": lambda: running_example_json(2),
    "running_nat": lambda: running_example_json(None),
    "color_conflict": color_conflict_json,
    "simple_nsc": simple_nsc_json,
    "nsc_cycles": lambda: nsc_cycles_json(None),
}


def bundled_dir() -> Path:
    return Path(str(resources.files("hlunfold") / "nets"))


def resolve(name_or_path: str) -> HLNet:
    """A path to a net file, or the name of a bundled net (with or without ``.json``)."""
    p = Path(name_or_path)
    if p.exists():
        return load(p)
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    f = bundled_dir() / f"{stem}.json"
    if f.exists():
        return load(f)
    raise NetError(f"no such net file or bundled net: {name_or_path}")


def write_bundled(target: Optional[Path] = None) -> list:
    target = Path(target or bundled_dir())
    target.mkdir(parents=True, exist_ok=True)
    out = []
    for name, make in BUNDLED.items():
        f = target / f"{name}.json"
        f.write_text(json.dumps(make(), indent=1) + "\n")
        out.append(f)
    return out
