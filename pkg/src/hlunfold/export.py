"""DOT and JSON renderings of prefixes."""
from __future__ import annotations

import json
from typing import Union

from . import guards as G
from .branching import BranchingProcess
from .unfolder import PTProcess

Process = Union[BranchingProcess, PTProcess]


def _q(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _color_json(c):
    return list(c) if isinstance(c, tuple) else c


def prefix_to_json(proc: Process) -> dict:
    if isinstance(proc, BranchingProcess):
        conds = [{"id": c.id, "place": c.place, "event": c.event, "var": c.ovar} for c in proc.conditions]
        events = [{"id": e.id, "transition": e.transition, "preset": [b for b, _ in e.preset],
                   "postset": [b for b, _ in e.postset], "depth": e.depth, "cutoff": e.cutoff,
                   "pred": G.show(e.locpred)} for e in proc.events]
        return {"kind": "symbolic", "net": proc.net.name, "conditions": conds, "events": events,
                "initial": list(proc.b0), "pred_bottom": G.show(proc.pred_bottom)}
    conds = [{"id": b, "place": proc.places[p], "event": proc.cond_event[b]}
             for b, p in enumerate(proc.cond_place)]
    events = [{"id": e, "transition": proc.label(e), "preset": list(proc.ev_pre[e]),
               "postset": list(proc.ev_post[e]), "depth": proc.ev_depth[e], "cutoff": proc.cutoff_flags[e]}
              for e in range(len(proc.ev_trans))]
    return {"kind": "lowlevel", "net": proc.net.name, "conditions": conds, "events": events,
            "initial": list(proc.b0)}


def dumps_json(proc: Process) -> str:
    return json.dumps(prefix_to_json(proc), indent=1)


def prefix_to_dot(proc: Process, name: str = "prefix") -> str:
    """Conditions as circles, events as boxes (cut-offs dashed); predicates go into tooltips."""
    j = prefix_to_json(proc)
    out = [f"digraph {_q(name)} {{", "  rankdir=TB;"]
    for c in j["conditions"]:
        tip = f' tooltip={_q(c["var"])}' if "var" in c else ""
        out.append(f'  b{c["id"]} [shape=circle label={_q(c["place"])}{tip}];')
    for e in j["events"]:
        style = " style=dashed" if e["cutoff"] else ""
        tip = f' tooltip={_q(e["pred"])}' if "pred" in e else ""
        out.append(f'  e{e["id"]} [shape=box label={_q(e["transition"])}{style}{tip}];')
    for e in j["events"]:
        for b in e["preset"]:
            out.append(f'  b{b} -> e{e["id"]};')
        for b in e["postset"]:
            out.append(f'  e{e["id"]} -> b{b};')
    out.append("}")
    return "\n".join(out) + "\n"

