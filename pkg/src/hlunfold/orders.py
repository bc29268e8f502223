"""Adequate orders on configurations: size (M), size+Parikh (E), and the total Foata order (F)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

ORDERS = ("m", "e", "f")


class OrderError(AssertionError):
    """Two distinct configurations with identical Foata forms: impossible for a branching process."""


@dataclass(frozen=True)
class TransitionOrder:
    """A strict total order on transition names; declaration order unless given."""
    names: Tuple[str, ...]

    def rank(self, name: str) -> int:
        return self._ranks()[name]

    def _ranks(self) -> Dict[str, int]:
        r = self.__dict__.get("_r")
        if r is None:
            r = {n: i for i, n in enumerate(self.names)}
            object.__setattr__(self, "_r", r)
        return r

    def extend(self, more: Iterable[str]) -> "TransitionOrder":
        extra = tuple(n for n in more if n not in self._ranks())
        return TransitionOrder(self.names + extra)


def parikh(labels: Iterable[str], order: TransitionOrder) -> Tuple[str, ...]:
    """Labels of the events sorted by the transition order, with repetitions."""
    return tuple(sorted(labels, key=order.rank))


def foata(events: Iterable[int], preds) -> List[FrozenSet[int]]:
    """Min-peeling.  ``preds(e)`` gives the immediate causal predecessors of ``e``."""
    rest = set(events)
    rounds = []
    while rest:
        layer = frozenset(e for e in rest if not (set(preds(e)) & rest))
        if not layer:
            raise ValueError("cyclic causality")
        rounds.append(layer)
        rest -= layer
    return rounds


def key_from_layers(kind: str, layers: Sequence[Sequence[int]]) -> tuple:
    """Order key from Foata layers of label ranks.

    For all three orders, ``C1 < C2`` iff ``key(C1) < key(C2)`` as python tuples; distinct
    configurations with equal M or E keys are incomparable.
    """
    n = sum(len(l) for l in layers)
    if kind == "m":
        return (n,)
    ranks = tuple(sorted(r for l in layers for r in l))
    if kind == "e":
        return (n, ranks)
    if kind == "f":
        return (n, ranks, tuple(tuple(sorted(l)) for l in layers))
    raise ValueError(f"unknown order {kind!r}")


LESS, GREATER, EQUAL, INCOMPARABLE = "less", "greater", "equal", "incomparable"


def compare_keys(k1: tuple, k2: tuple, same_set: bool, kind: str = "f") -> str:
    if k1 < k2:
        return LESS
    if k1 > k2:
        return GREATER
    if same_set:
        return EQUAL
    if kind == "f":
        raise OrderError("distinct configurations with the same Foata normal form")
    return INCOMPARABLE


def compare(kind: str, c1, c2, bp, order: TransitionOrder = None) -> str:
    """Compare two configurations (sets of event ids) of the branching process ``bp``."""
    order = order or bp.order
    k1 = config_key(kind, c1, bp, order)
    k2 = config_key(kind, c2, bp, order)
    return compare_keys(k1, k2, frozenset(c1) == frozenset(c2), kind)


def config_key(kind: str, events, bp, order: TransitionOrder = None) -> tuple:
    order = order or bp.order
    layers = foata(events, bp.immediate_predecessors)
    return key_from_layers(kind, [[order.rank(bp.events[e].transition) for e in l] for l in layers])


def precedes(kind: str, c1, c2, bp, order: TransitionOrder = None) -> bool:
    return compare(kind, c1, c2, bp, order) == LESS
