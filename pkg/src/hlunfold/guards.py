"""Guard expressions: the language of transition guards, event predicates and cut constraints.

Expressions are immutable trees with structural equality.  The canonical text form is an
s-expression, e.g. ``(and (> x 0) (= y (* 3 x)))``; ``parse(show(e)) == e`` for every tree.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Mapping, Tuple, Union


# ---------------------------------------------------------------------------
# colour domains

@dataclass(frozen=True)
class FiniteRange:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty range {self.lo}..{self.hi}")

    def __str__(self):
        return f"{{{self.lo}..{self.hi}}}"


@dataclass(frozen=True)
class Naturals:
    def __str__(self):
        return "N"


@dataclass(frozen=True)
class Integers:
    def __str__(self):
        return "Z"


@dataclass(frozen=True)
class TupleOf:
    parts: Tuple["ScalarDomain", ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("TupleOf needs at least one component")
        for p in self.parts:
            if isinstance(p, TupleOf):
                raise ValueError("nested tuple domains are not supported")

    def __str__(self):
        return "(" + " x ".join(str(p) for p in self.parts) + ")"


ScalarDomain = Union[FiniteRange, Naturals, Integers]
ColorDomain = Union[FiniteRange, Naturals, Integers, TupleOf]
Color = Union[int, Tuple[int, ...]]


def is_finite(d: ColorDomain) -> bool:
    if isinstance(d, TupleOf):
        return all(is_finite(p) for p in d.parts)
    return isinstance(d, FiniteRange)


def domain_values(d: ColorDomain) -> list:
    if isinstance(d, FiniteRange):
        return list(range(d.lo, d.hi + 1))
    if isinstance(d, TupleOf):
        return [tuple(v) for v in itertools.product(*(domain_values(p) for p in d.parts))]
    raise ValueError(f"domain {d} is infinite")


def in_domain(c, d: ColorDomain) -> bool:
    if isinstance(d, TupleOf):
        return (isinstance(c, tuple) and len(c) == len(d.parts)
                and all(in_domain(x, p) for x, p in zip(c, d.parts)))
    if isinstance(c, bool) or not isinstance(c, int):
        return False
    if isinstance(d, FiniteRange):
        return d.lo <= c <= d.hi
    if isinstance(d, Naturals):
        return c >= 0
    return True


def tuple_arity(d: ColorDomain) -> int:
    """0 for scalar domains."""
    return len(d.parts) if isinstance(d, TupleOf) else 0


# ---------------------------------------------------------------------------
# expression nodes

class Expr:
    __slots__ = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class TupleLit(Expr):
    items: Tuple[Expr, ...]


@dataclass(frozen=True)
class Proj(Expr):
    arg: Expr
    index: int


ARITH_OPS = ("+", "-", "*", "min", "max")
CMP_OPS = ("=", "distinct", "<=", "<", ">=", ">")


@dataclass(frozen=True)
class Arith(Expr):
    op: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Ite(Expr):
    cond: Expr
    then: Expr
    other: Expr


@dataclass(frozen=True)
class Cmp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class BoolConst(Expr):
    value: bool


@dataclass(frozen=True)
class And(Expr):
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Or(Expr):
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exists(Expr):
    vars: Tuple[str, ...]
    body: Expr


TRUE = BoolConst(True)
FALSE = BoolConst(False)

Term = Union[Expr, int, str]


def lift(t: Term) -> Expr:
    if isinstance(t, Expr):
        return t
    if isinstance(t, bool):
        return BoolConst(t)
    if isinstance(t, int):
        return Const(t)
    if isinstance(t, str):
        return Var(t)
    if isinstance(t, tuple):
        return TupleLit(tuple(lift(x) for x in t))
    raise TypeError(f"cannot lift {t!r}")


# small constructors; these only wrap, simplify() does the folding
def add(*a): return Arith("+", tuple(lift(x) for x in a))
def sub(a, b): return Arith("-", (lift(a), lift(b)))
def mul(*a): return Arith("*", tuple(lift(x) for x in a))
def min_(a, b): return Arith("min", (lift(a), lift(b)))
def max_(a, b): return Arith("max", (lift(a), lift(b)))
def ite(c, a, b): return Ite(lift(c), lift(a), lift(b))
def proj(a, i): return Proj(lift(a), i)
def eq(a, b): return Cmp("=", lift(a), lift(b))
def ne(a, b): return Cmp("distinct", lift(a), lift(b))
def le(a, b): return Cmp("<=", lift(a), lift(b))
def lt(a, b): return Cmp("<", lift(a), lift(b))
def ge(a, b): return Cmp(">=", lift(a), lift(b))
def gt(a, b): return Cmp(">", lift(a), lift(b))
def not_(a): return Not(lift(a))
def exists(vs: Iterable[str], body): return Exists(tuple(vs), lift(body))


def and_(*a) -> Expr:
    a = tuple(lift(x) for x in a)
    if not a:
        return TRUE
    return a[0] if len(a) == 1 else And(a)


def or_(*a) -> Expr:
    a = tuple(lift(x) for x in a)
    if not a:
        return FALSE
    return a[0] if len(a) == 1 else Or(a)


def implies(a, b) -> Expr:
    return or_(not_(a), b)


def conjuncts(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, And):
        out = []
        for a in e.args:
            out.extend(conjuncts(a))
        return tuple(out)
    if e == TRUE:
        return ()
    return (e,)


def is_bool(e: Expr) -> bool:
    return isinstance(e, (Cmp, BoolConst, And, Or, Not, Exists))


# ---------------------------------------------------------------------------
# printing and parsing

_INT_RE = re.compile(r"-?\d+$")


def show(e: Expr) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, TupleLit):
        return "(tuple " + " ".join(show(x) for x in e.items) + ")"
    if isinstance(e, Proj):
        return f"(proj {e.index} {show(e.arg)})"
    if isinstance(e, Arith):
        return f"({e.op} " + " ".join(show(x) for x in e.args) + ")"
    if isinstance(e, Ite):
        return f"(ite {show(e.cond)} {show(e.then)} {show(e.other)})"
    if isinstance(e, Cmp):
        return f"({e.op} {show(e.left)} {show(e.right)})"
    if isinstance(e, And):
        return "(and " + " ".join(show(x) for x in e.args) + ")"
    if isinstance(e, Or):
        return "(or " + " ".join(show(x) for x in e.args) + ")"
    if isinstance(e, Not):
        return f"(not {show(e.arg)})"
    if isinstance(e, Exists):
        return "(exists (" + " ".join(e.vars) + f") {show(e.body)})"
    raise TypeError(f"not an expression: {e!r}")


class ParseError(ValueError):
    pass


def tokenize(text: str) -> list:
    return re.findall(r"\(|\)|[^\s()]+", text)


def read_sexpr(tokens: list, pos: int = 0):
    """Nested python lists of atom strings."""
    if pos >= len(tokens):
        raise ParseError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        out = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise ParseError("missing ')'")
            if tokens[pos] == ")":
                return out, pos + 1
            item, pos = read_sexpr(tokens, pos)
            out.append(item)
    if tok == ")":
        raise ParseError("unexpected ')'")
    return tok, pos + 1


def parse(text: str) -> Expr:
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty guard")
    tree, pos = read_sexpr(tokens)
    if pos != len(tokens):
        raise ParseError(f"trailing input after position {pos}")
    return _build(tree)


_ALIASES = {"!=": "distinct", "==": "="}


def _build(t) -> Expr:
    if isinstance(t, str):
        if _INT_RE.match(t):
            return Const(int(t))
        if t == "true":
            return TRUE
        if t == "false":
            return FALSE
        return Var(t)
    if not t:
        raise ParseError("empty list")
    head, rest = t[0], t[1:]
    if not isinstance(head, str):
        raise ParseError("operator must be an atom")
    head = _ALIASES.get(head, head)
    if head in ARITH_OPS:
        if head in ("-", "min", "max") and len(rest) != 2:
            if head == "-" and len(rest) == 1:
                return Arith("-", (Const(0), _build(rest[0])))
            raise ParseError(f"{head} takes two arguments")
        if len(rest) < 2:
            raise ParseError(f"{head} takes at least two arguments")
        return Arith(head, tuple(_build(x) for x in rest))
    if head in CMP_OPS:
        if len(rest) != 2:
            raise ParseError(f"{head} takes two arguments")
        return Cmp(head, _build(rest[0]), _build(rest[1]))
    if head in ("and", "or"):
        if len(rest) < 2:
            raise ParseError(f"{head} takes at least two arguments")
        args = tuple(_build(x) for x in rest)
        return And(args) if head == "and" else Or(args)
    if head == "not":
        if len(rest) != 1:
            raise ParseError("not takes one argument")
        return Not(_build(rest[0]))
    if head == "ite":
        if len(rest) != 3:
            raise ParseError("ite takes three arguments")
        return Ite(*(_build(x) for x in rest))
    if head == "tuple":
        if not rest:
            raise ParseError("empty tuple")
        return TupleLit(tuple(_build(x) for x in rest))
    if head == "proj":
        if len(rest) != 2 or not isinstance(rest[0], str) or not rest[0].isdigit():
            raise ParseError("usage: (proj <index> <expr>)")
        return Proj(_build(rest[1]), int(rest[0]))
    if head == "exists":
        if len(rest) != 2 or not isinstance(rest[0], list):
            raise ParseError("usage: (exists (<vars>) <body>)")
        return Exists(tuple(rest[0]), _build(rest[1]))
    raise ParseError(f"unknown operator {head!r}")


# ---------------------------------------------------------------------------
# analysis and rewriting

def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, (Const, BoolConst)):
        return frozenset()
    if isinstance(e, Exists):
        return free_vars(e.body) - frozenset(e.vars)
    out = frozenset()
    for c in children(e):
        out |= free_vars(c)
    return out


def children(e: Expr) -> tuple:
    if isinstance(e, (Arith, And, Or)):
        return e.args
    if isinstance(e, TupleLit):
        return e.items
    if isinstance(e, Cmp):
        return (e.left, e.right)
    if isinstance(e, Ite):
        return (e.cond, e.then, e.other)
    if isinstance(e, (Not, Proj)):
        return (e.arg,)
    if isinstance(e, Exists):
        return (e.body,)
    return ()


def rebuild(e: Expr, kids: tuple) -> Expr:
    if isinstance(e, Arith):
        return Arith(e.op, kids)
    if isinstance(e, And):
        return And(kids)
    if isinstance(e, Or):
        return Or(kids)
    if isinstance(e, TupleLit):
        return TupleLit(kids)
    if isinstance(e, Cmp):
        return Cmp(e.op, *kids)
    if isinstance(e, Ite):
        return Ite(*kids)
    if isinstance(e, Not):
        return Not(kids[0])
    if isinstance(e, Proj):
        return Proj(kids[0], e.index)
    if isinstance(e, Exists):
        return Exists(e.vars, kids[0])
    return e


_fresh = itertools.count()


def substitute(e: Expr, s: Mapping[str, Term]) -> Expr:
    """Capture-avoiding replacement of free variables by expressions or colours."""
    if not s:
        return e
    s = {k: lift(v) for k, v in s.items()}
    return _subst(e, s)


def _subst(e: Expr, s: Dict[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return s.get(e.name, e)
    if isinstance(e, (Const, BoolConst)):
        return e
    if isinstance(e, Exists):
        inner = {k: v for k, v in s.items() if k not in e.vars}
        if not inner:
            return e
        incoming = frozenset()
        for v in inner.values():
            incoming |= free_vars(v)
        vs, ren = [], {}
        for v in e.vars:
            if v in incoming:
                nv = f"{v}'{next(_fresh)}"
                ren[v] = Var(nv)
                vs.append(nv)
            else:
                vs.append(v)
        body = _subst(e.body, ren) if ren else e.body
        return Exists(tuple(vs), _subst(body, inner))
    return rebuild(e, tuple(_subst(c, s) for c in children(e)))


def rename(e: Expr, m: Mapping[str, str]) -> Expr:
    return substitute(e, {k: Var(v) for k, v in m.items()})


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in children(e))


def is_linear(e: Expr) -> bool:
    if isinstance(e, Arith) and e.op == "*":
        if sum(1 for a in e.args if free_vars(a)) > 1:
            return False
    return all(is_linear(c) for c in children(e))


def has_quantifier(e: Expr) -> bool:
    return isinstance(e, Exists) or any(has_quantifier(c) for c in children(e))


# ---------------------------------------------------------------------------
# evaluation

class EvalError(ValueError):
    pass


def evaluate(e: Expr, a: Mapping[str, Color], domain: ColorDomain = None):
    """Ground value of ``e``; quantifiers are expanded over ``domain``, which must be finite."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, BoolConst):
        return e.value
    if isinstance(e, Var):
        try:
            return a[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name}") from None
    if isinstance(e, And):
        return all(evaluate(x, a, domain) for x in e.args)
    if isinstance(e, Or):
        return any(evaluate(x, a, domain) for x in e.args)
    if isinstance(e, Not):
        return not evaluate(e.arg, a, domain)
    if isinstance(e, Cmp):
        l, r = evaluate(e.left, a, domain), evaluate(e.right, a, domain)
        if isinstance(l, tuple) != isinstance(r, tuple):
            # a scalar constant against a tuple is broadcast componentwise
            l, r = _broadcast(l, r)
        op = e.op
        if op == "=":
            return l == r
        if op == "distinct":
            return l != r
        if isinstance(l, tuple):
            raise EvalError(f"{op} on tuples")
        if op == "<=":
            return l <= r
        if op == "<":
            return l < r
        if op == ">=":
            return l >= r
        return l > r
    if isinstance(e, Arith):
        vals = [evaluate(x, a, domain) for x in e.args]
        if e.op == "+":
            return sum(vals)
        if e.op == "-":
            return vals[0] - vals[1]
        if e.op == "*":
            out = 1
            for v in vals:
                out *= v
            return out
        if e.op == "min":
            return min(vals)
        return max(vals)
    if isinstance(e, Ite):
        return evaluate(e.then if evaluate(e.cond, a, domain) else e.other, a, domain)
    if isinstance(e, TupleLit):
        return tuple(evaluate(x, a, domain) for x in e.items)
    if isinstance(e, Proj):
        v = evaluate(e.arg, a, domain)
        if not isinstance(v, tuple):
            raise EvalError("projection of a scalar")
        return v[e.index]
    if isinstance(e, Exists):
        if domain is None or not is_finite(domain):
            raise EvalError("quantifier over an infinite or missing domain")
        vals = domain_values(domain)
        b = dict(a)
        for combo in itertools.product(vals, repeat=len(e.vars)):
            b.update(zip(e.vars, combo))
            if evaluate(e.body, b, domain):
                return True
        return False
    raise TypeError(f"not an expression: {e!r}")


def _broadcast(l, r):
    if isinstance(l, tuple):
        return l, tuple(r for _ in l)
    return tuple(l for _ in r), r


# ---------------------------------------------------------------------------
# simplification

def simplify(e: Expr) -> Expr:
    if isinstance(e, (Const, Var, BoolConst)):
        return e
    if isinstance(e, Exists):
        body = simplify(e.body)
        fv = free_vars(body)
        vs = tuple(v for v in e.vars if v in fv)
        if not vs or isinstance(body, BoolConst):
            return body
        return Exists(vs, body)
    kids = tuple(simplify(c) for c in children(e))
    if isinstance(e, And):
        out, seen = [], set()
        for k in kids:
            for c in (k.args if isinstance(k, And) else (k,)):
                if c == TRUE or c in seen:
                    continue
                if c == FALSE:
                    return FALSE
                seen.add(c)
                out.append(c)
        return and_(*out)
    if isinstance(e, Or):
        out, seen = [], set()
        for k in kids:
            for c in (k.args if isinstance(k, Or) else (k,)):
                if c == FALSE or c in seen:
                    continue
                if c == TRUE:
                    return TRUE
                seen.add(c)
                out.append(c)
        return or_(*out)
    if isinstance(e, Not):
        k = kids[0]
        if isinstance(k, BoolConst):
            return BoolConst(not k.value)
        if isinstance(k, Not):
            return k.arg
        return Not(k)
    if isinstance(e, Ite):
        c, a, b = kids
        if isinstance(c, BoolConst):
            return a if c.value else b
        if a == b:
            return a
        return Ite(c, a, b)
    if isinstance(e, Cmp):
        l, r = kids
        if isinstance(l, Const) and isinstance(r, Const):
            return BoolConst(evaluate(Cmp(e.op, l, r), {}))
        if l == r:
            return BoolConst(e.op in ("=", "<=", ">="))
        return Cmp(e.op, l, r)
    if isinstance(e, Arith):
        if all(isinstance(k, Const) for k in kids):
            return Const(evaluate(Arith(e.op, kids), {}))
        if e.op in ("+", "*"):
            unit = 0 if e.op == "+" else 1
            flat = []
            for k in kids:
                flat.extend(k.args if isinstance(k, Arith) and k.op == e.op else (k,))
            consts = [k.value for k in flat if isinstance(k, Const)]
            rest = [k for k in flat if not isinstance(k, Const)]
            c = sum(consts) if e.op == "+" else _prod(consts)
            if e.op == "*" and c == 0:
                return Const(0)
            args = rest + ([Const(c)] if c != unit else [])
            if len(args) == 1:
                return args[0]
            return Arith(e.op, tuple(args))
        if e.op == "-" and kids[1] == Const(0):
            return kids[0]
        return Arith(e.op, kids)
    if isinstance(e, Proj):
        k = kids[0]
        if isinstance(k, TupleLit):
            return k.items[e.index]
        return Proj(k, e.index)
    return rebuild(e, kids)


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


# ---------------------------------------------------------------------------
# tuple lowering: every variable of a tuple-valued net becomes one scalar variable per component

def component_name(name: str, i: int) -> str:
    return f"{name}~{i}"


def split_component(name: str):
    """Inverse of component_name; ``(name, None)`` for scalar names."""
    base, sep, idx = name.rpartition("~")
    if sep and idx.isdigit():
        return base, int(idx)
    return name, None


def lower_tuples(e: Expr, arity: int) -> Expr:
    """Rewrite an expression over k-tuple variables into one over scalar component variables."""
    if arity == 0:
        return e
    return _lower_bool(e, arity)


def _is_tuple_term(e: Expr) -> bool:
    return isinstance(e, (Var, TupleLit)) or (isinstance(e, Ite) and _is_tuple_term(e.then))


def _lower_bool(e: Expr, k: int) -> Expr:
    if isinstance(e, BoolConst):
        return e
    if isinstance(e, Cmp):
        if _is_tuple_term(e.left) or _is_tuple_term(e.right):
            if e.op not in ("=", "distinct"):
                raise EvalError(f"{e.op} on tuple values")
            ls, rs = _lower_tuple(e.left, k), _lower_tuple(e.right, k)
            comps = [Cmp("=", a, b) for a, b in zip(ls, rs)]
            body = and_(*comps)
            return body if e.op == "=" else Not(body)
        return Cmp(e.op, _lower_int(e.left, k), _lower_int(e.right, k))
    if isinstance(e, And):
        return And(tuple(_lower_bool(x, k) for x in e.args))
    if isinstance(e, Or):
        return Or(tuple(_lower_bool(x, k) for x in e.args))
    if isinstance(e, Not):
        return Not(_lower_bool(e.arg, k))
    if isinstance(e, Exists):
        vs = tuple(component_name(v, i) for v in e.vars for i in range(k))
        return Exists(vs, _lower_bool(e.body, k))
    raise EvalError(f"not a formula: {show(e)}")


def _lower_tuple(e: Expr, k: int) -> list:
    if isinstance(e, Var):
        return [Var(component_name(e.name, i)) for i in range(k)]
    if isinstance(e, TupleLit):
        if len(e.items) != k:
            raise EvalError(f"tuple of arity {len(e.items)} in a {k}-tuple net")
        return [_lower_int(x, k) for x in e.items]
    if isinstance(e, Const):
        return [e] * k
    if isinstance(e, Ite):
        c = _lower_bool(e.cond, k)
        return [Ite(c, a, b) for a, b in zip(_lower_tuple(e.then, k), _lower_tuple(e.other, k))]
    raise EvalError(f"not a tuple term: {show(e)}")


def _lower_int(e: Expr, k: int) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Proj):
        return _lower_tuple(e.arg, k)[e.index]
    if isinstance(e, Var):
        raise EvalError(f"tuple variable {e.name} used as a number")
    if isinstance(e, Arith):
        return Arith(e.op, tuple(_lower_int(x, k) for x in e.args))
    if isinstance(e, Ite):
        return Ite(_lower_bool(e.cond, k), _lower_int(e.then, k), _lower_int(e.other, k))
    raise EvalError(f"not an integer term: {show(e)}")


def lower_assignment(a: Mapping[str, Color], arity: int) -> Dict[str, int]:
    if arity == 0:
        return dict(a)
    out = {}
    for k, v in a.items():
        for i, x in enumerate(v):
            out[component_name(k, i)] = x
    return out


def raise_assignment(a: Mapping[str, int], arity: int) -> Dict[str, Color]:
    if arity == 0:
        return dict(a)
    parts: Dict[str, Dict[int, int]] = {}
    for k, v in a.items():
        base, i = split_component(k)
        parts.setdefault(base, {})[i] = v
    return {k: tuple(p.get(i, 0) for i in range(arity)) for k, p in parts.items()}


def iter_nodes(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from iter_nodes(c)
