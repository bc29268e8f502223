"""Satisfiability backends: a finite-domain enumerator and an SMT-LIB child process."""
from __future__ import annotations

import logging
import re
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from . import guards as G
from .guards import (And, Arith, BoolConst, Cmp, Const, Exists, Expr, Ite, Not, Or, Var)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Sat:
    model: Dict[str, G.Color] = field(default_factory=dict)

    @property
    def status(self):
        return "sat"


@dataclass(frozen=True)
class Unsat:
    @property
    def status(self):
        return "unsat"


@dataclass(frozen=True)
class Unknown:
    reason: str = ""

    @property
    def status(self):
        return "unknown"


Verdict = object  # Sat | Unsat | Unknown


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "auto"  # enumerator | external | auto
    command: Optional[Tuple[str, ...]] = None
    timeout_ms: int = 60_000
    logic: Optional[str] = None  # None: derived per query
    cache: bool = True


class SolverError(RuntimeError):
    pass


def default_command() -> Optional[Tuple[str, ...]]:
    exe = shutil.which("z3")
    if exe:
        return (exe, "-in")
    exe = shutil.which("cvc5")
    if exe:
        return (exe, "--lang=smt2", "--incremental", "--produce-models")
    return None


# ---------------------------------------------------------------------------
# finite-domain enumerator

class DomainError(ValueError):
    pass


class Enumerator:
    """Backtracking search over finite domains.

    Equalities whose one side is a lone unassigned variable are used to assign it directly,
    disjunctions are split when that is cheaper than branching on a variable, and existential
    quantifiers are decided by a nested search.
    """

    def __init__(self, domains: Mapping[str, list], default: Optional[list] = None):
        self.domains = dict(domains)
        self.default = default
        self._sets: Dict[int, frozenset] = {}

    def values(self, v: str) -> list:
        d = self.domains.get(v, self.default)
        if d is None:
            raise DomainError(f"no finite domain for {v}")
        return d

    def solve(self, e: Expr, want: Sequence[str] = (), fixed=None) -> Iterator[dict]:
        """Yield assignments satisfying ``e``; each covers ``want`` and every variable it needed."""
        yield from self._search(self._prepare(e), dict(fixed or {}), list(want))

    def first(self, e: Expr, fixed=None) -> Optional[dict]:
        for m in self.solve(e, (), fixed):
            return m
        return None

    def _prepare(self, e: Expr) -> list:
        out = []
        for c in G.conjuncts(G.simplify(e)):
            out.extend(self._flatten(c))
        return out

    def _flatten(self, c: Expr) -> list:
        if isinstance(c, And):
            r = []
            for x in c.args:
                r.extend(self._flatten(x))
            return r
        if isinstance(c, Exists):
            # positive existential: bound variables become fresh free ones
            ren = {v: f"{v}'{next(G._fresh)}" for v in c.vars}
            for v, nv in ren.items():
                self.domains[nv] = self.values(v)
            return self._flatten(G.rename(c.body, ren))
        if isinstance(c, Not):
            a = c.arg
            if isinstance(a, Or):
                r = []
                for x in a.args:
                    r.extend(self._flatten(Not(x)))
                return r
            if isinstance(a, Not):
                return self._flatten(a.arg)
        if c == G.TRUE:
            return []
        return [(c, G.free_vars(c))]

    def _search(self, pending: list, a: dict, want: list) -> Iterator[dict]:
        while True:
            progress = False
            rest = []
            for item in pending:
                c, fv = item
                unbound = [v for v in fv if v not in a]
                if not unbound:
                    if not self._eval(c, a):
                        return
                    continue
                if len(unbound) == 1 and isinstance(c, Cmp) and c.op == "=":
                    v = unbound[0]
                    val = self._solve_eq(c, v, a)
                    if val is not None:
                        if val not in self._valset(v):
                            return
                        a = dict(a)
                        a[v] = val
                        progress = True
                        continue
                rest.append(item)
            pending = rest
            if not progress:
                break
        if not pending:
            todo = [v for v in want if v not in a]
            if not todo:
                yield a
                return
            v = todo[0]
            for val in self.values(v):
                b = dict(a)
                b[v] = val
                yield from self._search([], b, want)
            return
        counts: Dict[str, int] = {}
        for c, fv in pending:
            for v in fv:
                if v not in a:
                    counts[v] = counts.get(v, 0) + 1
        var = min(counts, key=lambda v: (len(self.values(v)), -counts[v], v))
        best_or = None
        for item in pending:
            if isinstance(item[0], Or) and (best_or is None or len(item[0].args) < len(best_or[0].args)):
                best_or = item
        if best_or is not None and len(best_or[0].args) <= len(self.values(var)):
            others = [it for it in pending if it is not best_or]
            seen = set()
            for d in best_or[0].args:
                for m in self._search(others + self._flatten(d), a, want):
                    key = tuple(sorted(m.items()))
                    if key not in seen:
                        seen.add(key)
                        yield m
            return
        for val in self.values(var):
            b = dict(a)
            b[var] = val
            yield from self._search(pending, b, want)

    def _valset(self, v) -> frozenset:
        d = self.values(v)
        s = self._sets.get(id(d))
        if s is None:
            s = self._sets[id(d)] = frozenset(d)
        return s

    @staticmethod
    def _solve_eq(c: Cmp, v: str, a: dict):
        for lone, other in ((c.left, c.right), (c.right, c.left)):
            if isinstance(lone, Var) and lone.name == v and v not in G.free_vars(other):
                return G.evaluate(other, a)
        # v + k = t, k + v = t, v - k = t
        for lone, other in ((c.left, c.right), (c.right, c.left)):
            if isinstance(lone, Arith) and lone.op in ("+", "-") and len(lone.args) == 2 \
                    and v not in G.free_vars(other):
                x, y = lone.args
                if isinstance(x, Var) and x.name == v and v not in G.free_vars(y):
                    k = G.evaluate(y, a)
                    rhs = G.evaluate(other, a)
                    return rhs - k if lone.op == "+" else rhs + k
                if lone.op == "+" and isinstance(y, Var) and y.name == v and v not in G.free_vars(x):
                    return G.evaluate(other, a) - G.evaluate(x, a)
        return None

    def _eval(self, e: Expr, a: dict) -> bool:
        if isinstance(e, Exists):
            fv = G.free_vars(e.body)
            fixed = {k: v for k, v in a.items() if k in fv and k not in e.vars}
            return self.__class__(self.domains, self.default).first(e.body, fixed) is not None
        if isinstance(e, And):
            return all(self._eval(x, a) for x in e.args)
        if isinstance(e, Or):
            return any(self._eval(x, a) for x in e.args)
        if isinstance(e, Not):
            return not self._eval(e.arg, a)
        if isinstance(e, BoolConst):
            return e.value
        return bool(G.evaluate(e, a))


# ---------------------------------------------------------------------------
# SMT-LIB translation

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-']*$")
_RESERVED = {"true", "false", "and", "or", "not", "ite", "exists", "forall", "let", "distinct",
             "min", "max", "abs", "div", "mod", "_", "!", "as", "par", "NUMERAL"}


def smt_symbol(name: str) -> str:
    if _SIMPLE.match(name) and "'" not in name and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise SolverError(f"cannot encode variable name {name!r}")
    return f"|{name}|"


def _side(name: str, dom: G.ScalarDomain) -> Optional[str]:
    s = smt_symbol(name)
    if isinstance(dom, G.FiniteRange):
        return f"(<= {_int(dom.lo)} {s} {_int(dom.hi)})"
    if isinstance(dom, G.Naturals):
        return f"(>= {s} 0)"
    return None


def _int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def to_smt(e: Expr, dom_of) -> str:
    """``dom_of`` maps a variable name to its scalar domain (for bound-variable side constraints)."""
    if isinstance(e, Const):
        return _int(e.value)
    if isinstance(e, Var):
        return smt_symbol(e.name)
    if isinstance(e, BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, Arith):
        args = [to_smt(x, dom_of) for x in e.args]
        if e.op in ("min", "max"):
            op = "<=" if e.op == "min" else ">="
            return f"(ite ({op} {args[0]} {args[1]}) {args[0]} {args[1]})"
        return f"({e.op} " + " ".join(args) + ")"
    if isinstance(e, Ite):
        return f"(ite {to_smt(e.cond, dom_of)} {to_smt(e.then, dom_of)} {to_smt(e.other, dom_of)})"
    if isinstance(e, Cmp):
        return f"({e.op} {to_smt(e.left, dom_of)} {to_smt(e.right, dom_of)})"
    if isinstance(e, And):
        return "(and " + " ".join(to_smt(x, dom_of) for x in e.args) + ")"
    if isinstance(e, Or):
        return "(or " + " ".join(to_smt(x, dom_of) for x in e.args) + ")"
    if isinstance(e, Not):
        return f"(not {to_smt(e.arg, dom_of)})"
    if isinstance(e, Exists):
        decl = " ".join(f"({smt_symbol(v)} Int)" for v in e.vars)
        sides = [s for s in (_side(v, dom_of(v)) for v in e.vars) if s]
        body = to_smt(e.body, dom_of)
        if sides:
            body = "(and " + " ".join(sides) + " " + body + ")"
        return f"(exists ({decl}) {body})"
    raise SolverError(f"cannot translate {e!r}")


def smt_logic(e: Expr) -> str:
    q = G.has_quantifier(e)
    arith = "LIA" if G.is_linear(e) else "NIA"
    return arith if q else "QF_" + arith


def smt_script(e: Expr, dom_of, logic: Optional[str] = None, want_model: bool = True) -> List[str]:
    lines = []
    if want_model:
        lines.append("(set-option :produce-models true)")
    lines.append(f"(set-logic {logic or smt_logic(e)})")
    fv = sorted(G.free_vars(e))
    for v in fv:
        lines.append(f"(declare-const {smt_symbol(v)} Int)")
        s = _side(v, dom_of(v))
        if s:
            lines.append(f"(assert {s})")
    lines.append(f"(assert {to_smt(e, dom_of)})")
    lines.append("(check-sat)")
    return lines


def parse_model(text: str) -> Dict[str, int]:
    tree, _ = G.read_sexpr(re.findall(r"\(|\)|\|[^|]*\||[^\s()]+", text))
    return _model_entries(tree)


def _model_entries(tree) -> Dict[str, int]:
    out = {}
    if isinstance(tree, list) and tree and tree[0] == "model":
        tree = tree[1:]
    for entry in tree if isinstance(tree, list) else ():
        if isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun" and entry[2] == []:
            name = entry[1]
            if name.startswith("|") and name.endswith("|"):
                name = name[1:-1]
            out[name] = _model_value(entry[4])
    return out


def _model_value(t) -> int:
    if isinstance(t, str):
        return int(t)
    if len(t) == 2 and t[0] == "-":
        return -_model_value(t[1])
    raise SolverError(f"unexpected model value {t!r}")


class SmtProcess:
    """A long-lived solver child process spoken to in SMT-LIB v2 over stdin/stdout."""

    def __init__(self, command: Sequence[str], timeout_ms: int = 60_000):
        self.command = list(command)
        self.timeout_ms = timeout_ms
        self.proc = None

    def _start(self):
        try:
            self.proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         stderr=subprocess.STDOUT, text=True, bufsize=1)
        except OSError as exc:
            raise SolverError(f"cannot start solver {self.command[0]}: {exc}") from exc

    def close(self):
        if self.proc is not None:
            try:
                self.proc.stdin.write("(exit)\n")
                self.proc.stdin.flush()
                self.proc.wait(timeout=2)
            except Exception:
                self.proc.kill()
            self.proc = None

    def _readline(self) -> str:
        line = self.proc.stdout.readline()
        if not line:
            raise SolverError("solver process exited")
        return line.strip()

    def _read_sexpr(self) -> str:
        buf, depth = [], 0
        while True:
            line = self._readline()
            buf.append(line)
            depth += line.count("(") - line.count(")")
            if depth <= 0 and "".join(buf).strip():
                return "\n".join(buf)

    def run(self, lines: List[str], want_model: bool):
        """Return ('sat'|'unsat'|'unknown', model-or-None, error-text)."""
        if self.proc is None or self.proc.poll() is not None:
            self._start()
        script = ["(reset)", f"(set-option :timeout {int(self.timeout_ms)})"] + lines
        try:
            self.proc.stdin.write("\n".join(script) + "\n")
            self.proc.stdin.flush()
            errors = []
            while True:
                line = self._readline()
                if line in ("sat", "unsat", "unknown"):
                    break
                if line:
                    errors.append(line)
            model = None
            if line == "sat" and want_model:
                self.proc.stdin.write("(get-model)\n")
                self.proc.stdin.flush()
                model = parse_model(self._read_sexpr())
            return line, model, "\n".join(errors)
        except (BrokenPipeError, SolverError) as exc:
            self.close()
            return "unknown", None, str(exc)


# ---------------------------------------------------------------------------
# sessions

@dataclass
class SolverStats:
    calls: int = 0
    cache_hits: int = 0
    time_ms: float = 0.0
    unknown: int = 0


class Solver:
    """Backend session bound to one colour domain; owns its child process and verdict cache."""

    def __init__(self, domain: G.ColorDomain, cfg: SolverConfig = SolverConfig()):
        self.domain = domain
        self.cfg = cfg
        self.arity = G.tuple_arity(domain)
        backend = cfg.backend
        if backend == "auto":
            backend = "enumerator" if G.is_finite(domain) else "external"
        if backend == "enumerator" and not G.is_finite(domain):
            raise DomainError(f"enumerator needs a finite domain, got {domain}")
        self.backend = backend
        self._proc = None
        if backend == "external":
            cmd = cfg.command or default_command()
            if not cmd:
                raise SolverError("no external SMT solver found (install z3 or pass a command)")
            self._proc = SmtProcess(cmd, cfg.timeout_ms)
        self.stats = SolverStats()
        self._cache: Dict[str, object] = {}
        self._scalar_values: Dict[int, list] = {}

    def close(self):
        if self._proc is not None:
            self._proc.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # domain helpers on lowered (scalar) variable names
    def scalar_domain(self, name: str) -> G.ScalarDomain:
        if self.arity:
            _, i = G.split_component(name)
            return self.domain.parts[i or 0]
        return self.domain

    def _values(self, name: str) -> list:
        d = self.scalar_domain(name)
        key = id(d)
        v = self._scalar_values.get(key)
        if v is None:
            v = self._scalar_values[key] = G.domain_values(d)
        return v

    def _enumerator(self, e: Expr) -> Enumerator:
        names = set()
        for n in G.iter_nodes(e):
            if isinstance(n, Var):
                names.add(n.name)
            elif isinstance(n, Exists):
                names.update(n.vars)
        return Enumerator({v: self._values(v) for v in names},
                          None if self.arity else G.domain_values(self.domain))

    # ------------------------------------------------------------------
    def check_sat(self, e: Expr, want_model: bool = True):
        low = G.simplify(G.lower_tuples(e, self.arity))
        if isinstance(low, BoolConst):
            return Sat({}) if low.value else Unsat()
        key = G.show(low)
        if self.cfg.cache and key in self._cache:
            self.stats.cache_hits += 1
            hit = self._cache[key]
            if not (want_model and isinstance(hit, Sat) and hit.model is None):
                return hit
        t0 = time.perf_counter()
        self.stats.calls += 1
        try:
            verdict = self._check(low, want_model)
        finally:
            self.stats.time_ms += (time.perf_counter() - t0) * 1000
        if isinstance(verdict, Unknown):
            self.stats.unknown += 1
        elif self.cfg.cache:
            self._cache[key] = verdict
        return verdict

    def _check(self, low: Expr, want_model: bool):
        fv = sorted(G.free_vars(low))
        if self.backend == "enumerator":
            m = self._enumerator(low).first(low)
            if m is None:
                return Unsat()
            full = {v: m.get(v, self._values(v)[0]) for v in fv}
            return Sat(G.raise_assignment(full, self.arity))
        status, model, err = self._proc.run(
            smt_script(low, self.scalar_domain, self.cfg.logic, want_model), want_model)
        if status == "unsat":
            return Unsat()
        if status == "sat":
            if model is None:
                return Sat(None)
            full = {v: model.get(v, _default_of(self.scalar_domain(v))) for v in fv}
            return Sat(G.raise_assignment(full, self.arity))
        return Unknown(err or "solver returned unknown")

    def check_implication(self, lhs: Expr, rhs: Expr, want_model: bool = True):
        """Unsat means lhs implies rhs; Sat carries a counter-model."""
        return self.check_sat(G.and_(lhs, G.not_(rhs)), want_model)

    def implies(self, lhs: Expr, rhs: Expr) -> Optional[bool]:
        v = self.check_implication(lhs, rhs, want_model=False)
        if isinstance(v, Unknown):
            return None
        return isinstance(v, Unsat)

    def is_sat(self, e: Expr) -> Optional[bool]:
        v = self.check_sat(e, want_model=False)
        if isinstance(v, Unknown):
            return None
        return isinstance(v, Sat)

    def enumerate_models(self, e: Expr, cap: int = 1_000_000, variables: Sequence[str] = None) -> list:
        return enumerate_models(e, self.domain, cap, variables)


def _default_of(d: G.ScalarDomain) -> int:
    return d.lo if isinstance(d, G.FiniteRange) else 0


def enumerate_models(e: Expr, d: G.ColorDomain, cap: int = 1_000_000,
                     variables: Sequence[str] = None) -> List[Dict[str, G.Color]]:
    """All satisfying assignments over ``variables`` (default: free variables), lexicographically ordered."""
    if not G.is_finite(d):
        raise DomainError(f"cannot enumerate models over infinite domain {d}")
    arity = G.tuple_arity(d)
    names = sorted(variables if variables is not None else G.free_vars(e))
    low = G.simplify(G.lower_tuples(e, arity))
    low_names = [G.component_name(v, i) for v in names for i in range(arity)] if arity else names
    s = Solver(d, SolverConfig(backend="enumerator", cache=False))
    en = s._enumerator(low)
    for v in low_names:
        en.domains[v] = s._values(v)
    found = set()
    for m in en.solve(low, low_names):
        found.add(tuple(m[v] for v in low_names))
        if len(found) >= cap:
            break
    out = []
    for row in sorted(found):
        low_a = dict(zip(low_names, row))
        out.append(G.raise_assignment(low_a, arity))
    if arity:
        out.sort(key=lambda m: tuple(m[v] for v in names))
    return out


def check_sat(e: Expr, d: G.ColorDomain, cfg: SolverConfig = SolverConfig()):
    with Solver(d, cfg) as s:
        return s.check_sat(e)


def check_implication(lhs: Expr, rhs: Expr, d: G.ColorDomain, cfg: SolverConfig = SolverConfig()):
    with Solver(d, cfg) as s:
        return s.check_implication(lhs, rhs)
