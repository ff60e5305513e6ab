"""Sum-of-products event algebra over B, D, A and X literals.

Every term is a conjunction of literals times a numeric coefficient that
carries the accumulated r_{n;i}/r_n weights.  Literals are kept sorted by
variable id so like terms can be found by tuple equality.

Rules applied whenever two terms are multiplied:

* identical literals collapse (L.L = L); a collapsed A-literal also removes
  its duplicated weight from the coefficient;
* X and B literals asserting different states of one variable annihilate
  the term;
* two A-literals for the same child annihilate unless identical, because a
  child takes exactly one state through exactly one acting parent;
* an X-literal is absorbed by an A-literal of the same variable and state
  (the A-literal already implies it) and annihilated by a conflicting one;
* D-literals are units.

States may be ``UNKNOWN`` for matrix-level work (term censuses), where an
A-literal stands for a whole event matrix.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import NotExpandable, UnboundLiteral
from .graph import B, D, X, Evidence, Graph

UNKNOWN = -1


class Literal(NamedTuple):
    """One event.  Field order makes tuple order the canonical order."""

    var: int
    kind: str
    state: int = UNKNOWN
    parent: int = UNKNOWN
    parent_state: int = UNKNOWN

    def __str__(self):
        s = _fmt_state
        if self.kind == "A":
            return f"A({self.var},{s(self.state)};{self.parent},{s(self.parent_state)})"
        if self.kind == D:
            return f"D({self.var})"
        return f"{self.kind}({self.var},{s(self.state)})"


def _fmt_state(s):
    return "?" if s == UNKNOWN else str(s)


def b_lit(var, state=UNKNOWN):
    return Literal(var, B, state)


def d_lit(var):
    return Literal(var, D, 0)


def x_lit(var, state=UNKNOWN):
    return Literal(var, X, state)


def a_lit(child, child_state, parent, parent_state):
    return Literal(child, "A", child_state, parent, parent_state)


@dataclass(frozen=True)
class Term:
    coefficient: float
    literals: tuple[Literal, ...] = ()

    def x_vars(self) -> set[int]:
        return {l.var for l in self.literals if l.kind == X}

    def __str__(self):
        body = " ".join(str(l) for l in self.literals) or "1"
        return f"{self.coefficient:.8e} * {body}"


def _compatible(s1, s2):
    if s1 == s2 or s2 == UNKNOWN:
        return s1
    if s1 == UNKNOWN:
        return s2
    return None


def _merge(g: Graph, la, lb, coef):
    """Conjunction of two canonical literal tuples, or ``None`` if empty."""
    slots = {(l.var, l.kind): l for l in la}
    for lit in lb:
        key = (lit.var, lit.kind)
        cur = slots.get(key)
        if cur is None:
            slots[key] = lit
            continue
        if cur == lit:
            if lit.kind == "A":
                coef /= g.weight(lit.var, lit.parent)
            continue
        if lit.kind == "A":
            if cur.parent != lit.parent:
                return None
            st = _compatible(cur.state, lit.state)
            ps = _compatible(cur.parent_state, lit.parent_state)
            if st is None or ps is None:
                return None
            coef /= g.weight(lit.var, lit.parent)
            slots[key] = cur._replace(state=st, parent_state=ps)
        elif lit.kind == D:
            continue
        else:
            st = _compatible(cur.state, lit.state)
            if st is None:
                return None
            slots[key] = cur._replace(state=st)
    # X literals implied or contradicted by an A-literal of the same variable
    for (var, kind), lit in list(slots.items()):
        if kind != X:
            continue
        a = slots.get((var, "A"))
        if a is None:
            continue
        st = _compatible(a.state, lit.state)
        if st is None:
            return None
        if st != a.state:
            slots[(var, "A")] = a._replace(state=st)
        del slots[(var, kind)]
    return tuple(sorted(slots.values())), coef


class SymbolicExpr:
    """Sum of terms bound to one graph.  Immutable after construction."""

    __slots__ = ("graph", "_terms")

    def __init__(self, graph: Graph, terms: Mapping[tuple, float] | Iterable[Term] = ()):
        self.graph = graph
        if isinstance(terms, Mapping):
            self._terms = dict(terms)
        else:
            acc: dict[tuple, float] = {}
            for t in terms:
                key = tuple(sorted(t.literals))
                acc[key] = acc.get(key, 0.0) + t.coefficient
            self._terms = acc

    @classmethod
    def unit(cls, g: Graph) -> "SymbolicExpr":
        return cls(g, {(): 1.0})

    @classmethod
    def literal(cls, g: Graph, *lits: Literal) -> "SymbolicExpr":
        merged = _merge(g, (), tuple(sorted(lits)), 1.0)
        return cls(g, {} if merged is None else {merged[0]: merged[1]})

    @property
    def terms(self) -> list[Term]:
        return [Term(c, k) for k, c in sorted(self._terms.items())]

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __mul__(self, other):
        return multiply(self, other)

    def __add__(self, other):
        acc = dict(self._terms)
        for k, c in other.items():
            acc[k] = acc.get(k, 0.0) + c
        return SymbolicExpr(self.graph, acc)

    def same_as(self, other, rel=1e-12) -> bool:
        if self._terms.keys() != other._terms.keys():
            return False
        return all(
            abs(c - other._terms[k]) <= rel * max(abs(c), abs(other._terms[k]))
            for k, c in self._terms.items()
        )

    def __repr__(self):
        return f"SymbolicExpr({len(self)} terms)"

    def dump(self) -> str:
        return "".join(f"{t}\n" for t in self.terms)


def evidence_product(g: Graph, evidence: Evidence) -> SymbolicExpr:
    """E as a single conjunction of observed X-literals."""
    return SymbolicExpr.literal(g, *(x_lit(v, s) for v, s in evidence.items()))


def expand_event(g: Graph, var: int, state: int, by_state: bool = True) -> SymbolicExpr:
    """One-step expansion of X_{var,state} into its parents' events.

    With ``by_state`` the result has one term per (parent, parent-state);
    otherwise one matrix-level term per parent.  ``state`` may be
    ``UNKNOWN`` only in matrix-level mode.
    """
    if g.kind(var) != X:
        raise NotExpandable(f"variable {var} is {g.kind(var)}-kind; only X-kind expands")
    terms: dict[tuple, float] = {}
    for link in g.parent_links(var):
        p = link.parent
        w = g.weight(var, p)
        pk = g.kind(p)
        if by_state:
            pstates = range(g.states(p))
        else:
            pstates = (UNKNOWN,)
        for j in pstates:
            aj = 0 if pk == D else j
            if pk == D:
                v = d_lit(p)
            elif pk == B:
                v = b_lit(p, j)
            else:
                v = x_lit(p, j)
            key = tuple(sorted((a_lit(var, state, p, aj), v)))
            terms[key] = terms.get(key, 0.0) + w
            if pk == D:
                break
    return SymbolicExpr(g, terms)


def multiply(a: SymbolicExpr, b: SymbolicExpr) -> SymbolicExpr:
    g = a.graph
    acc: dict[tuple, float] = {}
    for la, ca in a.items():
        for lb, cb in b.items():
            m = _merge(g, la, lb, ca * cb)
            if m is not None:
                acc[m[0]] = acc.get(m[0], 0.0) + m[1]
    return SymbolicExpr(g, acc)


def _expansion(g, lit, by_state, cache):
    key = (lit.var, lit.state, by_state)
    exp = cache.get(key)
    if exp is None:
        if by_state and lit.state == UNKNOWN:
            acc: dict[tuple, float] = {}
            for k in range(g.states(lit.var)):
                for lits, c in expand_event(g, lit.var, k, True).items():
                    acc[lits] = acc.get(lits, 0.0) + c
            exp = list(acc.items())
        else:
            exp = list(expand_event(g, lit.var, lit.state, by_state).items())
        cache[key] = exp
    return exp


def expand_term(g: Graph, lits: tuple, coef: float, by_state=True, cache=None, only=None):
    """Replace the X-literals of one term by their expansions.

    ``only`` restricts which X variables are expanded.
    """
    cache = {} if cache is None else cache
    base = tuple(l for l in lits if not (l.kind == X and (only is None or l.var in only)))
    partial = {base: coef}
    for lit in lits:
        if lit.kind != X or (only is not None and lit.var not in only):
            continue
        nxt: dict[tuple, float] = {}
        for pl, pc in partial.items():
            for el, ec in _expansion(g, lit, by_state, cache):
                m = _merge(g, pl, el, pc * ec)
                if m is not None:
                    nxt[m[0]] = nxt.get(m[0], 0.0) + m[1]
        partial = nxt
    return partial


def expand_layer(g: Graph, e: SymbolicExpr, by_state: bool = True, only=None) -> SymbolicExpr:
    """Expand every X-literal of ``e`` one step towards the roots."""
    cache: dict = {}
    acc: dict[tuple, float] = {}
    for lits, c in e.items():
        for k, v in expand_term(g, lits, c, by_state, cache, only).items():
            acc[k] = acc.get(k, 0.0) + v
    return SymbolicExpr(g, acc)


def substitute(e: SymbolicExpr, assignments: Mapping[int, int]) -> SymbolicExpr:
    """Fix B or X variables to known states: matching literals become 1,
    conflicting ones zero their term."""
    acc: dict[tuple, float] = {}
    for lits, c in e.items():
        keep = []
        for l in lits:
            if l.kind in (B, X) and l.var in assignments:
                if l.state != UNKNOWN and l.state != assignments[l.var]:
                    break
                continue
            keep.append(l)
        else:
            k = tuple(keep)
            acc[k] = acc.get(k, 0.0) + c
    return SymbolicExpr(e.graph, acc)


def has_x(e: SymbolicExpr) -> bool:
    return any(l.kind == X for lits, _ in e.items() for l in lits)


def fully_expand(g: Graph, e: SymbolicExpr, fixed: Mapping[int, int] | None = None,
                 max_terms: int | None = None) -> SymbolicExpr:
    """Expand until no X-literal remains, substituting ``fixed`` after each step."""
    from .errors import RecursionInfeasible

    if fixed:
        e = substitute(e, fixed)
    while has_x(e):
        e = expand_layer(g, e)
        if fixed:
            e = substitute(e, fixed)
        if max_terms is not None and len(e) > max_terms:
            raise RecursionInfeasible(f"expression grew to {len(e)} terms (cap {max_terms})")
    return e


def f_order(t: Term) -> int:
    return sum(1 for l in t.literals if l.kind == "A")


@dataclass(frozen=True)
class TermCensus:
    by_x_count: dict[int, int] = field(default_factory=dict)
    max_f_order: int = 0

    @property
    def total(self) -> int:
        return sum(self.by_x_count.values())

    @property
    def one_x(self) -> int:
        return self.by_x_count.get(1, 0)

    @property
    def two_x(self) -> int:
        return self.by_x_count.get(2, 0)

    @property
    def three_x(self) -> int:
        return self.by_x_count.get(3, 0)

    def abc(self) -> tuple[int, int, int]:
        return self.one_x, self.two_x, self.three_x


def census(e: SymbolicExpr) -> TermCensus:
    counts = Counter()
    max_f = 0
    for t in e.terms:
        counts[len(t.x_vars())] += 1
        max_f = max(max_f, f_order(t))
    return TermCensus(dict(counts), max_f)


def literal_value(g: Graph, lit: Literal, x_values=None, b_values=None) -> float:
    if lit.kind == D:
        return 1.0
    if lit.state == UNKNOWN:
        raise UnboundLiteral(f"matrix-level literal {lit} has no numeric value")
    if lit.kind == "A":
        if lit.parent_state == UNKNOWN:
            raise UnboundLiteral(f"matrix-level literal {lit} has no numeric value")
        return float(g.link(lit.var, lit.parent).matrix[lit.state, lit.parent_state])
    if lit.kind == B:
        if b_values is not None and (lit.var, lit.state) in b_values:
            return float(b_values[(lit.var, lit.state)])
        return float(g.variables[lit.var].prior[lit.state])
    if x_values is None or (lit.var, lit.state) not in x_values:
        raise UnboundLiteral(f"no value supplied for {lit}")
    return float(x_values[(lit.var, lit.state)])


def evaluate(e: SymbolicExpr, g: Graph | None = None, x_values=None, b_values=None) -> float:
    """Weighted-OR numeric value: coefficients times literal probabilities.

    ``x_values`` and ``b_values`` map ``(var, state)`` to a probability; B
    literals default to the variable's prior.
    """
    g = e.graph if g is None else g
    total = 0.0
    for lits, c in sorted(e.items()):
        v = c
        for l in lits:
            v *= literal_value(g, l, x_values, b_values)
            if v == 0.0:
                break
        total += v
    return total
