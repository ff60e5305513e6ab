"""Layer-by-layer exact inference.

Evidence is absorbed from the deepest layer upwards.  The working
expression is a map from a *frontier* (the states still required of
not-yet-expanded unknown variables) to a numeric coefficient; A-literal
values are folded in as soon as they appear and observed states are
substituted immediately, so only unknown intermediates stay symbolic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from . import algebra
from .algebra import SymbolicExpr, x_lit
from .errors import AssumptionsNotSatisfied, RecursionInfeasible
from .graph import B, D, X, Evidence, Graph, layer_assignment, restrict_to_hypothesis

TERM_CAP = 10**6


@dataclass(frozen=True)
class LayerPlan:
    layers: dict[int, list[int]]
    aeb: dict[int, set[int]]
    strict_layering: bool
    parents_observed: bool
    layer_of: dict[int, int] = field(default_factory=dict)


def plan(g: Graph, evidence: Evidence, hypothesis, restrict: bool = True) -> LayerPlan:
    """Partition evidence by layer and check the layering assumptions.

    strict_layering: every parent of an E(l) member is in E(l-1) or is the hypothesis.
    parents_observed: every parent of every evidence node is evidence, B or D.
    """
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    layer = layer_assignment(g, hypothesis[0])
    layers: dict[int, list[int]] = {}
    for e in evidence:
        layers.setdefault(layer[e], []).append(e)
    layers = {l: sorted(vs) for l, vs in sorted(layers.items())}
    aeb: dict[int, set[int]] = {}
    strict = known = True
    for l, members in layers.items():
        below = set(layers.get(l - 1, ()))
        s = set()
        for e in members:
            for p in g.parents(e):
                kind = g.kind(p)
                if p in evidence or kind in (B, D):
                    s.add(p)
                else:
                    known = False
                if not (p in below or p == hypothesis[0]):
                    strict = False
        aeb[l] = s
    return LayerPlan(layers, aeb, strict, known, layer)


def likelihood_layered(g: Graph, evidence: Evidence, hypothesis, lp: LayerPlan | None = None,
                       restrict: bool = True) -> float:
    """Product over evidence nodes of their weighted-OR factor over AEB parents."""
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    lp = lp or plan(g, evidence, hypothesis, restrict=False)
    if not lp.parents_observed:
        raise AssumptionsNotSatisfied(
            "assumptions not satisfied; use recursive_general or sampling"
        )
    hv, hs = hypothesis
    others = [b for b in g.of_kind(B) if b != hv]
    total = 0.0
    # other roots (only present without restriction) are summed against priors
    for combo in itertools.product(*(range(g.states(b)) for b in others)):
        known = dict(evidence.items())
        known[hv] = hs
        known.update(zip(others, combo))
        out = math.prod(g.variables[b].prior[j] for b, j in zip(others, combo))
        for l in sorted(lp.layers):
            for e in lp.layers[l]:
                f = 0.0
                for link in g.parent_links(e):
                    p = link.parent
                    j = 0 if g.kind(p) == D else known[p]
                    f += g.weight(e, p) * link.matrix[known[e], j]
                out *= f
        total += out
    return total


def _absorb_evidence(terms, var, state):
    out = {}
    for key, c in terms.items():
        d = dict(key)
        s = d.get(var)
        if s is not None and s != state:
            continue
        if s is None:
            d[var] = state
            key = tuple(sorted(d.items()))
        out[key] = out.get(key, 0.0) + c
    return out


def _expand_var(g, terms, var, hypothesis):
    hv, hs = hypothesis
    links = g.parent_links(var)
    out: dict[tuple, float] = {}
    for key, c in terms.items():
        d = dict(key)
        s = d.pop(var, None)
        if s is None:
            out[key] = out.get(key, 0.0) + c
            continue
        for link in links:
            p = link.parent
            w = c * g.weight(var, p)
            kind = g.kind(p)
            if kind == D:
                k2 = tuple(sorted(d.items()))
                out[k2] = out.get(k2, 0.0) + w * link.matrix[s, 0]
            elif kind == B and p == hv:
                k2 = tuple(sorted(d.items()))
                out[k2] = out.get(k2, 0.0) + w * link.matrix[s, hs]
            else:
                have = d.get(p)
                for j in range(g.states(p)) if have is None else (have,):
                    a = link.matrix[s, j]
                    if a == 0.0:
                        continue
                    d2 = dict(d)
                    d2[p] = j
                    k2 = tuple(sorted(d2.items()))
                    out[k2] = out.get(k2, 0.0) + w * a
    return out


def recursive_general(g: Graph, evidence: Evidence, hypothesis, lp: LayerPlan | None = None,
                      term_cap: int = TERM_CAP, restrict: bool = True) -> float:
    """Exact Pr{E | B_kj} by descending-layer expansion with immediate
    substitution of observed states."""
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    lp = lp or plan(g, evidence, hypothesis, restrict=False)
    by_layer: dict[int, list[int]] = {}
    for v, l in lp.layer_of.items():
        if g.kind(v) == X:
            by_layer.setdefault(l, []).append(v)
    terms: dict[tuple, float] = {(): 1.0}
    for l in sorted(by_layer, reverse=True):
        for e in lp.layers.get(l, ()):
            terms = _absorb_evidence(terms, e, evidence[e])
        for v in sorted(by_layer[l]):
            terms = _expand_var(g, terms, v, hypothesis)
            if len(terms) > term_cap:
                raise RecursionInfeasible(
                    f"intermediate expression has {len(terms)} terms (cap {term_cap})"
                )
    # whatever is left on the frontier are non-hypothesis roots
    return math.fsum(
        c * math.prod(g.variables[v].prior[j] for v, j in key) for key, c in terms.items()
    )


# -- factored expressions ---------------------------------------------------
#
# A factored expansion of X(v,s) is a sum over parents of
# A(v,s;p,.) times the parent's own factored expansion, stopping at roots
# and (for the recursive scheme) at observed parents.  Counting A tokens in
# that nested form gives the size of the written-out expressions.


def factored_a_count(g: Graph, var: int, evidence: Evidence, stop_at_evidence: bool) -> int:
    total = 0
    for p in g.parents(var):
        total += 1
        if g.kind(p) in (B, D) or (stop_at_evidence and p in evidence):
            continue
        total += factored_a_count(g, p, evidence, stop_at_evidence)
    return total


def _stop_expand(g: Graph, var: int, state: int, evidence: Evidence) -> SymbolicExpr:
    """Expansion of X(var,state) down to B/D and observed variables; observed
    parents stay as literals fixed at their observed state."""
    e = SymbolicExpr.literal(g, x_lit(var, state))
    e = algebra.expand_layer(g, e)
    while True:
        free = {l.var for lits, _ in e.items() for l in lits if l.kind == X and l.var not in evidence}
        if not free:
            break
        e = algebra.expand_layer(g, e, only=free)
    seen = {l.var for lits, _ in e.items() for l in lits if l.kind == X}
    pinned = [x_lit(v, evidence[v]) for v in sorted(seen)]
    return algebra.multiply(e, SymbolicExpr.literal(g, *pinned)) if pinned else e


@dataclass(frozen=True)
class CompactionReport:
    recursive_a_count: int
    single_shot_a_count: int
    recursive_value: float
    single_shot_value: float
    recursive_terms: int
    single_shot_terms: int


def recursive_expression(g: Graph, evidence: Evidence, hypothesis, restrict: bool = True):
    """Per-evidence factor expressions of the recursive scheme and their
    event product (state-level, B substituted)."""
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    factors = [_stop_expand(g, v, s, evidence) for v, s in evidence.items()]
    prod = SymbolicExpr.unit(g)
    for f in factors:
        prod = algebra.multiply(prod, f)
    prod = algebra.fully_expand(g, prod, fixed={hypothesis[0]: hypothesis[1]})
    return factors, prod


def compaction_report(g: Graph, evidence: Evidence, hypothesis, restrict: bool = True) -> CompactionReport:
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    rec = sum(factored_a_count(g, v, evidence, True) for v in evidence)
    single = sum(factored_a_count(g, v, evidence, False) for v in evidence)
    _, rec_expr = recursive_expression(g, evidence, hypothesis, restrict=False)
    full = algebra.fully_expand(
        g, algebra.evidence_product(g, evidence), fixed={hypothesis[0]: hypothesis[1]}
    )
    return CompactionReport(
        rec, single, algebra.evaluate(rec_expr), algebra.evaluate(full), len(rec_expr), len(full)
    )
