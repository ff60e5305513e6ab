"""Reference inference: enumeration, symbolic expansion, marginal propagation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from . import algebra
from .errors import EnumerationInfeasible, EvidenceImpossible
from .graph import B, D, X, Evidence, Graph, restrict_to_hypothesis

ENUMERATION_CAP = 10**8
INNER_BLOCK = 2**20


@dataclass(frozen=True)
class HypothesisResult:
    hypothesis: tuple[int, int]
    likelihood: float
    joint: float
    posterior: float | None = None
    n_cycles: int | None = None
    converged: bool = True

    @classmethod
    def partial(cls, g: Graph, hypothesis, likelihood, **kw) -> "HypothesisResult":
        var, state = hypothesis
        prior = g.variables[var].prior[state]
        return cls(tuple(hypothesis), float(likelihood), float(likelihood) * prior, **kw)


def conditional_distribution(g: Graph, var: int, parent_states: Mapping[int, int]) -> np.ndarray:
    """Weighted-OR conditional of ``var`` given one state per parent."""
    out = np.zeros(g.states(var))
    for link in g.parent_links(var):
        if g.kind(link.parent) == D:
            j = 0
        else:
            try:
                j = parent_states[link.parent]
            except KeyError:
                raise KeyError(f"no state given for parent {link.parent} of {var}") from None
        out += g.weight(var, link.parent) * link.matrix[:, j]
    return out


def _plan(g: Graph, evidence: Evidence, hypothesis):
    hv, hs = hypothesis
    fixed = {hv: hs}
    fixed.update(evidence.items())
    unknown = [v for v in g.topological_order if g.kind(v) != D and v not in fixed]
    return fixed, unknown


def enumerate_likelihood(g: Graph, evidence: Evidence, hypothesis, cap: float = ENUMERATION_CAP,
                         restrict: bool = True) -> float:
    """Pr{E | B_kj} by summing the joint over every unknown assignment.

    Other B variables (only present when ``restrict`` is off) are summed
    against their priors.  Outer unknowns run through an odometer; the
    trailing block is vectorised.
    """
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    fixed, unknown = _plan(g, evidence, hypothesis)
    sizes = [g.states(v) for v in unknown]
    space = math.prod(sizes)
    if space > cap:
        raise EnumerationInfeasible(f"joint state space {space:.3g} exceeds cap {cap:.3g}")

    # split the unknowns: the last ones go into a vectorised block
    split = len(unknown)
    block = 1
    while split > 0 and block * sizes[split - 1] <= INNER_BLOCK:
        split -= 1
        block *= sizes[split]
    outer, inner = unknown[:split], unknown[split:]
    inner_sizes = sizes[split:]
    grids = np.indices(inner_sizes).reshape(len(inner), -1) if inner else np.zeros((0, 1), int)
    inner_state = {v: grids[i] for i, v in enumerate(inner)}

    factors = [v for v in g.topological_order if g.kind(v) == X]
    partials = []
    for combo in itertools.product(*(range(s) for s in sizes[:split])):
        state = dict(fixed)
        state.update(zip(outer, combo))
        state.update(inner_state)
        prob = np.ones(block)
        for v in factors:
            sv = state[v]
            acc = 0.0
            for link in g.parent_links(v):
                p = link.parent
                sp = 0 if g.kind(p) == D else state[p]
                acc = acc + g.weight(v, p) * link.matrix[sv, sp]
            prob = prob * acc
        for v in g.of_kind(B):
            if v != hypothesis[0]:
                prob = prob * np.asarray(g.variables[v].prior)[state[v]]
        partials.append(math.fsum(prob))
    return math.fsum(partials)


def expansion_likelihood(g: Graph, evidence: Evidence, hypothesis, max_terms: int | None = 10**6,
                         restrict: bool = True) -> float:
    """Pr{E | B_kj} from the fully expanded evidence product."""
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    e = algebra.evidence_product(g, evidence)
    full = algebra.fully_expand(g, e, fixed={hypothesis[0]: hypothesis[1]}, max_terms=max_terms)
    return algebra.evaluate(full)


def marginal_propagation(g: Graph, hypothesis, clamp: Mapping[int, int] | None = None) -> dict[int, np.ndarray]:
    """Per-variable marginals given B_kj, by pushing parent marginals
    through the linear weighted-OR map in topological order.

    ``clamp`` pins listed variables to one-hot vectors (observed states);
    their descendants then see the clamped value.
    """
    hv, hs = hypothesis
    clamp = clamp or {}
    out: dict[int, np.ndarray] = {}
    for v in g.topological_order:
        kind = g.kind(v)
        if v in clamp:
            vec = np.zeros(g.states(v))
            vec[clamp[v]] = 1.0
        elif kind == D:
            vec = np.ones(1)
        elif kind == B:
            if v == hv:
                vec = np.zeros(g.states(v))
                vec[hs] = 1.0
            else:
                vec = np.asarray(g.variables[v].prior, dtype=float)
        else:
            vec = np.zeros(g.states(v))
            for link in g.parent_links(v):
                vec += g.weight(v, link.parent) * (link.matrix @ out[link.parent])
        out[v] = vec
    return out


def posterior(results: list[HypothesisResult]) -> list[HypothesisResult]:
    """Normalise joints over the hypothesis set."""
    total = math.fsum(r.joint for r in results)
    if not total > 0.0:
        raise EvidenceImpossible("evidence impossible under all hypotheses")
    return [replace(r, posterior=r.joint / total) for r in results]
