"""Conditional stochastic simulation for Pr{E | B_kj}.

Each cycle redraws every state-unknown variable from its weighted-OR
conditional given its parents (ancestors first, the hypothesis fixed,
evidence never touched) and scores the cycle with a per-cycle likelihood
P_t.  The estimate is the running mean of P_t; a windowed relative-error
rule decides when to stop.

Two per-cycle estimators are available.  The simple one multiplies the
evidence conditionals given sampled parents.  It is biased when evidence
nodes share unknown ancestors, because the product then double counts the
shared draw; the cut-off estimator instead expands the evidence product
symbolically for a few layers and substitutes sampled indicators only into
terms that mention a single unknown variable.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Mapping

import numpy as np

from . import algebra
from .algebra import SymbolicExpr
from .errors import UnboundLiteral
from .exact import HypothesisResult
from .generators import rng_for
from .graph import B, D, X, Evidence, Graph, layer_assignment, restrict_to_hypothesis

CONTINUE, CONVERGED, CAP_REACHED = "continue", "converged", "cap_reached"


def c_from_delta(delta: float) -> float:
    """Two-sided normal quantile: P(|Z| > c) = delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return NormalDist().inv_cdf(1.0 - delta / 2.0)


@dataclass(frozen=True)
class SamplerConfig:
    burn_in: int = 300
    window: int = 200
    epsilon: float = 1e-3
    delta: float = 0.05
    c: float | None = None
    ig_layer: int = 2
    ig_x: int = 6
    cycle_max: int = 100_000
    seed: int = 0
    estimator: str = "auto"  # auto | simple | cutoff

    def __post_init__(self):
        problems = []
        if self.burn_in < 1 or self.window < 1:
            problems.append("burn_in and window must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            problems.append("epsilon must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            problems.append("delta must lie in (0, 1)")
        if self.c is not None and not self.c > 0:
            problems.append("c must be positive")
        if self.ig_layer < 1 or self.ig_x < 1:
            problems.append("ig_layer and ig_x must be >= 1")
        if self.cycle_max <= self.burn_in + self.window:
            problems.append("cycle_max must exceed burn_in + window")
        if self.estimator not in ("auto", "simple", "cutoff"):
            problems.append(f"unknown estimator {self.estimator!r}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def c_value(self) -> float:
        return self.c if self.c is not None else c_from_delta(self.delta)


@dataclass
class SampleAssignment:
    states: dict[int, int]
    t: int = 0


@dataclass
class SamplerTrace:
    p: list[float] = field(default_factory=list)
    running_mean: list[float] = field(default_factory=list)
    window_mean: list[float] = field(default_factory=list)
    window_std: list[float] = field(default_factory=list)
    verdict: list[str] = field(default_factory=list)
    state_counts: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.p)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "P_t", "running_mean", "window_mean", "window_std", "verdict"])
        for i in range(self.n):
            w.writerow([
                i + 1,
                f"{self.p[i]:.9g}",
                f"{self.running_mean[i]:.9g}",
                _fmt(self.window_mean[i]),
                _fmt(self.window_std[i]),
                self.verdict[i],
            ])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(x):
    return "" if x is None or math.isnan(x) else f"{x:.9g}"


# -- compiled sampler -------------------------------------------------------


class _Compiled:
    """Flat lookup tables for one (graph, evidence, hypothesis)."""

    def __init__(self, g: Graph, evidence: Evidence, hypothesis):
        hv, hs = hypothesis
        self.g = g
        layer = layer_assignment(g)
        self.unknown = sorted(
            (v for v in g.variables if g.kind(v) == X and v not in evidence),
            key=lambda v: (layer[v], v),
        )
        self.index = {v: i for i, v in enumerate(self.unknown)}
        self.sizes = [g.states(v) for v in self.unknown]

        def fixed_state(p):
            if g.kind(p) == D:
                return 0
            if p == hv:
                return hs
            if p in evidence:
                return evidence[p]
            return None

        self.nodes = []
        for v in self.unknown:
            base = [0.0] * g.states(v)
            dyn = []
            for link in g.parent_links(v):
                w = g.weight(v, link.parent)
                s = fixed_state(link.parent)
                if s is None and g.kind(link.parent) == B:
                    # a non-hypothesis root contributes its prior-averaged column
                    col = link.matrix @ np.asarray(g.variables[link.parent].prior)
                    base = [b + w * c for b, c in zip(base, col)]
                elif s is None:
                    cols = [tuple(w * link.matrix[:, j]) for j in range(link.matrix.shape[1])]
                    dyn.append((self.index[link.parent], cols))
                else:
                    base = [b + w * c for b, c in zip(base, link.matrix[:, s])]
            self.nodes.append((base, dyn))

        self.ev_terms = []
        for e, obs in evidence.items():
            base = 0.0
            dyn = []
            for link in g.parent_links(e):
                w = g.weight(e, link.parent)
                s = fixed_state(link.parent)
                row = link.matrix[obs]
                if s is None and g.kind(link.parent) == B:
                    base += w * float(row @ np.asarray(g.variables[link.parent].prior))
                elif s is None:
                    dyn.append((self.index[link.parent], tuple(w * row)))
                else:
                    base += w * row[s]
            self.ev_terms.append((base, dyn))

    def draw(self, states: list[int], u: np.ndarray) -> None:
        for i, (base, dyn) in enumerate(self.nodes):
            probs = list(base)
            for pidx, cols in dyn:
                col = cols[states[pidx]]
                for k in range(len(probs)):
                    probs[k] += col[k]
            x = u[i]
            acc = 0.0
            last = len(probs) - 1
            s = last
            for k in range(last):
                acc += probs[k]
                if x < acc:
                    s = k
                    break
            states[i] = s

    def simple_likelihood(self, states: list[int]) -> float:
        out = 1.0
        for base, dyn in self.ev_terms:
            f = base
            for pidx, row in dyn:
                f += row[states[pidx]]
            out *= f
        return out


def init_assignment(g: Graph, evidence: Evidence, hypothesis, rng: np.random.Generator,
                    _c: _Compiled | None = None) -> SampleAssignment:
    """Uniform random state for every unknown X variable."""
    c = _c or _Compiled(g, evidence, hypothesis)
    return SampleAssignment({v: int(rng.integers(0, k)) for v, k in zip(c.unknown, c.sizes)}, 0)


def resample_cycle(g: Graph, evidence: Evidence, hypothesis, a: SampleAssignment,
                   rng: np.random.Generator, _c: _Compiled | None = None) -> SampleAssignment:
    """One ancestral sweep over the unknown variables."""
    c = _c or _Compiled(g, evidence, hypothesis)
    states = [a.states[v] for v in c.unknown]
    c.draw(states, rng.random(len(states)))
    return SampleAssignment(dict(zip(c.unknown, states)), a.t + 1)


def cycle_likelihood_simple(g: Graph, evidence: Evidence, hypothesis, a: SampleAssignment,
                            _c: _Compiled | None = None) -> float:
    """Product over evidence nodes of their conditional given current parents."""
    c = _c or _Compiled(g, evidence, hypothesis)
    return c.simple_likelihood([a.states[v] for v in c.unknown])


# -- cut-off estimator ------------------------------------------------------


@dataclass
class CutoffExpression:
    """Frozen expression: constant terms plus single-unknown leaves.

    ``weights[v][s]`` is the summed coefficient of leaves asserting X(v, s),
    so a cycle contributes ``constant + sum_v weights[v][S_v]``.
    """

    expr: SymbolicExpr
    constant: float
    weights: dict[int, np.ndarray]
    dropped_terms: int = 0
    steps: int = 0

    @property
    def leaves(self) -> set[int]:
        return set(self.weights)

    def expected(self, marginals: Mapping[int, np.ndarray]) -> float:
        """Value with each leaf indicator replaced by its marginal."""
        return self.constant + math.fsum(
            float(w @ marginals[v]) for v, w in sorted(self.weights.items())
        )


def _root_parented(g, var):
    return all(g.kind(p) in (B, D) for p in g.parents(var))


def build_cutoff_expression(g: Graph, evidence: Evidence, hypothesis, ig_layer: int = 2,
                            ig_x: int = 6) -> CutoffExpression:
    """Expand the evidence product for at most ``ig_layer`` steps, freezing
    constant and single-unknown terms and dropping the rest."""
    if ig_layer < 1 or ig_x < 1:
        raise ValueError("ig_layer and ig_x must be >= 1")
    hv, hs = hypothesis
    fixed = {hv: hs}
    frozen: dict[tuple, float] = {}
    dropped = 0
    work = algebra.substitute(algebra.evidence_product(g, evidence), fixed)
    steps = 0

    def unknown_x(lits):
        return {l.var for l in lits if l.kind == X and l.var not in evidence}

    def has_evidence_lit(lits):
        return any(l.kind == X and l.var in evidence for l in lits)

    while len(work) and steps < ig_layer:
        work = algebra.substitute(algebra.expand_layer(g, work), fixed)
        steps += 1
        # terms whose unknowns all hang directly off roots are grounded for free
        grounded: dict[tuple, float] = {}
        cache: dict = {}
        rest: dict[tuple, float] = {}
        for lits, c in work.items():
            xs = {l.var for l in lits if l.kind == X}
            if len(unknown_x(lits)) > 1 and all(_root_parented(g, v) for v in xs):
                for k, v in algebra.expand_term(g, lits, c, True, cache).items():
                    grounded[k] = grounded.get(k, 0.0) + v
            else:
                rest[lits] = rest.get(lits, 0.0) + c
        if grounded:
            for k, v in algebra.substitute(SymbolicExpr(g, grounded), fixed).items():
                rest[k] = rest.get(k, 0.0) + v
        keep: dict[tuple, float] = {}
        for lits, c in rest.items():
            ux = unknown_x(lits)
            if not has_evidence_lit(lits) and len(ux) <= 1:
                frozen[lits] = frozen.get(lits, 0.0) + c
            elif len(ux) > ig_x:
                dropped += 1
            else:
                keep[lits] = c
        work = SymbolicExpr(g, keep)
    dropped += len(work)

    expr = SymbolicExpr(g, frozen)
    constant = 0.0
    weights: dict[int, np.ndarray] = {}
    parts = []
    for lits, c in sorted(frozen.items()):
        val = c
        leaf = None
        for l in lits:
            if l.kind == X:
                leaf = l
                continue
            val *= algebra.literal_value(g, l)
        if leaf is None:
            parts.append(val)
        else:
            w = weights.setdefault(leaf.var, np.zeros(g.states(leaf.var)))
            w[leaf.state] += val
    constant = math.fsum(parts)
    return CutoffExpression(expr, constant, weights, dropped, steps)


def cycle_likelihood_cutoff(cx: CutoffExpression, a: SampleAssignment) -> float:
    out = cx.constant
    for v, w in cx.weights.items():
        if v not in a.states:
            raise UnboundLiteral(f"leaf variable {v} missing from the assignment")
        out += w[a.states[v]]
    return out


def shares_unknown_ancestor(g: Graph, evidence: Evidence) -> bool:
    seen: set[int] = set()
    for e in evidence:
        anc = {v for v in g.ancestors(e) if g.kind(v) == X and v not in evidence}
        if anc & seen:
            return True
        seen |= anc
    return False


def choose_estimator(g: Graph, evidence: Evidence, cfg: SamplerConfig) -> str:
    if cfg.estimator != "auto":
        return cfg.estimator
    if len(evidence) <= 1 or not shares_unknown_ancestor(g, evidence):
        return "simple"
    return "cutoff"


# -- halting ----------------------------------------------------------------


def window_stats(running_mean, window: int) -> tuple[float, float]:
    w = np.asarray(running_mean[-window:], dtype=float)
    mu = float(w.mean())
    return mu, float(np.sqrt(np.mean((w - mu) ** 2)))


def halting_check(trace: SamplerTrace, cfg: SamplerConfig) -> str:
    """Verdict after the latest cycle, from the last ``window`` running means."""
    t = trace.n
    if t >= cfg.cycle_max:
        return CAP_REACHED
    if t < cfg.burn_in + cfg.window:
        return CONTINUE
    mu, sd = window_stats(trace.running_mean, cfg.window)
    return CONVERGED if _converged(mu, sd, cfg.c_value, cfg.epsilon) else CONTINUE


def _converged(mu, sd, c, eps):
    if mu == 0.0 and sd == 0.0:
        return True
    return c * sd < eps * mu


def run(g: Graph, evidence: Evidence, hypothesis, cfg: SamplerConfig = SamplerConfig(),
        restrict: bool = True, count_states: bool = False) -> tuple[HypothesisResult, SamplerTrace]:
    """Sample until the halting rule fires or ``cycle_max`` is reached."""
    full = g
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    comp = _Compiled(g, evidence, hypothesis)
    rng = rng_for(cfg.seed, *hypothesis)
    kind = choose_estimator(g, evidence, cfg)
    cx = build_cutoff_expression(g, evidence, hypothesis, cfg.ig_layer, cfg.ig_x) if kind == "cutoff" else None
    if cx is not None:
        leaf_idx = [(comp.index[v], tuple(float(x) for x in w)) for v, w in sorted(cx.weights.items())]

    c = cfg.c_value
    n_unknown = len(comp.unknown)
    states = [int(rng.integers(0, k)) for k in comp.sizes]
    trace = SamplerTrace()
    counts = [np.zeros(k, dtype=np.int64) for k in comp.sizes] if count_states else None
    mean = 0.0
    verdict = CONTINUE
    nan = float("nan")
    t = 0
    while True:
        t += 1
        comp.draw(states, rng.random(n_unknown))
        if cx is None:
            p = comp.simple_likelihood(states)
        else:
            p = cx.constant
            for idx, w in leaf_idx:
                p += w[states[idx]]
        mean += (p - mean) / t
        trace.p.append(p)
        trace.running_mean.append(mean)
        if counts is not None and t > cfg.burn_in:
            for i, s in enumerate(states):
                counts[i][s] += 1
        if t >= cfg.burn_in + cfg.window:
            mu, sd = window_stats(trace.running_mean, cfg.window)
            verdict = CONVERGED if _converged(mu, sd, c, cfg.epsilon) else CONTINUE
        else:
            mu = sd = nan
        if verdict != CONVERGED and t >= cfg.cycle_max:
            verdict = CAP_REACHED
        trace.window_mean.append(mu)
        trace.window_std.append(sd)
        trace.verdict.append(verdict)
        if verdict != CONTINUE:
            break
    if counts is not None:
        trace.state_counts = dict(zip(comp.unknown, counts))
    result = HypothesisResult.partial(
        full, hypothesis, mean, n_cycles=t, converged=verdict == CONVERGED
    )
    return result, trace


def sample_frequencies(g: Graph, evidence: Evidence, hypothesis, n_cycles: int, burn_in: int = 300,
                       seed: int = 0, restrict: bool = True) -> dict[int, np.ndarray]:
    """Empirical state frequencies of every unknown variable over
    ``n_cycles`` post-burn-in cycles."""
    if restrict:
        g = restrict_to_hypothesis(g, evidence, hypothesis[0])
    comp = _Compiled(g, evidence, hypothesis)
    rng = rng_for(seed, *hypothesis)
    states = [int(rng.integers(0, k)) for k in comp.sizes]
    counts = [np.zeros(k, dtype=np.int64) for k in comp.sizes]
    for t in range(burn_in + n_cycles):
        comp.draw(states, rng.random(len(states)))
        if t >= burn_in:
            for i, s in enumerate(states):
                counts[i][s] += 1
    return {v: cnt / n_cycles for v, cnt in zip(comp.unknown, counts)}
