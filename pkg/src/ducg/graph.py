"""DUCG data model: variables, weighted causal links, evidence.

A child's conditional distribution is the r-weighted average of the matrix
columns selected by its parents' states (the weighted-OR rule).  Column ``j``
of a link matrix is the child distribution caused by parent state ``j``,
counting states from 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import DisconnectedHypothesis, GraphFormatError, ValidationError

B, X, D = "B", "X", "D"
KINDS = (B, X, D)

COLUMN_TOL = 1e-9


@dataclass(frozen=True)
class Variable:
    id: int
    kind: str
    states: int
    prior: tuple[float, ...] | None = None
    observed: int | None = None


@dataclass(frozen=True, eq=False)
class CausalLink:
    child: int
    parent: int
    r: float
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other):
        if not isinstance(other, CausalLink):
            return NotImplemented
        return (
            (self.child, self.parent, self.r) == (other.child, other.parent, other.r)
            and self.matrix.shape == other.matrix.shape
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.child, self.parent))


class Graph:
    """Immutable DAG of variables and causal links.

    Construction performs no validation so that :func:`validate` can report
    on malformed graphs; loaders and generators validate before returning.
    """

    def __init__(self, variables: Iterable[Variable], links: Iterable[CausalLink]):
        self.variables: Mapping[int, Variable] = MappingProxyType(
            {v.id: v for v in sorted(variables, key=lambda v: v.id)}
        )
        self.links: tuple[CausalLink, ...] = tuple(
            sorted(links, key=lambda l: (l.child, l.parent))
        )

    def __repr__(self):
        return f"Graph({len(self.variables)} variables, {len(self.links)} links)"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return dict(self.variables) == dict(other.variables) and self.links == other.links

    __hash__ = None

    # mapping proxies and cached properties don't pickle; rebuild instead
    def __reduce__(self):
        return Graph, (list(self.variables.values()), list(self.links))

    def kind(self, v: int) -> str:
        return self.variables[v].kind

    def states(self, v: int) -> int:
        return self.variables[v].states

    @cached_property
    def _parents(self) -> dict[int, tuple[CausalLink, ...]]:
        out: dict[int, list[CausalLink]] = {v: [] for v in self.variables}
        for link in self.links:
            out.setdefault(link.child, []).append(link)
        return {v: tuple(ls) for v, ls in out.items()}

    @cached_property
    def _children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {v: [] for v in self.variables}
        for link in self.links:
            out.setdefault(link.parent, []).append(link.child)
        return {v: tuple(cs) for v, cs in out.items()}

    def parent_links(self, v: int) -> tuple[CausalLink, ...]:
        return self._parents.get(v, ())

    def parents(self, v: int) -> tuple[int, ...]:
        return tuple(l.parent for l in self.parent_links(v))

    def children(self, v: int) -> tuple[int, ...]:
        return self._children.get(v, ())

    def r_total(self, v: int) -> float:
        """r_n: sum of r-weights over the incoming links of ``v``."""
        return float(sum(l.r for l in self.parent_links(v)))

    @cached_property
    def _weights(self) -> dict[tuple[int, int], float]:
        return {
            (l.child, l.parent): l.r / self.r_total(l.child) for l in self.links
        }

    def weight(self, child: int, parent: int) -> float:
        """Normalised intensity r_{n;i} / r_n."""
        return self._weights[(child, parent)]

    def link(self, child: int, parent: int) -> CausalLink:
        for l in self.parent_links(child):
            if l.parent == parent:
                return l
        raise KeyError((child, parent))

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        order = _kahn(self)
        if order is None:
            raise ValidationError(["cycle detected"])
        return tuple(order)

    def of_kind(self, kind: str) -> list[int]:
        return [v.id for v in self.variables.values() if v.kind == kind]

    def ancestors(self, v: int) -> set[int]:
        seen: set[int] = set()
        stack = list(self.parents(v))
        while stack:
            p = stack.pop()
            if p not in seen:
                seen.add(p)
                stack.extend(self.parents(p))
        return seen

    def descendants(self, v: int) -> set[int]:
        seen: set[int] = set()
        stack = list(self.children(v))
        while stack:
            c = stack.pop()
            if c not in seen:
                seen.add(c)
                stack.extend(self.children(c))
        return seen


def _kahn(g: Graph) -> list[int] | None:
    indeg = {v: 0 for v in g.variables}
    for l in g.links:
        if l.child in indeg and l.parent in indeg:
            indeg[l.child] += 1
    ready = sorted(v for v, d in indeg.items() if d == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for c in sorted(set(g.children(v))):
            if c not in indeg:
                continue
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort()
    return order if len(order) == len(g.variables) else None


@dataclass(frozen=True)
class Evidence:
    """Observed states of X-kind variables, keyed by variable id."""

    assignments: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "assignments", MappingProxyType(dict(sorted(self.assignments.items())))
        )

    def __reduce__(self):
        return Evidence, (dict(self.assignments),)

    @classmethod
    def from_graph(cls, g: Graph) -> "Evidence":
        return cls({v.id: v.observed for v in g.variables.values() if v.observed is not None})

    def __contains__(self, v):
        return v in self.assignments

    def __getitem__(self, v):
        return self.assignments[v]

    def __len__(self):
        return len(self.assignments)

    def __iter__(self):
        return iter(self.assignments)

    def items(self):
        return self.assignments.items()


def validate(g: Graph) -> list[str]:
    """Return one message per violated invariant; empty means valid."""
    report = []
    for v in g.variables.values():
        where = f"variable {v.id}"
        if v.kind not in KINDS:
            report.append(f"{where}: unknown kind {v.kind!r}")
            continue
        if v.kind == D:
            if v.states != 1:
                report.append(f"{where}: D-kind must have exactly 1 state")
        elif v.states < 2:
            report.append(f"{where}: needs at least 2 states")
        if v.kind == B:
            if v.prior is None:
                report.append(f"{where}: B-kind requires a prior")
            else:
                if len(v.prior) != v.states:
                    report.append(f"{where}: prior length {len(v.prior)} != {v.states} states")
                if any(not 0.0 <= p <= 1.0 for p in v.prior):
                    report.append(f"{where}: prior entries must lie in [0, 1]")
                if sum(v.prior) > 1.0 + COLUMN_TOL:
                    report.append(f"{where}: prior sums to {sum(v.prior):.6g} > 1")
        elif v.prior is not None:
            report.append(f"{where}: only B-kind variables carry a prior")
        if v.observed is not None:
            if v.kind != X:
                report.append(f"{where}: only X-kind variables can be observed")
            elif not 0 <= v.observed < v.states:
                report.append(f"{where}: observed state {v.observed} out of range")

    seen_pairs = set()
    for l in g.links:
        where = f"link {l.parent}->{l.child}"
        if (l.child, l.parent) in seen_pairs:
            report.append(f"{where}: duplicate link")
        seen_pairs.add((l.child, l.parent))
        child = g.variables.get(l.child)
        parent = g.variables.get(l.parent)
        if child is None or parent is None:
            report.append(f"{where}: endpoint does not exist")
            continue
        if child.kind != X:
            report.append(f"{where}: child must be X-kind, got {child.kind}")
        if not l.r > 0:
            report.append(f"{where}: r-weight must be positive, got {l.r}")
        if l.matrix.shape != (child.states, parent.states):
            report.append(
                f"{where}: matrix shape {l.matrix.shape} != ({child.states}, {parent.states})"
            )
            continue
        if np.any(l.matrix < 0.0) or np.any(l.matrix > 1.0) or not np.all(np.isfinite(l.matrix)):
            report.append(f"{where}: matrix entries must lie in [0, 1]")
        sums = l.matrix.sum(axis=0)
        for j, s in enumerate(sums):
            if abs(s - 1.0) > COLUMN_TOL:
                report.append(f"{where}: column {j} sums to {s:.9g}, expected 1")

    for v in g.variables.values():
        if v.kind == X and not g.parent_links(v.id):
            report.append(f"variable {v.id}: X-kind variable has no incoming link")
    if _kahn(g) is None:
        report.append("cycle detected")
    return report


def check(g: Graph) -> Graph:
    report = validate(g)
    if report:
        raise ValidationError(report)
    return g


def validate_evidence(g: Graph, evidence: Evidence) -> list[str]:
    report = []
    for v, s in evidence.items():
        var = g.variables.get(v)
        if var is None:
            report.append(f"evidence {v}: no such variable")
        elif var.kind != X:
            report.append(f"evidence {v}: only X-kind variables can be evidence")
        elif not 0 <= s < var.states:
            report.append(f"evidence {v}: state {s} out of range")
        elif var.observed is not None and var.observed != s:
            report.append(f"evidence {v}: state {s} contradicts observed {var.observed}")
    return report


# -- serialisation ----------------------------------------------------------

_VAR_KEYS = {"id", "kind", "states", "prior", "observed"}
_LINK_KEYS = {"child", "parent", "r", "matrix"}


def _require(obj, key, where, types):
    if key not in obj:
        raise GraphFormatError(f"missing field {key!r}", where)
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, types):
        raise GraphFormatError(f"field {key!r} has wrong type", f"{where}.{key}")
    return val


def _reject_unknown(obj, allowed, where):
    extra = set(obj) - allowed
    if extra:
        raise GraphFormatError(f"unknown keys {sorted(extra)}", where)


def load_graph(text: str) -> Graph:
    """Parse and validate a graph document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise GraphFormatError("top level must be an object", "document")
    _reject_unknown(doc, {"variables", "links"}, "document")
    raw_vars = _require(doc, "variables", "document", list)
    raw_links = _require(doc, "links", "document", list)

    variables = []
    for i, rv in enumerate(raw_vars):
        where = f"variables[{i}]"
        if not isinstance(rv, dict):
            raise GraphFormatError("expected an object", where)
        _reject_unknown(rv, _VAR_KEYS, where)
        vid = _require(rv, "id", where, int)
        kind = _require(rv, "kind", where, str)
        states = _require(rv, "states", where, int)
        prior = rv.get("prior")
        if prior is not None:
            if not isinstance(prior, list) or not all(
                isinstance(p, (int, float)) and not isinstance(p, bool) for p in prior
            ):
                raise GraphFormatError("prior must be a list of numbers", f"{where}.prior")
            prior = tuple(float(p) for p in prior)
        observed = rv.get("observed")
        if observed is not None and (isinstance(observed, bool) or not isinstance(observed, int)):
            raise GraphFormatError("observed must be an integer", f"{where}.observed")
        variables.append(Variable(vid, kind, states, prior, observed))
    ids = [v.id for v in variables]
    if len(set(ids)) != len(ids):
        raise ValidationError([f"duplicate variable id {i}" for i in sorted(set(ids)) if ids.count(i) > 1])

    links = []
    for i, rl in enumerate(raw_links):
        where = f"links[{i}]"
        if not isinstance(rl, dict):
            raise GraphFormatError("expected an object", where)
        _reject_unknown(rl, _LINK_KEYS, where)
        child = _require(rl, "child", where, int)
        parent = _require(rl, "parent", where, int)
        r = float(_require(rl, "r", where, (int, float)))
        rows = _require(rl, "matrix", where, list)
        try:
            matrix = np.array(rows, dtype=float)
        except (TypeError, ValueError):
            raise GraphFormatError("matrix must be a rectangular list of numbers", f"{where}.matrix") from None
        if matrix.ndim != 2:
            raise GraphFormatError("matrix must be two-dimensional", f"{where}.matrix")
        links.append(CausalLink(child, parent, r, matrix))
    return check(Graph(variables, links))


def dump_graph(g: Graph, evidence: Evidence | None = None) -> str:
    """Serialise ``g``; ``evidence`` (if given) is written as observed states."""
    obs = dict(evidence.items()) if evidence is not None else {}
    out_vars = []
    for v in g.variables.values():
        d = {"id": v.id, "kind": v.kind, "states": v.states}
        if v.prior is not None:
            d["prior"] = [float(p) for p in v.prior]
        observed = obs.get(v.id, v.observed)
        if observed is not None:
            d["observed"] = int(observed)
        out_vars.append(d)
    out_links = [
        {
            "child": l.child,
            "parent": l.parent,
            "r": float(l.r),
            # json writes repr(float): shortest round-tripping form, bit-exact
            "matrix": [[float(x) for x in row] for row in l.matrix],
        }
        for l in g.links
    ]
    return json.dumps({"variables": out_vars, "links": out_links}, indent=1) + "\n"


# -- structural queries -----------------------------------------------------


def restrict_to_hypothesis(g: Graph, evidence: Evidence, hypothesis: int) -> Graph:
    """Induced sub-DUCG for one root cause.

    Keeps the hypothesis, every evidence node, and every node on a directed
    path from the hypothesis or a D-node to an evidence node.  Links from
    dropped parents disappear, so r_n renormalises over the surviving ones.
    """
    if g.variables.get(hypothesis) is None or g.kind(hypothesis) != B:
        raise ValueError(f"hypothesis {hypothesis} is not a B-kind variable")
    ev = set(evidence)
    to_evidence = set(ev)
    for e in ev:
        to_evidence |= g.ancestors(e)
    sources = [hypothesis] + g.of_kind(D)
    from_sources: set[int] = set()
    for s in sources:
        if s in to_evidence:
            from_sources.add(s)
            from_sources |= g.descendants(s)
    keep = (to_evidence & from_sources) | {hypothesis}

    if not (g.descendants(hypothesis) & ev):
        raise DisconnectedHypothesis(
            f"hypothesis {hypothesis} has no directed path to any evidence node"
        )
    stranded = sorted(e for e in ev if e not in from_sources)
    if stranded:
        raise DisconnectedHypothesis(
            f"evidence {stranded} not reachable from hypothesis {hypothesis} or a D-node"
        )
    variables = [g.variables[v] for v in keep]
    links = [l for l in g.links if l.child in keep and l.parent in keep]
    return Graph(variables, links)


def layer_assignment(g: Graph, hypothesis: int | None = None) -> dict[int, int]:
    """Longest-path layer index; B and D sources sit in layer 0."""
    layer = {}
    for v in g.topological_order:
        ps = g.parents(v)
        layer[v] = 1 + max(layer[p] for p in ps) if ps else 0
    return layer


def evidence_layers(g: Graph, evidence: Evidence, hypothesis: int | None = None) -> dict[int, list[int]]:
    layer = layer_assignment(g, hypothesis)
    out: dict[int, list[int]] = {}
    for e in evidence:
        out.setdefault(layer[e], []).append(e)
    return {l: sorted(vs) for l, vs in sorted(out.items())}
