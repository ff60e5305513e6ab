"""Deterministic model families used by tests, scripts and benchmarks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import B, X, CausalLink, Evidence, Graph, Variable, check


@dataclass(frozen=True)
class Model:
    graph: Graph
    evidence: Evidence
    hypothesis: tuple[int, int] | None = None


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Philox stream keyed by ``seed`` plus optional sub-stream ids."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *stream])))


def random_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    # uniform then normalise each column
    m = rng.random((rows, cols))
    return m / m.sum(axis=0, keepdims=True)


def _build(variables, edges, rng, r=None):
    """edges: iterable of (child, parent); matrices drawn in sorted edge order."""
    states = {v.id: v.states for v in variables}
    links = []
    for child, parent in sorted(edges):
        w = 1.0 if r is None else r[(child, parent)]
        links.append(CausalLink(child, parent, w, random_matrix(rng, states[child], states[parent])))
    return check(Graph(variables, links))


def full_joined(n: int, k: int = 3, seed: int = 0) -> Model:
    """B0 feeding an n-by-n grid of X nodes, each layer fully linked to the
    previous one, plus one bottom node (id n*n+1) observed in state 1."""
    if n < 1 or k < 2:
        raise ValueError("need n >= 1 and k >= 2")
    variables = [Variable(0, B, k, tuple([1.0 / k] * k))]
    edges = []
    prev = [0]
    for layer in range(n):
        row = [1 + layer * n + i for i in range(n)]
        for v in row:
            variables.append(Variable(v, X, k))
            edges.extend((v, p) for p in prev)
        prev = row
    ev = n * n + 1
    variables.append(Variable(ev, X, k))
    edges.extend((ev, p) for p in prev)
    g = _build(variables, edges, rng_for(seed))
    return Model(g, Evidence({ev: 1}), (0, 1))


def three_wide(n_layers: int, seed: int = 0, k: int = 2) -> Model:
    """n_layers of three X nodes (ids 1..3n), adjacent layers fully linked,
    B0 above the first layer; the bottom three are observed in state 1."""
    if n_layers < 2:
        raise ValueError("three_wide needs at least 2 layers")
    variables = [Variable(0, B, k, tuple([1.0 / k] * k))]
    edges = []
    prev = [0]
    for layer in range(n_layers):
        row = [3 * layer + i for i in (1, 2, 3)]
        for v in row:
            variables.append(Variable(v, X, k))
            edges.extend((v, p) for p in prev)
        prev = row
    g = _build(variables, edges, rng_for(seed))
    return Model(g, Evidence({v: 1 for v in prev}), (0, 1))


COMPACT_MATRICES = {
    (2, 1): [[0.1890, 0.2490], [0.3440, 0.4200], [0.4670, 0.3310]],
    (3, 1): [[0.7850, 0.6390], [0.2150, 0.3610]],
    (4, 2): [[0.9080, 0.7730, 0.4440], [0.0920, 0.2270, 0.5560]],
    (4, 3): [[0.5970, 0.1770], [0.4030, 0.8230]],
    (5, 2): [[0.1810, 0.2030, 0.5180], [0.8190, 0.7970, 0.4820]],
    (5, 3): [[0.0910, 0.2110], [0.9090, 0.7890]],
    (6, 2): [[0.5640, 0.2390, 0.5600], [0.4360, 0.7610, 0.4400]],
    (6, 3): [[0.4760, 0.6420], [0.5240, 0.3580]],
    (7, 4): [[0.0100, 0.3030], [0.9900, 0.6970]],
    (7, 5): [[0.4660, 0.9520], [0.5340, 0.0480]],
    (7, 6): [[0.4990, 0.7070], [0.5010, 0.2930]],
    (8, 4): [[0.5170, 0.4750], [0.4830, 0.5250]],
    (8, 5): [[0.7490, 0.1190], [0.2510, 0.8810]],
    (8, 6): [[0.5020, 0.5100], [0.4980, 0.4900]],
    (9, 4): [[0.4300, 0.4480], [0.1430, 0.0040], [0.4270, 0.5480]],
    (9, 5): [[0.3580, 0.1530], [0.4880, 0.4430], [0.1540, 0.4040]],
    (9, 6): [[0.5260, 0.4240], [0.2360, 0.4750], [0.2380, 0.1010]],
}

COMPACT_EXACT = 7.939915e-2


def compact_fixture() -> Model:
    """Ten-node benchmark: B1 -> X2,X3 -> X4..X6 -> X7..X9, all r = 1.

    State counts follow the matrix shapes (X2 and X9 have three states).
    The published A(9,5) column 0 sums to 0.999 after rounding; the missing
    0.001 goes to row 0, which the evidence X9=1 never reads.
    Evidence X7=1, X8=1, X9=1; hypothesis B1 state 1.
    """
    variables = [Variable(1, B, 2, (0.5, 0.5))]
    variables += [Variable(v, X, 3 if v in (2, 9) else 2) for v in range(2, 10)]
    links = [CausalLink(c, p, 1.0, np.array(m)) for (c, p), m in COMPACT_MATRICES.items()]
    g = check(Graph(variables, links))
    return Model(g, Evidence({7: 1, 8: 1, 9: 1}), (1, 1))


def fig4_topology(seed: int = 0) -> Model:
    """Five layers: B20, B21 -> X1..X4 -> X5..X8 -> X9..X12 -> X13..X16 ->
    X17..X19, adjacent layers fully linked.  Evidence X17..X19 all in state 1.

    Root ids sit after the X ids because ids are shared across kinds.
    """
    variables = [Variable(20, B, 2, (0.5, 0.5)), Variable(21, B, 2, (0.5, 0.5))]
    variables += [Variable(v, X, 2) for v in range(1, 20)]
    rows = [[20, 21], [1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12], [13, 14, 15, 16], [17, 18, 19]]
    edges = [(c, p) for up, down in zip(rows, rows[1:]) for c in down for p in up]
    g = _build(variables, edges, rng_for(seed))
    return Model(g, Evidence({17: 1, 18: 1, 19: 1}), (20, 1))


FIG18_EDGES = [(2, 1), (3, 1), (4, 2), (4, 3), (5, 2), (5, 3), (6, 4), (6, 5)]


def fig18_fixture(matrices: dict | None = None, seed: int = 0, k: int = 2) -> Model:
    """Six-node recursion example: B1 -> X2,X3; X4 <- X2,X3; X5 <- X2,X3;
    X6 <- X4,X5.  Evidence X2=1, X4=1, X6=1.  All r = 1.

    ``matrices`` maps (child, parent) to a column-stochastic array; missing
    entries are drawn from ``seed``.
    """
    matrices = matrices or {}
    rng = rng_for(seed)
    variables = [Variable(1, B, k, tuple([1.0 / k] * k))] + [Variable(v, X, k) for v in range(2, 7)]
    links = []
    for c, p in sorted(FIG18_EDGES):
        m = random_matrix(rng, k, k)
        if (c, p) in matrices:
            m = np.asarray(matrices[(c, p)], dtype=float)
        links.append(CausalLink(c, p, 1.0, m))
    g = check(Graph(variables, links))
    return Model(g, Evidence({2: 1, 4: 1, 6: 1}), (1, 1))


def random_ducg(seed: int, n_x: int = 6, n_b: int = 1, n_d: int = 0, max_states: int = 3,
                max_parents: int = 3, n_evidence: int = 2) -> Model:
    """Random layered DAG: B/D roots, then X nodes each linked to 1..max_parents
    earlier nodes with random r-weights.  Evidence is drawn from the last
    X nodes; hypothesis is (first B, state 0)."""
    rng = rng_for(seed, 1)
    variables = []
    ids = []
    for i in range(n_b):
        k = int(rng.integers(2, max_states + 1))
        prior = rng.random(k)
        variables.append(Variable(i, B, k, tuple(float(p) for p in prior / prior.sum())))
        ids.append(i)
    for i in range(n_b, n_b + n_d):
        variables.append(Variable(i, "D", 1))
        ids.append(i)
    edges = []
    r = {}
    for i in range(n_b + n_d, n_b + n_d + n_x):
        k = int(rng.integers(2, max_states + 1))
        variables.append(Variable(i, X, k))
        m = int(rng.integers(1, min(max_parents, len(ids)) + 1))
        parents = sorted(int(p) for p in rng.choice(ids, size=m, replace=False))
        if i == n_b + n_d and 0 not in parents and n_b:
            parents[0] = 0  # keep the first X attached to the hypothesis
        for p in sorted(set(parents)):
            edges.append((i, p))
            r[(i, p)] = float(rng.uniform(0.5, 2.0))
        ids.append(i)
    g = _build(variables, edges, rng, r)
    reach = g.descendants(0) if n_b else set()
    x_ids = [v.id for v in variables if v.kind == X and (not n_b or v.id in reach)]
    chosen = x_ids[-n_evidence:] if n_evidence else []
    ev = Evidence({v: int(rng.integers(0, g.states(v))) for v in chosen})
    return Model(g, ev, (0, 0) if n_b else None)
