import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ducg.errors import DisconnectedHypothesis, GraphFormatError, ValidationError
from ducg.generators import fig4_topology, full_joined, random_ducg, three_wide
from ducg.graph import (
    CausalLink, Evidence, Graph, Variable, dump_graph, evidence_layers, layer_assignment,
    load_graph, restrict_to_hypothesis, validate,
)


def chain_doc(col=(0.3, 0.7), extra=None):
    doc = {
        "variables": [
            {"id": 0, "kind": "B", "states": 2, "prior": [0.5, 0.5]},
            {"id": 1, "kind": "X", "states": 2},
        ],
        "links": [{"child": 1, "parent": 0, "r": 1.0,
                   "matrix": [[col[0], col[0]], [col[1], col[1]]]}],
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc)


def test_load_minimal_chain():
    g = load_graph(chain_doc())
    assert set(g.variables) == {0, 1}
    assert g.parents(1) == (0,)


def test_load_compact_document(compact):
    g = load_graph(dump_graph(compact.graph, compact.evidence))
    # the matrix listing defines B1 plus X2..X9 and seventeen links
    assert len(g.variables) == 9
    assert len(g.of_kind("X")) == 8
    assert len(g.links) == 17
    assert Evidence.from_graph(g).assignments == {7: 1, 8: 1, 9: 1}


def test_bad_column_sum_names_link():
    with pytest.raises(ValidationError) as exc:
        load_graph(chain_doc(col=(0.3, 0.6)))
    assert any("link 0->1" in r and "column 0" in r for r in exc.value.report)


def test_syntax_error_has_line():
    with pytest.raises(GraphFormatError) as exc:
        load_graph('{"variables": [\n  {"id": 0,,}]}')
    assert "line 2" in str(exc.value)


def test_unknown_key_rejected():
    with pytest.raises(GraphFormatError, match="unknown keys"):
        load_graph(chain_doc(extra={"colour": "red"}))


def test_wrong_field_type_has_path():
    doc = json.loads(chain_doc())
    doc["links"][0]["r"] = "one"
    with pytest.raises(GraphFormatError) as exc:
        load_graph(json.dumps(doc))
    assert exc.value.location == "links[0].r"


def test_compact_column_passes():
    m = np.array([[0.1890, 0.2490], [0.3440, 0.4200], [0.4670, 0.3310]])
    g = Graph([Variable(1, "B", 2, (0.5, 0.5)), Variable(2, "X", 3)], [CausalLink(2, 1, 1.0, m)])
    assert validate(g) == []


def test_identity_passes():
    g = Graph([Variable(0, "B", 2, (0.5, 0.5)), Variable(1, "X", 2)],
              [CausalLink(1, 0, 1.0, np.eye(2))])
    assert validate(g) == []


def test_cycle_detected():
    vs = [Variable(0, "B", 2, (0.5, 0.5)), Variable(1, "X", 2), Variable(2, "X", 2)]
    ls = [CausalLink(1, 0, 1.0, np.eye(2)), CausalLink(2, 1, 1.0, np.eye(2)),
          CausalLink(1, 2, 1.0, np.eye(2))]
    assert "cycle detected" in validate(Graph(vs, ls))


def test_validate_reports_every_violation():
    vs = [Variable(0, "B", 2, None), Variable(1, "X", 2), Variable(2, "X", 2)]
    ls = [CausalLink(1, 0, -1.0, np.eye(2))]
    report = validate(Graph(vs, ls))
    assert len(report) == 3  # missing prior, bad r, orphan X2


def test_d_kind_must_have_one_state():
    vs = [Variable(0, "D", 2), Variable(1, "X", 2)]
    ls = [CausalLink(1, 0, 1.0, np.full((2, 2), 0.5))]
    assert any("exactly 1 state" in r for r in validate(Graph(vs, ls)))


def test_restrict_compact_is_whole_graph(compact):
    sub = restrict_to_hypothesis(compact.graph, compact.evidence, 1)
    assert sub == compact.graph


def test_restrict_chain_drops_non_ancestor():
    eye = np.eye(2)
    g = Graph([Variable(0, "B", 2, (0.5, 0.5)), Variable(1, "X", 2), Variable(2, "X", 2)],
              [CausalLink(1, 0, 1.0, eye), CausalLink(2, 1, 1.0, eye)])
    sub = restrict_to_hypothesis(g, Evidence({1: 0}), 0)
    assert set(sub.variables) == {0, 1}


def test_restrict_disconnected():
    eye = np.eye(2)
    g = Graph([Variable(0, "B", 2, (0.5, 0.5)), Variable(1, "B", 2, (0.5, 0.5)),
               Variable(2, "X", 2), Variable(3, "X", 2)],
              [CausalLink(2, 0, 1.0, eye), CausalLink(3, 1, 1.0, eye)])
    with pytest.raises(DisconnectedHypothesis):
        restrict_to_hypothesis(g, Evidence({3: 0}), 0)
    # evidence X2 reachable but X3 is not
    with pytest.raises(DisconnectedHypothesis):
        restrict_to_hypothesis(g, Evidence({2: 0, 3: 0}), 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_restrict_idempotent(seed):
    m = random_ducg(seed, n_x=7, n_b=2, n_d=1, n_evidence=2)
    once = restrict_to_hypothesis(m.graph, m.evidence, 0)
    assert restrict_to_hypothesis(once, m.evidence, 0) == once


def test_fig4_layers():
    m = fig4_topology()
    layer = layer_assignment(m.graph, 20)
    assert all(layer[v] == 5 for v in (17, 18, 19))
    assert all(layer[v] == 1 for v in (1, 2, 3, 4))
    assert evidence_layers(m.graph, m.evidence) == {5: [17, 18, 19]}


def test_chain_layers():
    eye = np.eye(2)
    g = Graph([Variable(0, "B", 2, (0.5, 0.5)), Variable(1, "X", 2), Variable(2, "X", 2)],
              [CausalLink(1, 0, 1.0, eye), CausalLink(2, 1, 1.0, eye)])
    assert layer_assignment(g, 0) == {0: 0, 1: 1, 2: 2}


def test_diamond_uses_longest_path():
    eye = np.eye(2)
    g = Graph([Variable(0, "B", 2, (0.5, 0.5))] + [Variable(i, "X", 2) for i in (1, 2, 3)],
              [CausalLink(1, 0, 1.0, eye), CausalLink(2, 0, 1.0, eye),
               CausalLink(3, 2, 1.0, eye), CausalLink(1, 3, 1.0, eye)])
    assert layer_assignment(g, 0)[1] == 3


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_layers_are_topological_grading(seed):
    g = random_ducg(seed, n_x=8, n_b=2, n_d=1).graph
    layer = layer_assignment(g)
    for l in g.links:
        assert layer[l.child] >= layer[l.parent] + 1
    for v in g.variables:
        ps = g.parents(v)
        if ps:
            assert layer[v] == 1 + max(layer[p] for p in ps)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["random", "full", "wide"]))
def test_roundtrip_bit_exact(seed, family):
    if family == "random":
        m = random_ducg(seed, n_x=6, n_b=2, n_d=1)
    elif family == "full":
        m = full_joined(2, 3, seed)
    else:
        m = three_wide(2, seed)
    text = dump_graph(m.graph)
    back = load_graph(text)
    assert back == m.graph
    for a, b in zip(back.links, m.graph.links):
        assert a.matrix.tobytes() == b.matrix.tobytes()
    assert dump_graph(back) == text


def test_generator_outputs_validate_10k():
    # the property covers any seed; 10,000 draws across families
    for seed in range(2500):
        for m in (random_ducg(seed, n_x=5, n_b=2, n_d=1), random_ducg(seed, n_x=3),
                  full_joined(1 + seed % 2, 2 + seed % 2, seed), three_wide(2, seed)):
            assert validate(m.graph) == []
