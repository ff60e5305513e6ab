import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ducg.errors import UnboundLiteral
from ducg.exact import enumerate_likelihood, marginal_propagation
from ducg.generators import compact_fixture, fig4_topology, random_ducg, rng_for, three_wide
from ducg.graph import CausalLink, Evidence, Graph, Variable, restrict_to_hypothesis
from ducg.sampling import (
    CAP_REACHED, CONTINUE, CONVERGED, SampleAssignment, SamplerConfig, SamplerTrace,
    build_cutoff_expression, c_from_delta, choose_estimator, cycle_likelihood_cutoff,
    cycle_likelihood_simple, halting_check, init_assignment, resample_cycle, run,
    sample_frequencies,
)


def chain(col=(0.3, 0.7), observed_tail=False):
    m = np.array([[col[0], col[0]], [col[1], col[1]]])
    vs = [Variable(0, "B", 2, (0.5, 0.5)), Variable(1, "X", 2), Variable(2, "X", 2)]
    ls = [CausalLink(1, 0, 1.0, m), CausalLink(2, 1, 1.0, np.array([[0.9, 0.2], [0.1, 0.8]]))]
    return Graph(vs, ls)


def fan():
    # V -> X2, X3 -> E (X4)
    rng = rng_for(3)
    from ducg.generators import random_matrix
    vs = [Variable(1, "B", 2, (0.5, 0.5)), Variable(2, "X", 3), Variable(3, "X", 2), Variable(4, "X", 2)]
    ls = [CausalLink(2, 1, 1.0, random_matrix(rng, 3, 2)), CausalLink(3, 1, 1.0, random_matrix(rng, 2, 2)),
          CausalLink(4, 2, 1.0, random_matrix(rng, 2, 3)), CausalLink(4, 3, 2.0, random_matrix(rng, 2, 2))]
    return Graph(vs, ls), Evidence({4: 1})


# -- c from delta ---------------------------------------------------------------


def test_c_is_two_sided_quantile():
    for d in (0.01, 0.05, 0.2):
        c = c_from_delta(d)
        assert 2 * (1 - NormalDist().cdf(c)) == pytest.approx(d, rel=1e-9)


@pytest.mark.parametrize("delta,c", [(0.317, 1.0), (0.046, 2.0)])
def test_c_table_anchors(delta, c):
    assert c_from_delta(delta) == pytest.approx(c, abs=0.01)


def test_c_rejects_bad_delta():
    with pytest.raises(ValueError):
        c_from_delta(0.0)


def test_config_defaults_and_validation():
    cfg = SamplerConfig()
    assert (cfg.burn_in, cfg.window, cfg.epsilon, cfg.delta, cfg.ig_layer, cfg.ig_x) == (300, 200, 1e-3, 0.05, 2, 6)
    assert cfg.c_value == pytest.approx(1.959964, abs=1e-6)
    assert SamplerConfig(c=2.0).c_value == 2.0
    for bad in (dict(burn_in=0), dict(epsilon=1.5), dict(ig_layer=0), dict(cycle_max=400),
                dict(estimator="magic"), dict(c=-1.0)):
        with pytest.raises(ValueError):
            SamplerConfig(**bad)


# -- per-cycle machinery -------------------------------------------------------


def test_init_empty_when_nothing_unknown():
    g = chain()
    a = init_assignment(g, Evidence({1: 0, 2: 1}), (0, 0), rng_for(0))
    assert a.states == {}


def test_init_seeded_reproducible():
    g = chain()
    a = init_assignment(g, Evidence({2: 1}), (0, 0), rng_for(4))
    b = init_assignment(g, Evidence({2: 1}), (0, 0), rng_for(4))
    assert a == b and set(a.states) == {1}


def test_init_covers_fig4_unknowns():
    m = fig4_topology()
    g = restrict_to_hypothesis(m.graph, m.evidence, 20)
    a = init_assignment(g, m.evidence, m.hypothesis, rng_for(0))
    assert sorted(a.states) == list(range(1, 17))


def test_resample_deterministic_column():
    g = chain(col=(1.0, 0.0))
    rng = rng_for(0)
    a = SampleAssignment({1: 1})
    for _ in range(50):
        a = resample_cycle(g, Evidence({2: 0}), (0, 1), a, rng)
        assert a.states == {1: 0}


def test_resample_chain_frequency():
    g = chain()
    rng = rng_for(1)
    a = init_assignment(g, Evidence({2: 1}), (0, 1), rng)
    n, hits = 20000, 0
    for _ in range(n):
        a = resample_cycle(g, Evidence({2: 1}), (0, 1), a, rng)
        hits += a.states[1]
    p = 0.7
    assert abs(hits / n - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_fan_frequencies_match_marginal():
    g, ev = fan()
    freq = sample_frequencies(g, ev, (1, 0), 20000, seed=2)
    mp = marginal_propagation(g, (1, 0))
    for v in (2, 3):
        for s, p in enumerate(mp[v]):
            assert abs(freq[v][s] - p) < 4 * math.sqrt(p * (1 - p) / 20000)


def test_simple_single_evidence_lookup():
    g = chain()
    a = SampleAssignment({1: 1})
    assert cycle_likelihood_simple(g, Evidence({2: 1}), (0, 0), a) == pytest.approx(0.8)


def test_simple_constant_with_observed_parent():
    g = chain()
    ev = Evidence({1: 0, 2: 1})
    vals = {cycle_likelihood_simple(g, ev, (0, 0), SampleAssignment({})) for _ in range(3)}
    assert vals == {0.3 * 0.1}


def test_estimator_choice(compact):
    g, ev = fan()
    assert choose_estimator(g, ev, SamplerConfig()) == "simple"
    assert choose_estimator(compact.graph, compact.evidence, SamplerConfig()) == "cutoff"
    assert choose_estimator(compact.graph, compact.evidence, SamplerConfig(estimator="simple")) == "simple"


# -- cut-off expression -------------------------------------------------------


def test_cutoff_compact_structure(compact):
    cx = build_cutoff_expression(compact.graph, compact.evidence, (1, 1), 2, 6)
    assert {4, 5, 6} <= cx.leaves
    assert cx.leaves == {2, 3, 4, 5, 6}
    assert cx.constant > 0  # fully grounded B-terms
    assert cx.dropped_terms == 0


def test_cutoff_rejects_zero_layers(compact):
    with pytest.raises(ValueError):
        build_cutoff_expression(compact.graph, compact.evidence, (1, 1), 0, 6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cutoff_single_evidence_is_simple(seed):
    m = random_ducg(seed, n_x=5, n_d=seed % 2, n_evidence=1)
    g = restrict_to_hypothesis(m.graph, m.evidence, 0)
    cx = build_cutoff_expression(g, m.evidence, m.hypothesis, 1, 6)
    rng = rng_for(seed)
    a = init_assignment(g, m.evidence, m.hypothesis, rng)
    for _ in range(10):
        a = resample_cycle(g, m.evidence, m.hypothesis, a, rng)
        assert cycle_likelihood_cutoff(cx, a) == pytest.approx(
            cycle_likelihood_simple(g, m.evidence, m.hypothesis, a), abs=1e-12)


def test_cutoff_all_indicators_zero(compact):
    cx = build_cutoff_expression(compact.graph, compact.evidence, (1, 1), 2, 6)
    zeroed = type(cx)(cx.expr, cx.constant, {v: np.zeros_like(w) for v, w in cx.weights.items()})
    a = SampleAssignment({v: 0 for v in range(2, 7)})
    assert cycle_likelihood_cutoff(zeroed, a) == cx.constant


def test_cutoff_missing_leaf(compact):
    cx = build_cutoff_expression(compact.graph, compact.evidence, (1, 1), 2, 6)
    with pytest.raises(UnboundLiteral):
        cycle_likelihood_cutoff(cx, SampleAssignment({2: 0}))


def test_deterministic_graph_constant_p():
    eye = np.eye(2)
    vs = [Variable(0, "B", 2, (0.5, 0.5))] + [Variable(i, "X", 2) for i in (1, 2, 3)]
    g = Graph(vs, [CausalLink(1, 0, 1.0, eye), CausalLink(2, 1, 1.0, eye), CausalLink(3, 1, 1.0, eye)])
    _, tr = run(g, Evidence({2: 1, 3: 1}), (0, 1), SamplerConfig(seed=3))
    assert len(set(tr.p)) == 1 and tr.p[0] == 1.0


def test_cutoff_monotone_in_thresholds(compact):
    g, ev = compact.graph, compact.evidence
    exact = enumerate_likelihood(g, ev, (1, 1))
    mp = marginal_propagation(g, (1, 1))

    def err(l, x):
        return abs(exact - build_cutoff_expression(g, ev, (1, 1), l, x).expected(mp))

    for l in (1, 2, 3):
        errs = [err(l, x) for x in (1, 2, 3, 6)]
        assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
    for x in (1, 2, 3, 6):
        errs = [err(l, x) for l in (1, 2, 3)]
        assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
    assert err(2, 6) < 1e-12


# -- halting ---------------------------------------------------------------------


def _trace(values):
    tr = SamplerTrace()
    mean = 0.0
    for t, p in enumerate(values, 1):
        mean += (p - mean) / t
        tr.p.append(p)
        tr.running_mean.append(mean)
    return tr


def test_halting_constant_sequence():
    cfg = SamplerConfig(burn_in=10, window=5, cycle_max=100)
    assert halting_check(_trace([0.2] * 14), cfg) == CONTINUE
    assert halting_check(_trace([0.2] * 15), cfg) == CONVERGED


def test_halting_zero_sequence_converges():
    cfg = SamplerConfig(burn_in=10, window=5, cycle_max=100)
    assert halting_check(_trace([0.0] * 15), cfg) == CONVERGED


def test_halting_noisy_continues_then_caps():
    cfg = SamplerConfig(burn_in=10, window=5, cycle_max=40)
    vals = [0.1, 0.9] * 20
    assert halting_check(_trace(vals[:30]), cfg) == CONTINUE
    assert halting_check(_trace(vals), cfg) == CAP_REACHED


def test_run_cap_flag():
    g = chain()
    cfg = SamplerConfig(burn_in=5, window=5, epsilon=1e-9, cycle_max=50)
    res, tr = run(g, Evidence({2: 1}), (0, 1), cfg)
    assert not res.converged and res.n_cycles == 50 and tr.verdict[-1] == CAP_REACHED


def test_zero_unknown_graph_converges_at_b_plus_omega():
    g = chain()
    ev = Evidence({1: 1, 2: 1})
    res, tr = run(g, ev, (0, 1), SamplerConfig(burn_in=30, window=20))
    assert res.n_cycles == 50 and res.converged
    assert res.likelihood == enumerate_likelihood(g, ev, (0, 1))


# -- whole runs ------------------------------------------------------------------


def test_run_compact_within_one_percent(compact):
    res, _ = run(compact.graph, compact.evidence, (1, 1), SamplerConfig(seed=7))
    assert res.converged
    assert abs(res.likelihood / 7.939915e-2 - 1) < 0.01
    assert res.joint == pytest.approx(res.likelihood * 0.5)


def test_run_bit_for_bit_deterministic(compact):
    cfg = SamplerConfig(seed=11)
    a = run(compact.graph, compact.evidence, (1, 1), cfg)[1]
    b = run(compact.graph, compact.evidence, (1, 1), cfg)[1]
    assert a.to_csv() == b.to_csv()
    assert a.p == b.p


def test_trace_invariants(compact):
    _, tr = run(compact.graph, compact.evidence, (1, 1), SamplerConfig(seed=2))
    for t in range(1, tr.n + 1):
        assert tr.running_mean[t - 1] == pytest.approx(math.fsum(tr.p[:t]) / t, rel=1e-12)
        assert 0.0 <= tr.p[t - 1] <= 1.0
    assert 0.0 <= tr.running_mean[-1] <= max(tr.p)


def test_trace_csv_format(compact):
    _, tr = run(compact.graph, compact.evidence, (1, 1), SamplerConfig(seed=2))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,P_t,running_mean,window_mean,window_std,verdict"
    assert len(lines) == tr.n + 1
    last = lines[-1].split(",")
    assert last[0] == str(tr.n) and last[-1] == CONVERGED
    assert last[1] == f"{tr.p[-1]:.9g}"


def test_frequency_property_compact(compact):
    n = 20000
    freq = sample_frequencies(compact.graph, compact.evidence, (1, 1), n, seed=5)
    mp = marginal_propagation(compact.graph, (1, 1))
    for v, f in freq.items():
        for s, p in enumerate(mp[v]):
            assert abs(f[s] - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_unbiased_over_seeds(compact):
    exact = enumerate_likelihood(compact.graph, compact.evidence, (1, 1))
    ests = [run(compact.graph, compact.evidence, (1, 1), SamplerConfig(seed=s))[0].likelihood for s in range(50)]
    assert abs(np.mean(ests) / exact - 1) < 0.005


def test_unbiased_simple_estimator():
    m = random_ducg(21, n_x=7, n_evidence=1)
    exact = enumerate_likelihood(m.graph, m.evidence, m.hypothesis)
    ests = [run(m.graph, m.evidence, m.hypothesis, SamplerConfig(seed=s))[0].likelihood for s in range(50)]
    assert abs(np.mean(ests) / exact - 1) < 0.005


def test_three_wide_cutoff_close():
    m = three_wide(3, seed=4)
    exact = enumerate_likelihood(m.graph, m.evidence, m.hypothesis)
    res, _ = run(m.graph, m.evidence, m.hypothesis, SamplerConfig(seed=1, ig_layer=3))
    assert abs(res.likelihood / exact - 1) < 0.02
