"""A-literal counts of the recursive vs single-shot expression on the
six-node recursion example, for a few random parameter sets."""
from ducg.exact import enumerate_likelihood
from ducg.generators import fig18_fixture
from ducg.recursive import compaction_report

for seed in range(5):
    m = fig18_fixture(seed=seed)
    cr = compaction_report(m.graph, m.evidence, m.hypothesis)
    ref = enumerate_likelihood(m.graph, m.evidence, m.hypothesis)
    print(f"seed {seed}: A-literals {cr.recursive_a_count} vs {cr.single_shot_a_count}, "
          f"terms {cr.recursive_terms} vs {cr.single_shot_terms}, "
          f"values {cr.recursive_value:.12f} {cr.single_shot_value:.12f} (enum {ref:.12f})")
