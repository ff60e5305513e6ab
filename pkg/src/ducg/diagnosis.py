"""Run a backend over the hypothesis set and rank root causes."""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from . import exact, recursive, sampling
from .errors import DisconnectedHypothesis
from .exact import HypothesisResult
from .graph import B, Evidence, Graph, restrict_to_hypothesis

BACKENDS = ("exact", "expansion", "recursive", "sampling")


def hypothesis_set(g: Graph, evidence: Evidence) -> list[tuple[int, int]]:
    """Every state of every B variable that still reaches the evidence."""
    out = []
    for b in g.of_kind(B):
        try:
            restrict_to_hypothesis(g, evidence, b)
        except DisconnectedHypothesis:
            continue
        out.extend((b, j) for j in range(g.states(b)))
    return out


@dataclass
class RunReport:
    backend: str
    results: list[HypothesisResult]
    wall_times: dict[tuple[int, int], float] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def ranked(self) -> list[HypothesisResult]:
        return sorted(self.results, key=lambda r: (-(r.posterior or 0.0), r.hypothesis))

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.results)

    def to_json(self) -> str:
        doc = {
            "backend": self.backend,
            "config": self.config,
            "results": [
                {
                    **{k: v for k, v in asdict(r).items() if k != "hypothesis"},
                    "variable": r.hypothesis[0],
                    "state": r.hypothesis[1],
                    "wall_time": self.wall_times.get(r.hypothesis),
                }
                for r in sorted(self.results, key=lambda r: r.hypothesis)
            ],
        }
        return json.dumps(doc, indent=1) + "\n"


def likelihood(g: Graph, evidence: Evidence, hypothesis, backend: str = "exact",
               cfg: sampling.SamplerConfig | None = None, enum_cap: float = exact.ENUMERATION_CAP,
               term_cap: int = recursive.TERM_CAP):
    """One hypothesis through one backend: (HypothesisResult, trace or None)."""
    hypothesis = tuple(hypothesis)
    if backend == "exact":
        v = exact.enumerate_likelihood(g, evidence, hypothesis, cap=enum_cap)
    elif backend == "expansion":
        v = exact.expansion_likelihood(g, evidence, hypothesis, max_terms=term_cap)
    elif backend == "recursive":
        v = recursive.recursive_general(g, evidence, hypothesis, term_cap=term_cap)
    elif backend == "sampling":
        return sampling.run(g, evidence, hypothesis, cfg or sampling.SamplerConfig())
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return HypothesisResult.partial(g, hypothesis, v), None


def _job(args):
    g, evidence, hyp, backend, cfg, enum_cap, term_cap = args
    t0 = time.perf_counter()
    res, trace = likelihood(g, evidence, hyp, backend, cfg, enum_cap, term_cap)
    return hyp, res, trace, time.perf_counter() - t0


def diagnose(g: Graph, evidence: Evidence, backend: str = "exact", hypotheses=None,
             cfg: sampling.SamplerConfig | None = None, jobs: int = 1,
             enum_cap: float = exact.ENUMERATION_CAP, term_cap: int = recursive.TERM_CAP):
    """Likelihood and posterior for every hypothesis; returns (report, traces)."""
    hyps = sorted(tuple(h) for h in (hypotheses or hypothesis_set(g, evidence)))
    if not hyps:
        raise DisconnectedHypothesis("no B variable reaches the evidence")
    tasks = [(g, evidence, h, backend, cfg, enum_cap, term_cap) for h in hyps]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_job, tasks))
    else:
        done = [_job(t) for t in tasks]
    done.sort(key=lambda d: d[0])
    results = exact.posterior([d[1] for d in done])
    traces = {d[0]: d[2] for d in done if d[2] is not None}
    config = asdict(cfg) if (cfg is not None and backend == "sampling") else {}
    report = RunReport(backend, results, {d[0]: d[3] for d in done}, config)
    return report, traces
