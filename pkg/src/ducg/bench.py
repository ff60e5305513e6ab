"""Timing sweep over the full-joined family."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from . import exact, recursive, sampling
from .errors import EnumerationInfeasible, RecursionInfeasible
from .generators import full_joined

FIELDS = ["n", "backend", "status", "seconds", "likelihood", "reference", "error_ratio",
          "cycles", "seconds_per_cycle"]


@dataclass
class BenchRow:
    n: int
    backend: str
    status: str
    seconds: float | None = None
    likelihood: float | None = None
    reference: float | None = None
    error_ratio: float | None = None
    cycles: int | None = None
    seconds_per_cycle: float | None = None


def bench(n_values, k: int = 3, seed: int = 0, backends=("exact", "recursive", "sampling"),
          enum_cap: float = exact.ENUMERATION_CAP, cfg: sampling.SamplerConfig | None = None,
          term_cap: int = recursive.TERM_CAP) -> list[BenchRow]:
    cfg = cfg or sampling.SamplerConfig(seed=seed)
    rows = []
    for n in n_values:
        m = full_joined(n, k, seed)
        ev_var = next(iter(m.evidence))
        ref = float(exact.marginal_propagation(m.graph, m.hypothesis)[ev_var][m.evidence[ev_var]])
        for backend in backends:
            t0 = time.perf_counter()
            cycles = None
            try:
                if backend == "exact":
                    v = exact.enumerate_likelihood(m.graph, m.evidence, m.hypothesis, cap=enum_cap)
                elif backend == "recursive":
                    v = recursive.recursive_general(m.graph, m.evidence, m.hypothesis, term_cap=term_cap)
                elif backend == "sampling":
                    res, _ = sampling.run(m.graph, m.evidence, m.hypothesis, cfg)
                    v, cycles = res.likelihood, res.n_cycles
                else:
                    raise ValueError(f"unknown backend {backend!r}")
            except (EnumerationInfeasible, RecursionInfeasible):
                rows.append(BenchRow(n, backend, "infeasible", reference=ref))
                continue
            dt = time.perf_counter() - t0
            rows.append(BenchRow(
                n, backend, "ok", dt, v, ref, (v - ref) / ref, cycles,
                dt / cycles if cycles else None,
            ))
    return rows


def to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        w.writerow(["" if getattr(r, f) is None else
                    (f"{getattr(r, f):.9g}" if isinstance(getattr(r, f), float) else getattr(r, f))
                    for f in FIELDS])
    return buf.getvalue()


def loglog_slopes(ns, ts) -> list[float]:
    """Slope of log(time) against log(n) between consecutive points."""
    return [
        (math.log(t2) - math.log(t1)) / (math.log(n2) - math.log(n1))
        for (n1, t1), (n2, t2) in zip(zip(ns, ts), zip(ns[1:], ts[1:]))
    ]


@dataclass
class TrendVerdict:
    exact_slopes: list[float]
    exact_superpolynomial: bool
    sampling_exponent: float
    sampling_polynomial: bool
    crossover_n: int | None


def trend(rows: list[BenchRow], max_exponent: float = 4.5) -> TrendVerdict:
    """Qualitative scaling checks.

    Exact time counts as super-polynomial when its log-log slope keeps
    rising or when it runs out of budget (becomes infeasible) inside the
    sweep.  Sampling per-cycle time is polynomial when a log-log fit has
    exponent <= ``max_exponent``.  The crossover is the first n at which
    sampling beats exact (or exact is infeasible) after exact has been
    faster.
    """
    ex = [r for r in rows if r.backend == "exact"]
    ok = [r for r in ex if r.status == "ok"]
    slopes = loglog_slopes([r.n for r in ok], [r.seconds for r in ok])
    rising = len(slopes) >= 2 and all(b > a for a, b in zip(slopes, slopes[1:]))
    blows_up = any(r.status == "infeasible" for r in ex)
    sp = [r for r in rows if r.backend == "sampling" and r.status == "ok"]
    exponent = float(np.polyfit(np.log([r.n for r in sp]), np.log([r.seconds_per_cycle for r in sp]), 1)[0])
    samp = {r.n: r.seconds for r in sp}
    crossover = None
    exact_won = False
    for r in sorted(ex, key=lambda r: r.n):
        if r.n not in samp:
            continue
        if r.status == "ok" and r.seconds < samp[r.n]:
            exact_won = True
        elif exact_won:
            crossover = r.n
            break
    superpoly = rising or (blows_up and (len(slopes) < 2 or slopes[-1] > slopes[0]))
    return TrendVerdict(slopes, superpoly, exponent, exponent <= max_exponent, crossover)
