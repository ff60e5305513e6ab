"""Command-line interface: ``ducg infer | generate | bench``.

Exit codes: 1 usage, 2 load/validation, 3 infeasible backend, 4 not converged.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import bench as bench_mod
from . import diagnosis, generators
from .errors import (
    AssumptionsNotSatisfied,
    DisconnectedHypothesis,
    EnumerationInfeasible,
    EvidenceImpossible,
    GraphFormatError,
    RecursionInfeasible,
    ValidationError,
)
from .graph import Evidence, Graph, dump_graph, load_graph, validate_evidence
from .sampling import SamplerConfig

EXIT_USAGE, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED = 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair(text):
    try:
        a, b = text.split("=")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected VAR=STATE, got {text!r}") from None


def _build_parser():
    p = _Parser(prog="ducg", description="DUCG inference engine")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    inf = sub.add_parser("infer", help="rank root causes for the evidence")
    inf.add_argument("--graph", required=True)
    inf.add_argument("--backend", choices=diagnosis.BACKENDS, default="exact")
    inf.add_argument("--evidence", type=_pair, action="append", default=[], metavar="VAR=STATE")
    inf.add_argument("--evidence-file")
    inf.add_argument("--hypothesis", type=_pair, action="append", default=[], metavar="VAR=STATE")
    d = SamplerConfig()
    inf.add_argument("--burn-in", type=int, default=d.burn_in)
    inf.add_argument("--window", type=int, default=d.window)
    inf.add_argument("--epsilon", type=float, default=d.epsilon)
    inf.add_argument("--delta", type=float, default=d.delta)
    inf.add_argument("--c", type=float, default=None)
    inf.add_argument("--ig-layer", type=int, default=d.ig_layer)
    inf.add_argument("--ig-x", type=int, default=d.ig_x)
    inf.add_argument("--cycle-max", type=int, default=d.cycle_max)
    inf.add_argument("--seed", type=int, default=d.seed)
    inf.add_argument("--estimator", choices=("auto", "simple", "cutoff"), default="auto")
    inf.add_argument("--enum-cap", type=float, default=1e8)
    inf.add_argument("--term-cap", type=int, default=10**6)
    inf.add_argument("--out", help="write the JSON report here")
    inf.add_argument("--trace", help="write the sampling trace CSV here")
    inf.add_argument("--jobs", type=int, default=1)

    gen = sub.add_parser("generate", help="write a model family member as a graph file")
    gen.add_argument("--family", required=True,
                     choices=("full-joined", "three-wide", "compact", "fig18", "random"))
    gen.add_argument("--n", type=int, default=2)
    gen.add_argument("--k", type=int, default=3)
    gen.add_argument("--layers", type=int, default=3)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")

    b = sub.add_parser("bench", help="timing sweep over full-joined models")
    b.add_argument("--n-min", type=int, default=2)
    b.add_argument("--n-max", type=int, default=5)
    b.add_argument("--k", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--backends", default="exact,recursive,sampling")
    b.add_argument("--enum-cap", type=float, default=1e8)
    b.add_argument("--out")
    return p


def _read_evidence_file(path):
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise GraphFormatError("evidence file must map variable ids to states", path)
    return {int(k): int(v) for k, v in doc.items()}


def _trace_path(base, hyp, many):
    if not many:
        return base
    root, ext = os.path.splitext(base)
    return f"{root}-{hyp[0]}-{hyp[1]}{ext or '.csv'}"


def cmd_infer(args, out=None) -> int:
    out = out or sys.stdout
    with open(args.graph) as fh:
        g = load_graph(fh.read())
    assignments = dict(Evidence.from_graph(g).items())
    if args.evidence_file:
        assignments.update(_read_evidence_file(args.evidence_file))
    assignments.update(dict(args.evidence))
    # supplied evidence replaces the states recorded in the file
    g = Graph([replace(v, observed=None) for v in g.variables.values()], g.links)
    evidence = Evidence(assignments)
    report = validate_evidence(g, evidence)
    if report:
        raise ValidationError(report)
    cfg = SamplerConfig(
        burn_in=args.burn_in, window=args.window, epsilon=args.epsilon, delta=args.delta,
        c=args.c, ig_layer=args.ig_layer, ig_x=args.ig_x, cycle_max=args.cycle_max,
        seed=args.seed, estimator=args.estimator,
    )
    run, traces = diagnosis.diagnose(
        g, evidence, args.backend, hypotheses=args.hypothesis or None, cfg=cfg,
        jobs=args.jobs, enum_cap=args.enum_cap, term_cap=args.term_cap,
    )
    sampled = args.backend == "sampling"
    head = f"{'rank':>4}  {'hypothesis':<10}  {'likelihood':>14}  {'posterior':>12}"
    if sampled:
        head += f"  {'N':>7}  converged"
    print(head, file=out)
    for i, r in enumerate(run.ranked(), 1):
        line = (f"{i:>4}  {f'B({r.hypothesis[0]},{r.hypothesis[1]})':<10}  "
                f"{r.likelihood:>14.6e}  {r.posterior:>12.6f}")
        if sampled:
            line += f"  {r.n_cycles:>7}  {'yes' if r.converged else 'no'}"
        print(line, file=out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(run.to_json())
    if args.trace and traces:
        for hyp, tr in traces.items():
            tr.write(_trace_path(args.trace, hyp, len(traces) > 1))
    if not run.all_converged:
        print("warning: sampling hit cycle_max before converging", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return 0


def cmd_generate(args, out=None) -> int:
    out = out or sys.stdout
    fam = args.family
    if fam == "full-joined":
        m = generators.full_joined(args.n, args.k, args.seed)
    elif fam == "three-wide":
        m = generators.three_wide(args.layers, args.seed)
    elif fam == "compact":
        m = generators.compact_fixture()
    elif fam == "fig18":
        m = generators.fig18_fixture(seed=args.seed)
    else:
        m = generators.random_ducg(args.seed)
    text = dump_graph(m.graph, m.evidence)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def cmd_bench(args, out=None) -> int:
    out = out or sys.stdout
    rows = bench_mod.bench(
        range(args.n_min, args.n_max + 1), k=args.k, seed=args.seed,
        backends=tuple(b.strip() for b in args.backends.split(",") if b.strip()),
        enum_cap=args.enum_cap,
    )
    text = bench_mod.to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    out.write(text)
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        if args.command == "infer":
            return cmd_infer(args)
        if args.command == "generate":
            return cmd_generate(args)
        return cmd_bench(args)
    except (GraphFormatError, ValidationError, DisconnectedHypothesis, EvidenceImpossible,
            OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EnumerationInfeasible, RecursionInfeasible, AssumptionsNotSatisfied) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
