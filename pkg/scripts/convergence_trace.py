"""Write sampling traces (t, P_t, running mean, window stats, verdict) for plotting."""
import argparse
from pathlib import Path

from ducg.generators import compact_fixture, full_joined
from ducg.sampling import SamplerConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="traces")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--full-joined", type=int, nargs="*", default=[4, 6, 8])
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    models = {"compact": compact_fixture()}
    models.update({f"full-joined-{n}": full_joined(n, 3, args.seed) for n in args.full_joined})
    for name, m in models.items():
        res, tr = run(m.graph, m.evidence, m.hypothesis, SamplerConfig(seed=args.seed))
        path = out / f"{name}.csv"
        tr.write(path)
        print(f"{name:<16} N={res.n_cycles:<6} estimate={res.likelihood:.6e} -> {path}")


if __name__ == "__main__":
    main()
