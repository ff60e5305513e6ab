"""Timing sweep over full-joined models and a qualitative trend verdict."""
import argparse

from ducg import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=2)
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    rows = bench.bench(range(args.n_min, args.n_max + 1), k=3, seed=args.seed)
    text = bench.to_csv(rows)
    print(text, end="")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    tv = bench.trend(rows)
    print(f"\nexact log-log slopes: {[round(s, 2) for s in tv.exact_slopes]} "
          f"(super-polynomial: {tv.exact_superpolynomial})")
    print(f"sampling per-cycle exponent: {tv.sampling_exponent:.2f} (polynomial: {tv.sampling_polynomial})")
    print(f"crossover n: {tv.crossover_n}")


if __name__ == "__main__":
    main()
