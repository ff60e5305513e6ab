"""Term census of the three-wide model under repeated one-layer expansion,
next to the values the a/b/c recurrences predict."""
import argparse

from ducg import algebra
from ducg.generators import three_wide


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=3)
    args = ap.parse_args()

    m = three_wide(args.steps + 1)
    e = algebra.evidence_product(m.graph, m.evidence)
    pred = None
    print(f"{'step':>4} {'one-X':>8} {'two-X':>8} {'three-X':>8}   predicted")
    for step in range(1, args.steps + 1):
        e = algebra.expand_layer(m.graph, e, by_state=False)
        got = algebra.census(e).abc()
        pred = (3, 18, 6) if pred is None else (3 * sum(pred), 6 * pred[1] + 18 * pred[2], 6 * pred[2])
        print(f"{step:>4} {got[0]:>8} {got[1]:>8} {got[2]:>8}   {pred}")


if __name__ == "__main__":
    main()
