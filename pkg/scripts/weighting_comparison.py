"""Compare relocation weightings on crease vertices of a jittered cube.

    python3 scripts/weighting_comparison.py --seeds 10
"""

import argparse

import numpy as np

from angleremesh.experiments import weighting_trial


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--n", type=int, default=8, help="cube subdivisions per side")
    p.add_argument("--amount", type=float, default=0.3, help="jitter in grid spacings")
    args = p.parse_args()
    names = ("feature", "lawson", "uniform")
    rows = [weighting_trial(s, n=args.n, amount=args.amount, weightings=names)
            for s in range(args.seeds)]
    print("seed " + " ".join(f"{w:>10}" for w in names))
    for s, r in enumerate(rows):
        print(f"{s:4d} " + " ".join(f"{r[w]:10.6f}" for w in names))
    print("mean " + " ".join(f"{np.mean([r[w] for r in rows]):10.6f}" for w in names))


if __name__ == "__main__":
    main()
