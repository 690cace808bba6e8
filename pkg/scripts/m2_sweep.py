"""M2 over k at fixed delta, split into the bubble-interaction and cut-off pieces.

    python scripts/m2_sweep.py --k 8 16 32 --delta 1e-4
"""

import argparse
import json
import math

from segbubbles import expansions as ex
from segbubbles import potential as pot
from segbubbles.bubbles import AnsatzConfig

GOLDEN = (1 + math.sqrt(5)) / 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--delta", type=float, default=1e-4)
    ap.add_argument("--json", help="write the rows here")
    args = ap.parse_args()

    rows = []
    print(f"{'k':>4} {'M2 norm':>12} {'interaction':>12} {'cut-off':>12} {'oracle':>10}")
    for k in args.k:
        c = AnsatzConfig.make(k, 2, 1.0, args.delta, GOLDEN, GOLDEN, potential=pot.gaussian_bump())
        e = ex.m2_integral(c, decompose=True).extra
        rows.append({"k": k, **e})
        print(f"{k:>4} {e['normalised']:>12.4f} {e['interaction_part']:>12.4f} {e['cutoff_part']:>12.4f} {e['b_oracle']:>10.4f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
