"""||E||_** / delta over beta and delta, with the location of the maximum.

    python scripts/error_norm_sweep.py --k 8 --m 2
"""

import argparse
import math

from segbubbles import potential as pot
from segbubbles import residual as res
from segbubbles.bubbles import AnsatzConfig

GOLDEN = (1 + math.sqrt(5)) / 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--beta", type=float, nargs="+", default=[-1.0, 1.0])
    ap.add_argument("--delta", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    args = ap.parse_args()

    for beta in args.beta:
        for delta in args.delta:
            c = AnsatzConfig.make(args.k, args.m, beta, delta, GOLDEN, GOLDEN, potential=pot.gaussian_bump())
            r = res.error_norm_report(c)
            print(f"beta {beta:+.1f} delta {delta:.0e}: ratio {r.ratio:10.3f}  refine change {r.refinement_change:.1e}  "
                  f"argmax {[round(v, 5) for v in r.argmax]}")


if __name__ == "__main__":
    main()
