"""Scan d (delta = exp(-d k^2)) for a sign change of the delta-Pohozaev integral.

    python scripts/zero_crossing_scan.py --k 4 --amplitude 0.1
"""

import argparse
import math

import numpy as np

from segbubbles import expansions as ex
from segbubbles import potential as pot
from segbubbles.bubbles import AnsatzConfig
from segbubbles.errors import ParameterError

GOLDEN = (1 + math.sqrt(5)) / 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--amplitude", type=float, default=0.1)
    ap.add_argument("--factors", type=float, nargs="+", default=[0.5, 0.7, 0.85, 1.0, 1.2, 1.5, 2.0])
    args = ap.parse_args()

    V = pot.gaussian_bump(amplitude=args.amplitude)
    c = AnsatzConfig.make(args.k, args.m, 1.0, 1e-4, GOLDEN, GOLDEN, potential=V)
    pred = ex.predicted_d_star(c)
    ds = pred * np.array(args.factors)
    print(f"predicted d* = {pred:.6f}")
    try:
        zc = ex.pohozaev_zero_crossing(c, ds)
        samples = zc.samples
        print(f"d* = {zc.d_star:.6f}, gap {zc.relative_gap:.2%}")
    except ParameterError as exc:
        print(exc)
        samples = []
        for d in ds:
            cd = c.with_(delta=math.exp(-d * args.k**2))
            samples.append((d, ex.pohozaev_delta(cd).measured))
    for d, v in samples:
        print(f"  d = {d:.5f}  delta = {math.exp(-d * args.k**2):.3e}  integral = {v:+.6e}")


if __name__ == "__main__":
    main()
