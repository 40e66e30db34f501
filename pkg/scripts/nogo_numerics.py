"""Separability scan, correlated-key attack table and key-guessing bound in one go."""

import argparse
import math

from sbqc import nogo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--csv", help="write the scan grid here")
    ap.add_argument("--isometries", type=int, default=200, help="random isometries to sample")
    args = ap.parse_args()

    res = nogo.separability_scan(args.resolution)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(res.to_csv())
    print(f"scan {args.resolution}x{args.resolution}: {int(res.zero_mask().sum())} product points, "
          f"analytic set {'matches' if res.agrees() else 'DIFFERS'}, image rank {nogo.image_rank(args.resolution)}")
    worst = nogo.isometry_scan(args.isometries, seed=0)
    print(f"random isometries: smallest max-deviation {worst.min():.4f} over {args.isometries} samples")

    print("\nkey map      invariant         accuracy  MI bits")
    for f in nogo.KEY_MAPS:
        r = nogo.correlated_key_attack(f)
        inv = ",".join(map(str, sorted(r.invariant)))
        print(f"{f:<12} {inv:<17} {r.accuracy:>8.3f}  {r.mi_bits:.4f}")

    print("\n   n      min_m(c=2)  min_m/log2 n")
    for k in range(8, 21):
        m = nogo.min_m(2**k, 2)
        print(f"2^{k:<5} {m:>10}  {m / k:.3f}")
    print(f"(asymptotic slope 2/log2(8) = {2 / math.log2(8):.3f})")


if __name__ == "__main__":
    main()
