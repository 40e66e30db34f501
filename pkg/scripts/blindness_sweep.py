"""Blindness verdicts for every suite fixture, honest and sabotaged, over a few run counts."""

import argparse
import time

from sbqc import fixtures
from sbqc.blindness import blindness_test, sabotaged


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, nargs="+", default=[1000, 10000])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--verbose", action="store_true", help="print full reports")
    args = ap.parse_args()
    print(f"{'fixture':<18} {'N':>6} {'variant':<9} {'tv':>7} {'thr':>7} {'min p':>8}  verdict  time")
    for name, build in fixtures.SUITE.items():
        inst = build()
        variants = {"honest": inst, "sabotage": sabotaged(inst, fixtures.SABOTAGE_TARGET[name])}
        for n in args.trials:
            for label, target in variants.items():
                t0 = time.perf_counter()
                v = blindness_test(target, n, args.seed)
                pmin = min((r.p_value for r in v.chi), default=float("nan"))
                print(
                    f"{name:<18} {n:>6} {label:<9} {v.tv_estimate:>7.4f} {v.threshold:>7.4f} {pmin:>8.4f}  "
                    f"{'PASS' if v.pass_ else 'FAIL':<7}  {time.perf_counter() - t0:.1f}s"
                )
                if args.verbose:
                    print(v.report())


if __name__ == "__main__":
    main()
