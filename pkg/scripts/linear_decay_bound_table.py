"""Last-iterate bound for linear decay with constant gradient norms.

Evaluates the three-term bound numerically for the schedule
eta_t = D/(G sqrt T) (1 - t/(T+1)) and compares it, in units of DG/sqrt(T),
with the stated constant 2 + (H(T-1) - 2/3)/(T+1) and the exact closed form
2 + (H(T-1) - 3/2)/(T+1).
"""

import argparse
import math

from schedule_refinement.bounds import (
    anyeta_bound,
    linear_decay_constant,
    linear_decay_exact_constant,
    offset_linear_schedule,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizons", default="2,3,5,10,30,100,1000,10000,100000,1000000")
    args = ap.parse_args()

    print(f"{'T':>8} {'numeric':>10} {'exact':>10} {'stated':>10} {'stated-numeric':>15} {'dist':>8} {'var':>8} {'tail':>8}")
    for T in (int(s) for s in args.horizons.split(",")):
        r = anyeta_bound(offset_linear_schedule(T), 1.0, 1.0)
        unit = 1.0 / math.sqrt(T)
        num = r.total / unit
        stated = linear_decay_constant(T)
        print(f"{T:>8} {num:>10.6f} {linear_decay_exact_constant(T):>10.6f} {stated:>10.6f} {stated - num:>15.3e} "
              f"{r.distance_term / unit:>8.4f} {r.variance_term / unit:>8.4f} {r.tail_term / unit:>8.4f}")


if __name__ == "__main__":
    main()
