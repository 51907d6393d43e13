"""Shapes of refined schedules for synthetic gradient-norm profiles.

For each profile, refine with the default settings and fit a warmed-up
polynomial decay. Flat norms give linear decay; rising norms steepen the
decay (power above 1) and falling norms flatten it.
"""

import argparse

import numpy as np

from schedule_refinement.plotting import line_plot_svg, write_svg
from schedule_refinement.refinement import RefinementConfig, refine
from schedule_refinement.schedule_core import fit_poly


def profiles(T, rng):
    t = np.linspace(0.0, 1.0, T)
    noise = 1.0 + 0.05 * rng.standard_normal(T)
    return {
        "flat": np.ones(T) * noise,
        "rising": (1.0 + t) * noise,
        "falling": (2.0 - t) * noise,
        "late spike": (1.0 + 2.0 * (t > 0.9)) * noise,
        "u-shape": (1.0 + 2.0 * (t - 0.5) ** 2) * noise,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--tau", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--svg", default=None)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    series = []
    print(f"{'profile':<12} {'warmup':>7} {'power':>7} {'rms':>9}")
    for name, norms in profiles(args.steps, rng).items():
        sched = refine(norms, RefinementConfig(tau=args.tau))
        fit = fit_poly(sched)
        print(f"{name:<12} {fit.warmup_fraction:>7.3f} {fit.power:>7.3f} {fit.rms_residual:>9.2e}")
        series.append((name, sched.values))
    if args.svg:
        write_svg(line_plot_svg([("refined schedules", series)]), args.svg)
        print(f"wrote {args.svg}")


if __name__ == "__main__":
    main()
