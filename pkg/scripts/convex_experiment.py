"""Two-phase schedule comparison on logistic regression.

Runs each schedule for every seed, refines from the linear run's norm log,
and prints mean +/- standard error of the final train loss and 0/1 error.

    python scripts/convex_experiment.py --steps 3200 --seeds 5
    python scripts/convex_experiment.py --libsvm data/a1a.svm --svg schedules.svg
"""

import argparse
import time
from dataclasses import replace

from schedule_refinement.convex_lab import libsvm_logreg, synthetic_logreg
from schedule_refinement.experiment import ExperimentConfig, compare_schedules
from schedule_refinement.libsvm import load_libsvm
from schedule_refinement.plotting import line_plot_svg, write_svg
from schedule_refinement.refinement import RefinementConfig, refine
from schedule_refinement.schedule_core import make_schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--libsvm", action="append", default=[], help="LIBSVM file(s); synthetic data if omitted")
    ap.add_argument("--schedules", default="constant,linear,cosine,refined")
    ap.add_argument("--steps", type=int, default=3200)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    ap.add_argument("--scale", type=float, default=0.01)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--svg", default=None, help="plot the seed-0 refined schedule against linear decay")
    args = ap.parse_args()

    if args.libsvm:
        problems = [libsvm_logreg(load_libsvm(p)) for p in args.libsvm]
    else:
        problems = [synthetic_logreg(512, 10, seed=7)]
    names = [s.strip() for s in args.schedules.split(",")]
    cfg = ExperimentConfig(steps=args.steps, seeds=tuple(range(args.seeds)), optimizer=args.optimizer,
                           scale=args.scale, workers=args.workers)

    for problem in problems:
        start = time.perf_counter()
        results = compare_schedules(problem, names, cfg)
        print(f"{problem.name}  (T={cfg.steps}, {len(cfg.seeds)} seeds, {cfg.optimizer}, "
              f"{time.perf_counter() - start:.1f}s)")
        print(f"  {'schedule':<10} {'loss':>22} {'error':>22}  failed")
        for r in results:
            loss, loss_se = r.summary("final_loss")
            err, err_se = r.summary("final_error")
            print(f"  {r.name:<10} {loss:>12.6f} +/- {loss_se:.6f} {err:>12.4f} +/- {err_se:.4f}  {len(r.failures)}")

    if args.svg:
        (linear,) = compare_schedules(problems[0], ["linear"], replace(cfg, seeds=(0,)))
        report = linear.reports[0]
        log = report.extra_logs.get("l1", report.norm_log)
        refined = refine(log, RefinementConfig(weighting="inv_l1" if log.kind == "l1" else "inv_sq_l2"))
        svg = line_plot_svg([
            ("baseline gradient norms", [(log.kind, log.norms)]),
            ("schedules", [("linear", make_schedule("linear", cfg.steps).normalize().values),
                           ("refined", refined.values)]),
        ])
        write_svg(svg, args.svg)
        print(f"wrote {args.svg}")


if __name__ == "__main__":
    main()
