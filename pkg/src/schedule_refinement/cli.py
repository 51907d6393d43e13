"""Command-line entry point.

Exit codes: 0 success, 2 usage or parse error, 3 domain error (degenerate
norms, zero suffix sums, all runs failed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import warnings
from pathlib import Path

from . import io as sio
from .bounds import anyeta_bound
from .convex_lab import AbsLipschitz, synthetic_logreg, libsvm_logreg
from .errors import DegenerateNormsError, DomainError, ParseError
from .experiment import REFINED_PREFIX, ExperimentConfig, base_schedule, compare_schedules
from .libsvm import load_libsvm
from .plotting import line_plot_svg, write_svg
from .refinement import DEFAULT_WEIGHTING, ClampedNormsWarning, WEIGHTINGS, RefinementConfig, filter_width, median_filter, refine
from .schedule_core import SCHEDULE_KINDS, apply_warmup, fit_poly, make_schedule

log = logging.getLogger("schedule_refinement")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 2, 3


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _require_file(path: str | None, flag: str):
    if path is not None and not Path(path).is_file():
        raise UsageError(f"{flag}: no such file {path!r}")


def cmd_refine(args) -> int:
    _require_file(args.norms_file, "norms-file")
    norm_log = sio.read_norms(args.norms_file, args.kind)
    weighting = args.weighting or DEFAULT_WEIGHTING[norm_log.kind]
    cfg = RefinementConfig(tau=args.tau, weighting=weighting, zero_policy=args.zero_policy,
                           epsilon_fraction=args.epsilon)
    with warnings.catch_warnings():
        # surfaced below as plain stderr notes
        warnings.simplefilter("ignore", ClampedNormsWarning)
        schedule = refine(norm_log, cfg)
    for note in schedule.notes:
        print(f"warning: {note}", file=sys.stderr)
    _emit(sio.format_schedule_csv(schedule), args.out)
    if args.plot:
        smoothed = median_filter(norm_log.norms, filter_width(args.tau, len(norm_log)))
        svg = line_plot_svg([
            ("gradient norms", [("raw", norm_log.norms), ("median filtered", smoothed)]),
            ("refined schedule", [("refined", schedule.values)]),
        ])
        write_svg(svg, args.plot)
    return EXIT_OK


def _schedule_from_args(args):
    kw = {}
    if args.kind == "poly":
        kw["power"] = args.power
    if args.kind in ("inv_t", "inv_sqrt"):
        kw["beta"] = args.beta
    if args.kind == "stepwise":
        kw["milestones"] = tuple(float(m) for m in args.milestones.split(","))
        kw["factor"] = args.factor
    schedule = make_schedule(args.kind, args.steps, **kw)
    return schedule.normalize()


def cmd_schedule(args) -> int:
    schedule = _schedule_from_args(args)
    if args.warmup:
        schedule = apply_warmup(schedule, args.warmup)
    _emit(sio.format_schedule_csv(schedule), args.out)
    return EXIT_OK


def cmd_bound(args) -> int:
    _require_file(args.eta_file, "eta-file")
    _require_file(args.norms_file, "norms-file")
    if args.norms_file is None and args.G is None:
        raise UsageError("bound needs --norms-file or --G")
    eta = sio.read_schedule_csv(args.eta_file)
    if args.norms_file is not None:
        gnorms = sio.read_norms(args.norms_file).norms
        if gnorms.size != len(eta):
            raise UsageError(f"schedule has {len(eta)} steps but the norm log has {gnorms.size}")
    else:
        gnorms = float(args.G)
    report = anyeta_bound(eta, gnorms, args.D)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_fit_poly(args) -> int:
    _require_file(args.schedule_file, "schedule-file")
    fit = fit_poly(sio.read_schedule_csv(args.schedule_file))
    _emit(json.dumps({"warmup_fraction": fit.warmup_fraction, "power": fit.power,
                      "rms_residual": fit.rms_residual}, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _problem(args):
    name = args.problem
    if name == "abs":
        return AbsLipschitz(G=args.G, x_star=0.0, x0=args.D), "sgd", args.D / (args.G * math.sqrt(args.steps))
    if name == "logreg":
        return synthetic_logreg(args.n, args.d, seed=args.data_seed), "adam", 0.01
    if name.startswith("libsvm:"):
        path = name.split(":", 1)[1]
        _require_file(path, "problem")
        return libsvm_logreg(load_libsvm(path)), "adam", 0.01
    raise UsageError(f"unknown problem {name!r}; expected abs, logreg or libsvm:PATH")


RESULT_FIELDS = ("final_loss", "final_suboptimality", "final_error")


def cmd_simulate(args) -> int:
    problem, default_opt, default_scale = _problem(args)
    names = [s.strip() for s in args.schedules.split(",") if s.strip()]
    if not names:
        raise UsageError("no schedules given")
    for name in names:
        if not name.startswith(REFINED_PREFIX):
            try:
                base_schedule(name, 2)
            except DomainError as exc:
                raise UsageError(f"schedule {name!r}: {exc}") from None
    cfg = ExperimentConfig(
        steps=args.steps,
        seeds=tuple(range(args.seed, args.seed + args.seeds)),
        optimizer=args.optimizer or default_opt,
        scale=args.scale if args.scale is not None else default_scale,
        warmup=args.warmup,
        tau=args.tau,
        workers=args.workers,
    )
    results = compare_schedules(problem, names, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["schedule", "runs", "failed"]
    for f in RESULT_FIELDS:
        header += [f"{f}_mean", f"{f}_se"]
    writer.writerow(header)
    runs_lines = []
    for res in results:
        row = [res.name, len(res.reports), len(res.failures)]
        for f in RESULT_FIELDS:
            mean, se = res.summary(f)
            row += [repr(mean), repr(se)]
        writer.writerow(row)
        for report in sorted(res.reports, key=lambda r: r.seed):
            runs_lines.append(report.to_json(schedule=res.name, status="ok"))
            norm_dir = out / "norms"
            norm_dir.mkdir(exist_ok=True)
            for key, nlog in [("primary", report.norm_log), *sorted(report.extra_logs.items())]:
                sio.write_norms_csv(nlog, norm_dir / f"{res.name}_seed{report.seed}_{key}.csv")
        for seed, msg in sorted(res.failures.items()):
            runs_lines.append(json.dumps({"schedule": res.name, "seed": seed, "status": "failed", "error": msg},
                                         sort_keys=True))
    (out / "results.csv").write_text(buf.getvalue())
    (out / "runs.jsonl").write_text("".join(line + "\n" for line in runs_lines))
    sys.stdout.write(buf.getvalue())
    if all(not res.reports for res in results):
        log.error("every run failed")
        return EXIT_DOMAIN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrrefine", description="Learning-rate schedule refinement toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine", help="refined schedule from a gradient-norm log")
    p.add_argument("norms_file")
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--kind", choices=("l2", "l1", "adam_weighted"), default=None,
                   help="norm kind (overrides the file's kind column)")
    p.add_argument("--weighting", choices=WEIGHTINGS, default=None)
    p.add_argument("--zero-policy", choices=("error", "clamp"), default="error")
    p.add_argument("--epsilon", type=float, default=1e-3, help="clamp floor as a fraction of the max norm")
    p.add_argument("--out", default=None)
    p.add_argument("--plot", default=None, help="write an SVG of norms and schedule")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("schedule", help="emit a standard schedule, normalized to peak 1")
    p.add_argument("--kind", choices=SCHEDULE_KINDS, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--warmup", type=float, default=0.0)
    p.add_argument("--power", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--milestones", default="0.3,0.6,0.9")
    p.add_argument("--factor", type=float, default=0.1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("bound", help="evaluate the last-iterate bound for a schedule")
    p.add_argument("--eta-file", required=True)
    p.add_argument("--norms-file", default=None)
    p.add_argument("--G", type=float, default=None)
    p.add_argument("--D", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="run the two-phase convex experiment")
    p.add_argument("--problem", default="logreg", help="abs, logreg or libsvm:PATH")
    p.add_argument("--schedules", default="constant,linear,cosine,refined")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--steps", type=int, default=3200)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default=None)
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--warmup", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--G", type=float, default=1.0)
    p.add_argument("--D", type=float, default=1.0)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--data-seed", type=int, default=7)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit-poly", help="fit a warmed-up polynomial decay to a schedule")
    p.add_argument("schedule_file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit_poly)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateNormsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
