"""Two-phase schedule comparison: baseline run, refine from its norms, rerun."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .convex_lab import Problem, RunReport, run_adam_like, run_sgd
from .errors import DivergenceError
from .refinement import DEFAULT_WEIGHTING, RefinementConfig, refine
from .schedule_core import Schedule, apply_warmup, make_schedule

REFINED_PREFIX = "refined"


@dataclass
class ExperimentConfig:
    steps: int = 3200
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    optimizer: str = "adam"  # "adam" or "sgd"
    scale: float = 0.01
    beta2: float = 0.95
    warmup: float = 0.0
    tau: float = 0.1
    # norm log feeding refinement; for adam runs "l1" follows the inverse-l1 recommendation
    refine_from: str = "l1"
    workers: int = 1
    schedule_params: dict = field(default_factory=dict)


@dataclass
class ScheduleResult:
    name: str
    reports: list[RunReport]
    failures: dict[int, str]

    def _values(self, attr: str) -> np.ndarray:
        return np.array([getattr(r, attr) for r in sorted(self.reports, key=lambda r: r.seed)])

    def summary(self, attr: str) -> tuple[float, float]:
        """Mean and standard error of ``attr`` over successful seeds."""
        v = self._values(attr)
        if v.size == 0:
            return math.nan, math.nan
        if v.size == 1:
            return float(v[0]), 0.0
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def base_schedule(name: str, T: int, warmup: float = 0.0, **params) -> Schedule:
    kind, _, arg = name.partition(":")
    kw = dict(params)
    if kind == "poly" and arg:
        kw["power"] = float(arg)
    if kind in ("inv_t", "inv_sqrt") and arg:
        kw["beta"] = float(arg)
    if kind in ("inv_t", "inv_sqrt"):
        kw.setdefault("beta", 1.0)
    sched = make_schedule(kind, T, **{k: v for k, v in kw.items() if k in ("beta", "power", "milestones", "factor")})
    return apply_warmup(sched, warmup) if warmup > 0 else sched


def _run(problem: Problem, schedule: Schedule, seed: int, cfg: ExperimentConfig) -> RunReport:
    if cfg.optimizer == "adam":
        return run_adam_like(problem, schedule, cfg.scale, cfg.steps, seed, beta2=cfg.beta2)
    return run_sgd(problem, schedule, cfg.scale, cfg.steps, seed)


def _refine_source(report: RunReport, cfg: ExperimentConfig):
    if cfg.refine_from in report.extra_logs:
        return report.extra_logs[cfg.refine_from]
    return report.norm_log


def _one_seed(problem: Problem, names: list[str], seed: int, cfg: ExperimentConfig):
    out: dict[str, RunReport | str] = {}
    baseline: RunReport | None = None
    for name in names:
        try:
            if name.startswith(REFINED_PREFIX):
                if baseline is None:
                    linear = base_schedule("linear", cfg.steps, cfg.warmup)
                    baseline = _run(problem, linear, seed, cfg)
                log = _refine_source(baseline, cfg)
                rc = RefinementConfig(tau=cfg.tau, weighting=DEFAULT_WEIGHTING[log.kind])
                schedule = refine(log, rc)
            else:
                schedule = base_schedule(name, cfg.steps, cfg.warmup, **cfg.schedule_params)
            report = _run(problem, schedule, seed, cfg)
            if name == "linear" and baseline is None:
                baseline = report
            out[name] = report
        except (DivergenceError, FloatingPointError, ValueError) as exc:
            out[name] = f"{type(exc).__name__}: {exc}"
    return seed, out


def compare_schedules(problem: Problem, names: list[str], cfg: ExperimentConfig) -> list[ScheduleResult]:
    """Run every named schedule for each seed. ``refined`` uses the linear run of the same seed.

    Seeds may run in parallel; results are aggregated in seed order.
    """
    seeds = sorted(cfg.seeds)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            per_seed = list(pool.map(lambda s: _one_seed(problem, names, s, cfg), seeds))
    else:
        per_seed = [_one_seed(problem, names, s, cfg) for s in seeds]
    per_seed.sort(key=lambda item: item[0])
    results = []
    for name in names:
        reports, failures = [], {}
        for seed, out in per_seed:
            value = out[name]
            if isinstance(value, RunReport):
                reports.append(value)
            else:
                failures[seed] = value
        results.append(ScheduleResult(name, reports, failures))
    return results
