"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the lines alone, or via
pytest, where ``conftest.py`` repeats them in the terminal summary.
"""

import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from schedule_refinement.bounds import anyeta_bound, linear_decay_constant, offset_linear_schedule, tail_identity
from schedule_refinement.convex_lab import (
    AbsLipschitz,
    libsvm_logreg,
    rearranged_points,
    regret,
    run_sgd,
    run_weighted_ogd,
    scheduled_reduction,
    synthetic_logreg,
)
from schedule_refinement.errors import DegenerateNormsError
from schedule_refinement.experiment import ExperimentConfig, compare_schedules
from schedule_refinement.libsvm import load_libsvm
from schedule_refinement.refinement import RefinementConfig, median_filter, optimal_weights, refine, weighted_objective
from schedule_refinement.schedule_core import (
    WeightSequence,
    apply_warmup,
    fit_poly,
    make_schedule,
    schedule_to_weights,
    weights_to_schedule,
)

RESULTS: dict[int, str] = {}
DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def criterion_1():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        T = int(rng.integers(1, 1001))
        q = rng.uniform(-1.0, 1.0, T)
        w = rng.uniform(0.0, 1.0, T) + 1e-12
        lhs, rhs = tail_identity(q, w)
        worst = max(worst, abs(lhs - rhs) / (1.0 + np.max(np.abs(q))))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-9 and elapsed < 10.0,
           f"tail identity, 10000 instances: max scaled gap {worst:.2e} (<= 1e-9), {elapsed:.2f}s (< 10s)")


def criterion_2():
    # 1 - t/T rounded once; the float expression 1.0 - t/T rounds twice
    bad = [T for T in (1, 2, 10, 1000)
           if weights_to_schedule([1.0] * T).values.tolist() != [float(Fraction(T - t, T)) for t in range(1, T + 1)]]
    record(2, not bad, f"uniform weights give 1 - t/T exactly for T in 1, 2, 10, 1000 (mismatches: {bad or 'none'})")


def criterion_3():
    rng = np.random.default_rng(303)
    worst, negative = 0.0, 0
    for _ in range(100):
        T = int(rng.integers(1, 64))
        eta = rng.uniform(1e-3, 1.0, T)
        w = schedule_to_weights(eta, precision_bits=4 * (T + 1) + 128)
        negative += int(np.any(w.weights < 0))
        back = weights_to_schedule(w).values[:T]
        target = eta / eta.max()
        worst = max(worst, float(np.max(np.abs(back - target) / target)))
    record(3, negative == 0 and worst <= 1e-6,
           f"representation roundtrip, 100 schedules: max rel error {worst:.2e} (<= 1e-6), negative weights {negative}")


def criterion_4():
    rng = np.random.default_rng(404)
    worst_gap, worst_station, worst_lambda = -math.inf, 0.0, 0.0
    for _ in range(50):
        T = int(rng.integers(1, 7))
        g = rng.uniform(0.1, 10.0, T)
        D = float(rng.uniform(0.1, 10.0))
        res = optimal_weights(g, D)
        w = res.weights.weights
        best = res.bound_value
        # log-uniform search box spanning two decades either side of the closed form
        lo, hi = np.log(w.min() / 100), np.log(w.max() * 100)
        cand = np.exp(rng.uniform(lo, hi, size=(10_000, T)))
        vals = (D * D + np.sum(cand**2 * g**2, axis=1)) / (2 * np.sum(cand, axis=1))
        worst_gap = max(worst_gap, (best - vals.min()) / vals.min())
        for k in range(T):
            h = 1e-6 * w[k]
            up, down = w.copy(), w.copy()
            up[k] += h
            down[k] -= h
            d = (math.log(weighted_objective(up, g, D)) - math.log(weighted_objective(down, g, D))) / (2 * h)
            worst_station = max(worst_station, abs(d))
        worst_lambda = max(worst_lambda, abs(res.bound_value - D / math.sqrt(np.sum(g**-2.0))) / res.bound_value)
    ok = worst_gap <= 1e-8 and worst_station < 1e-5 and worst_lambda <= 1e-12
    record(4, ok, f"optimal weights, 50 instances: closed form minus best search {worst_gap:.2e} rel (<= 1e-8), "
                  f"stationarity {worst_station:.2e} (< 1e-5), lambda identity {worst_lambda:.2e} (<= 1e-12)")


def criterion_5():
    start = time.perf_counter()
    worst_rel, worst_ratio = 0.0, 0.0
    parts = []
    for T in (10, 100, 1000, 10**5):
        D, G = 1.0, 1.0
        total = anyeta_bound(offset_linear_schedule(T, D, G), G, D).total
        unit = D * G / math.sqrt(T)
        target = linear_decay_constant(T) * unit
        rel = abs(total - target) / target
        worst_rel = max(worst_rel, rel)
        worst_ratio = max(worst_ratio, total / unit)
        parts.append(f"T={T}: {rel:.1e}")
    for T in (2, 3, 5, 50, 500, 5000):
        worst_ratio = max(worst_ratio, anyeta_bound(offset_linear_schedule(T), 1.0, 1.0).total * math.sqrt(T))
    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-8 and worst_ratio <= 2.25 and elapsed < 5.0
    record(5, ok, f"linear-decay constant: rel gap to 2 + (H(T-1) - 2/3)/(T+1) [{', '.join(parts)}] (<= 1e-8), "
                  f"max bound/(DG/sqrt T) {worst_ratio:.4f} (<= 2.25), {elapsed:.2f}s (< 5s)")


def criterion_6():
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(1000):
        T = int(rng.integers(1, 101))
        d = int(rng.integers(1, 11))
        w = WeightSequence(rng.uniform(0.01, 1.0, T))
        z = np.cumsum(rng.standard_normal((T, d)), axis=0)
        _, xs = scheduled_reduction(np.diff(z, axis=0), w, z[0])
        direct = rearranged_points(z, w)
        worst = max(worst, float(np.max(np.abs(xs - direct) / (1.0 + np.abs(direct)))))
    record(6, worst <= 1e-9, f"reduction equivalence, 1000 instances: max deviation {worst:.2e} (<= 1e-9)")


def criterion_7():
    ratios = []
    for T in (4, 16, 64, 256, 1024):
        D, G = 1.0, 1.0
        prob = AbsLipschitz(G=G, x_star=0.0, x0=D)
        rep = run_sgd(prob, make_schedule("linear", T), D / (G * math.sqrt(T)), T)
        ratios.append(rep.final_suboptimality / (D * G / math.sqrt(T)))
    record(7, all(r <= 1.0 for r in ratios),
           "f(x_T) - f* over DG/sqrt(T) for T = 4..1024: " + ", ".join(f"{r:.3f}" for r in ratios) + " (<= 1)")


def criterion_8():
    rng = np.random.default_rng(808)
    worst, runs = 0.0, 0
    problems = [AbsLipschitz(G=1.0, x_star=[0.2, -0.3], x0=[1.0, 1.0], dimension=2),
                AbsLipschitz(G=3.0, x_star=0.0, x0=-2.0),
                synthetic_logreg(512, 10, seed=7)]
    for prob in problems:
        for seed in range(4):
            T = int(rng.integers(1, 300))
            w = WeightSequence(rng.uniform(0.001, 0.3, T))
            traj = run_weighted_ogd(prob, w, seed)
            for u in (prob.minimizer, rng.standard_normal(prob.dimension)):
                lhs, rhs = regret(traj, w, u)
                worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
                runs += 1
    record(8, worst <= 1e-9, f"OGD regret identity over {runs} checks: max gap {worst:.2e} (<= 1e-9)")


def _libsvm_info():
    if not DATA_DIR.is_dir():
        return
    cfg = ExperimentConfig(steps=3200, seeds=tuple(range(5)))
    for path in sorted(DATA_DIR.glob("*.svm")) + sorted(DATA_DIR.glob("*.libsvm")):
        try:
            results = compare_schedules(libsvm_logreg(load_libsvm(path)), ["linear", "cosine", "refined"], cfg)
        except ValueError as exc:
            print(f"  info: {path.name}: skipped ({exc})")
            continue
        summary = ", ".join(f"{r.name} error {r.summary('final_error')[0]:.4f}" for r in results)
        print(f"  info: {path.name}: {summary}")


def criterion_9():
    start = time.perf_counter()
    problem = synthetic_logreg(512, 10, seed=7)
    cfg = ExperimentConfig(steps=3200, seeds=tuple(range(5)), optimizer="adam", scale=0.01)
    res = {r.name: r for r in compare_schedules(problem, ["constant", "linear", "cosine", "refined"], cfg)}
    mean = {name: r.summary("final_loss")[0] for name, r in res.items()}
    elapsed = time.perf_counter() - start
    failures = sum(len(r.failures) for r in res.values())
    ok = (failures == 0 and mean["refined"] <= mean["linear"] * 1.02
          and mean["linear"] <= mean["cosine"] * 1.05 and elapsed < 120.0)
    record(9, ok, f"logreg T=3200, 5 seeds: mean loss refined {mean['refined']:.5f}, linear {mean['linear']:.5f}, "
                  f"cosine {mean['cosine']:.5f}, constant {mean['constant']:.5f}; "
                  f"refined <= 1.02 linear, linear <= 1.05 cosine; {elapsed:.1f}s (< 120s)")
    _libsvm_info()


def criterion_10():
    hand = median_filter([1, 2, 100, 2, 1], 3).tolist() == [1, 2, 2, 2, 2]
    const = all(median_filter([3.0] * 6, k).tolist() == [3.0] * 6 for k in (1, 3, 5, 7))
    x = [0.3, 5.0, -2.0, 7.5]
    ident = median_filter(x, 1).tolist() == x
    try:
        refine([1.0] * 10 + [0.0] * 10, RefinementConfig(tau=0.1))
        degenerate = False
    except DegenerateNormsError as exc:
        degenerate = "linear decay" in str(exc)
    record(10, hand and const and ident and degenerate,
           f"median filter: hand example {hand}, constant {const}, width-1 identity {ident}, zero-norm error {degenerate}")


def criterion_11():
    planted = [(0.0, 0.5), (0.05, 1.0), (0.1, 1.5), (0.2, 2.37), (0.3, 3.0), (0.15, 4.2)]
    worst_r, worst_p = 0.0, 0.0
    for rho, p in planted:
        fit = fit_poly(apply_warmup(make_schedule("poly", 1000, power=p), rho))
        worst_r = max(worst_r, abs(fit.warmup_fraction - rho))
        worst_p = max(worst_p, abs(fit.power - p))
    record(11, worst_r <= 0.01 and worst_p <= 0.1,
           f"fit_poly on {len(planted)} planted schedules: max warmup error {worst_r:.4f} (<= 0.01), "
           f"max power error {worst_p:.4f} (<= 0.1)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 12)])
def test_criterion(criterion):
    criterion()


if __name__ == "__main__":
    failed = 0
    for c in CRITERIA:
        try:
            c()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
