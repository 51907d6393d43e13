"""Desk-scale convex problems and the optimizers that run schedules on them."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
from scipy import optimize, sparse

from .errors import DivergenceError, DomainError
from .refinement import GradientNormLog
from .schedule_core import Schedule, WeightSequence

ADAM_EPS = 1e-8


class Problem:
    """A convex objective with a (possibly stochastic) subgradient oracle.

    Subclasses provide ``loss``, ``start`` and ``minimizer``; stochastic ones
    override ``gradient_stream``.
    """

    kind = "problem"
    dimension: int

    def loss(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def full_gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def start(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def minimizer(self) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def f_star(self) -> float:
        return self.loss(self.minimizer)

    def error_rate(self, x: np.ndarray) -> float:
        return math.nan

    def gradient_stream(self, rng: np.random.Generator, T: int) -> Iterator:
        """Yield ``T`` callables mapping a point to a subgradient estimate."""
        for _ in range(T):
            yield self.full_gradient


@dataclass(eq=False)
class AbsLipschitz(Problem):
    """``f(x) = G * ||x - x_star||``, with subgradient 0 at the kink."""

    G: float = 1.0
    x_star: float | Sequence[float] = 0.0
    x0: float | Sequence[float] = 1.0
    dimension: int = 1
    kind = "abs_lipschitz"

    def __post_init__(self):
        if not self.G > 0:
            raise DomainError("G must be positive")
        self._star = np.broadcast_to(np.asarray(self.x_star, dtype=np.float64), (self.dimension,)).copy()
        self._x0 = np.broadcast_to(np.asarray(self.x0, dtype=np.float64), (self.dimension,)).copy()

    def loss(self, x):
        return self.G * float(np.linalg.norm(np.asarray(x) - self._star))

    def full_gradient(self, x):
        diff = np.asarray(x, dtype=np.float64) - self._star
        r = float(np.linalg.norm(diff))
        if r == 0:
            return np.zeros(self.dimension)
        return self.G * diff / r

    def start(self):
        return self._x0.copy()

    @property
    def minimizer(self):
        return self._star.copy()

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self._x0 - self._star))


class LogisticRegression(Problem):
    """Mean logistic loss ``log(1 + exp(-y <a, x>))`` over rows of ``features``.

    Stochastic gradients use minibatches drawn from a fresh permutation each epoch.
    """

    kind = "logreg"

    def __init__(self, features, labels, batch_size: int = 16, name: str = "logreg"):
        self.A = features.tocsr() if sparse.issparse(features) else np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64)
        if set(np.unique(y)) - {-1.0, 1.0}:
            raise DomainError("logistic labels must be -1 or +1")
        if self.A.shape[0] != y.size or y.size == 0:
            raise DomainError("features and labels disagree in length")
        self.y = y
        self.batch_size = max(1, min(int(batch_size), y.size))
        self.dimension = self.A.shape[1]
        self.n = y.size
        self.name = name

    def _margins(self, x, rows=None):
        A = self.A if rows is None else self.A[rows]
        y = self.y if rows is None else self.y[rows]
        return np.asarray(A @ x).ravel() * y, A, y

    def loss(self, x):
        m, _, _ = self._margins(np.asarray(x, dtype=np.float64))
        return float(np.mean(np.logaddexp(0.0, -m)))

    def _grad(self, x, rows=None):
        m, A, y = self._margins(x, rows)
        coef = -y * _sigmoid(-m) / y.size
        return np.asarray(A.T @ coef).ravel()

    def full_gradient(self, x):
        return self._grad(np.asarray(x, dtype=np.float64))

    def error_rate(self, x):
        m, _, _ = self._margins(np.asarray(x, dtype=np.float64))
        return float(np.mean(m <= 0))

    def start(self):
        return np.zeros(self.dimension)

    @cached_property
    def minimizer(self):
        res = optimize.minimize(
            self.loss, self.start(), jac=self.full_gradient, method="L-BFGS-B",
            options={"maxiter": 10_000, "gtol": 1e-12, "ftol": 1e-15},
        )
        return res.x

    def gradient_stream(self, rng, T):
        produced = 0
        while produced < T:
            order = rng.permutation(self.n)
            for start in range(0, self.n - self.batch_size + 1, self.batch_size):
                if produced == T:
                    return
                rows = order[start:start + self.batch_size]
                yield lambda x, rows=rows: self._grad(x, rows)
                produced += 1


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def synthetic_logreg(n: int = 512, d: int = 10, seed: int = 0, label_noise: float = 0.1,
                     batch_size: int = 16) -> LogisticRegression:
    """Gaussian features, a planted separator and flipped labels so the data is not separable."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    theta = rng.standard_normal(d)
    theta /= np.linalg.norm(theta)
    y = np.where(A @ theta >= 0, 1.0, -1.0)
    flip = rng.random(n) < label_noise
    y[flip] = -y[flip]
    return LogisticRegression(A, y, batch_size=batch_size, name=f"synthetic_logreg(n={n},d={d},seed={seed})")


def libsvm_logreg(dataset, batch_size: int = 16) -> LogisticRegression:
    """Logistic regression on a parsed LIBSVM dataset; the larger label value maps to +1."""
    values = np.unique(dataset.labels)
    if values.size != 2:
        raise DomainError(f"expected a binary dataset, found {values.size} label values")
    y = np.where(dataset.labels == values[1], 1.0, -1.0)
    return LogisticRegression(dataset.features, y, batch_size=batch_size, name=dataset.name)


def schedule_digest(schedule: Schedule) -> str:
    return hashlib.sha256(schedule.values.tobytes()).hexdigest()[:16]


@dataclass
class RunReport:
    final_suboptimality: float
    regret_vs_u: float
    norm_log: GradientNormLog
    seed: int
    schedule_digest: str
    final_loss: float = math.nan
    final_error: float = math.nan
    extra_logs: dict[str, GradientNormLog] = field(default_factory=dict)
    final_point: np.ndarray | None = field(default=None, repr=False)
    iterates: np.ndarray | None = field(default=None, repr=False)

    def to_record(self, **extra) -> dict:
        rec = {
            "seed": self.seed,
            "schedule_digest": self.schedule_digest,
            "final_suboptimality": self.final_suboptimality,
            "final_loss": self.final_loss,
            "final_error": self.final_error,
            "regret_vs_u": self.regret_vs_u,
            "norm_kind": self.norm_log.kind,
            "norms": self.norm_log.norms.tolist(),
        }
        rec.update(extra)
        return rec

    def to_json(self, **extra) -> str:
        return json.dumps(self.to_record(**extra), sort_keys=True)


def _check_run_args(schedule: Schedule, scale: float, T: int):
    if T < 1:
        raise DomainError("T must be at least 1")
    if len(schedule) < T:
        raise DomainError(f"schedule has {len(schedule)} steps, need {T}")
    if not scale > 0:
        raise DomainError("scale must be positive")


def _finish(problem, x, xs, grads, rng_seed, schedule, norm_log, extra, keep_iterates):
    u = problem.minimizer
    final_loss = problem.loss(x)
    if not math.isfinite(final_loss):
        raise DivergenceError("non-finite final loss", len(xs))
    xs = np.asarray(xs)
    gs = np.asarray(grads)
    regret = float(np.sum(gs * (xs - u)))
    return RunReport(
        final_suboptimality=final_loss - problem.f_star,
        regret_vs_u=regret,
        norm_log=norm_log,
        seed=rng_seed,
        schedule_digest=schedule_digest(schedule),
        final_loss=final_loss,
        final_error=problem.error_rate(x),
        extra_logs=extra,
        final_point=x,
        iterates=xs if keep_iterates else None,
    )


def run_sgd(problem: Problem, schedule: Schedule, scale: float, T: int, seed: int = 0,
            keep_iterates: bool = False) -> RunReport:
    """SGD ``x_{t+1} = x_t - scale * eta_t * g_t``; returns a report on the last iterate ``x_T``.

    Gradients are observed at all ``T`` points (so the norm log has ``T``
    entries); ``T - 1`` updates are applied.
    """
    _check_run_args(schedule, scale, T)
    rng = np.random.default_rng(seed)
    eta = schedule.values
    x = problem.start()
    xs, grads, norms = [], [], []
    for t, oracle in enumerate(problem.gradient_stream(rng, T)):
        g = oracle(x)
        xs.append(x)
        grads.append(g)
        norms.append(float(np.linalg.norm(g)))
        if t < T - 1:
            with np.errstate(over="ignore", invalid="ignore"):
                x = x - scale * eta[t] * g
            if not np.all(np.isfinite(x)):
                raise DivergenceError("non-finite iterate", t + 2)
    log = GradientNormLog(np.arange(1, T + 1), np.array(norms), "l2")
    return _finish(problem, x, xs, grads, seed, schedule, log, {}, keep_iterates)


def run_adam_like(problem: Problem, schedule: Schedule, scale: float, T: int, seed: int = 0,
                  beta2: float = 0.95, keep_iterates: bool = False) -> RunReport:
    """Per-coordinate RMSProp-style steps ``x -= scale * eta_t * g / sqrt(v + eps)``.

    ``v`` is the bias-corrected exponential average of squared gradients; no
    first-moment momentum. Logs the Adam-weighted norm
    ``G_t = sum_i g_i**2 / sqrt(v_i + eps)`` as the primary log and ``||g_t||_1``
    under ``extra_logs["l1"]``.
    """
    _check_run_args(schedule, scale, T)
    if not 0 < beta2 < 1:
        raise DomainError("beta2 must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    eta = schedule.values
    x = problem.start()
    v = np.zeros(problem.dimension)
    xs, grads, weighted, l1 = [], [], [], []
    for t, oracle in enumerate(problem.gradient_stream(rng, T)):
        g = oracle(x)
        v = beta2 * v + (1.0 - beta2) * g * g
        denom = np.sqrt(v / (1.0 - beta2 ** (t + 1)) + ADAM_EPS)
        xs.append(x)
        grads.append(g)
        weighted.append(float(np.sum(g * g / denom)))
        l1.append(float(np.sum(np.abs(g))))
        if t < T - 1:
            with np.errstate(over="ignore", invalid="ignore"):
                x = x - scale * eta[t] * g / denom
            if not np.all(np.isfinite(x)):
                raise DivergenceError("non-finite iterate", t + 2)
    steps = np.arange(1, T + 1)
    log = GradientNormLog(steps, np.array(weighted), "adam_weighted")
    extra = {"l1": GradientNormLog(steps, np.array(l1), "l1")}
    return _finish(problem, x, xs, grads, seed, schedule, log, extra, keep_iterates)


@dataclass(frozen=True)
class Trajectory:
    base_points: np.ndarray  # z_1..z_{T+1}
    scheduled_points: np.ndarray  # x_1..x_T
    updates: np.ndarray  # Delta_t = z_{t+1} - z_t
    gradients: np.ndarray
    suboptimality: np.ndarray  # q_t = f(x_t) - f(u)


def _as_points(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    return z[:, None] if z.ndim == 1 else z


def scheduled_reduction(updates, w: WeightSequence, z1) -> tuple[np.ndarray, np.ndarray]:
    """Points ``x_{t+1} = x_t + (w_{t+1:T} / w_{1:T}) * Delta_t`` with ``x_1 = z_1``.

    ``updates`` holds ``Delta_1..Delta_{T-1}``, one row per step.
    """
    z1 = np.atleast_1d(np.asarray(z1, dtype=np.float64))
    deltas = np.asarray(updates, dtype=np.float64).reshape(-1, z1.size)
    T = len(w)
    if deltas.shape[0] != T - 1:
        raise DomainError(f"need {T - 1} updates for {T} weights, got {deltas.shape[0]}")
    xs = np.empty((T, z1.size))
    xs[0] = z1
    for t in range(T - 1):
        xs[t + 1] = xs[t] + (w.suffix[t + 1] / w.total) * deltas[t]
    return xs[-1].copy(), xs


def rearranged_points(z, w: WeightSequence) -> np.ndarray:
    """Direct form ``x_t = w_{t:T} (z_t / w_{1:T} + sum_{p<t} x_p (1/w_{p+1:T} - 1/w_{p:T}))``.

    Independent of the incremental recursion in ``scheduled_reduction``; both
    give the same points.
    """
    z = _as_points(z)
    s = w.suffix
    T = len(w)
    if z.shape[0] < T:
        raise DomainError("need at least T base points")
    xs = np.empty((T, z.shape[1]))
    acc = np.zeros(z.shape[1])
    for t in range(T):
        xs[t] = s[t] * (z[t] / s[0] + acc)
        if t < T - 1:
            acc = acc + xs[t] * (1.0 / s[t + 1] - 1.0 / s[t])
    return xs


def run_weighted_ogd(problem: Problem, w: WeightSequence, seed: int = 0) -> Trajectory:
    """Online gradient descent ``z_{t+1} = z_t - w_t g_t`` with gradients taken at the scheduled points.

    The scheduled points follow ``scheduled_reduction``, which makes them SGD
    with step sizes ``w_t w_{t+1:T} / w_{1:T}``.
    """
    T = len(w)
    rng = np.random.default_rng(seed)
    z = problem.start()
    x = z.copy()
    zs, xs, deltas, grads, qs = [z], [], [], [], []
    f_u = problem.f_star
    for t, oracle in enumerate(problem.gradient_stream(rng, T)):
        g = oracle(x)
        xs.append(x)
        grads.append(g)
        qs.append(problem.loss(x) - f_u)
        delta = -w.weights[t] * g
        z = z + delta
        zs.append(z)
        deltas.append(delta)
        x = x + (w.suffix[t + 1] / w.total) * delta
    return Trajectory(np.array(zs), np.array(xs), np.array(deltas), np.array(grads), np.array(qs))


def regret(traj: Trajectory, w: WeightSequence, u) -> tuple[float, float]:
    """``sum <w_t g_t, z_t - u>`` against ``||z_1-u||^2/2 - ||z_{T+1}-u||^2/2 + sum w_t^2 ||g_t||^2 / 2``.

    The two agree whenever the base points follow ``z_{t+1} = z_t - w_t g_t``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    z = _as_points(traj.base_points)
    g = _as_points(traj.gradients)
    wt = w.weights
    T = len(w)
    lhs = math.fsum(float(wt[t] * np.dot(g[t], z[t] - u)) for t in range(T))
    rhs = (
        0.5 * float(np.dot(z[0] - u, z[0] - u))
        - 0.5 * float(np.dot(z[T] - u, z[T] - u))
        + 0.5 * math.fsum(float(wt[t] ** 2 * np.dot(g[t], g[t])) for t in range(T))
    )
    return lhs, rhs
