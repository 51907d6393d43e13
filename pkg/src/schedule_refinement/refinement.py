"""Refined schedules from observed gradient norms.

A prior run's gradient-norm log is median-smoothed, turned into inverse-norm
weights and pushed through ``weights_to_schedule``. The closed-form optimal
weights for the SGD bound and its per-coordinate variant live here too.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateNormsError, DomainError
from .schedule_core import Schedule, WeightSequence, weights_to_schedule

NormKind = Literal["l2", "l1", "adam_weighted"]
Weighting = Literal["inv_sq_l2", "inv_l1", "inv_adam_weighted"]

NORM_KINDS = ("l2", "l1", "adam_weighted")
WEIGHTINGS = ("inv_sq_l2", "inv_l1", "inv_adam_weighted")
DEFAULT_WEIGHTING = {"l2": "inv_sq_l2", "l1": "inv_l1", "adam_weighted": "inv_adam_weighted"}

DEGENERATE_ADVICE = (
    "smoothed gradient norms reach zero, which would drive the refined schedule "
    "to blow up near the end of training; use a linear decay schedule instead "
    "(or opt in to --zero-policy clamp)"
)


class ClampedNormsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GradientNormLog:
    steps: np.ndarray
    norms: np.ndarray
    kind: NormKind = "l2"

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64)
        norms = np.asarray(self.norms, dtype=np.float64)
        if steps.shape != norms.shape or steps.ndim != 1:
            raise DomainError("steps and norms must be 1-d and of equal length")
        if steps.size and (steps[0] < 1 or np.any(np.diff(steps) <= 0)):
            raise DomainError("steps must be positive and strictly increasing")
        if not np.all(np.isfinite(norms)) or np.any(norms < 0):
            raise DomainError("norms must be finite and non-negative")
        if self.kind not in NORM_KINDS:
            raise DomainError(f"unknown norm kind {self.kind!r}")
        steps.setflags(write=False)
        norms.setflags(write=False)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "norms", norms)

    @classmethod
    def from_norms(cls, norms: Sequence[float], kind: NormKind = "l2") -> GradientNormLog:
        return cls(np.arange(1, len(norms) + 1), np.asarray(norms, dtype=np.float64), kind)

    def __len__(self) -> int:
        return self.norms.size


@dataclass(frozen=True)
class RefinementConfig:
    tau: float = 0.1
    weighting: Weighting = "inv_sq_l2"
    zero_policy: Literal["error", "clamp"] = "error"
    epsilon_fraction: float = 1e-3

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise DomainError("tau must lie in (0, 1]")
        if self.weighting not in WEIGHTINGS:
            raise DomainError(f"unknown weighting {self.weighting!r}")
        if self.zero_policy not in ("error", "clamp"):
            raise DomainError(f"unknown zero policy {self.zero_policy!r}")
        if self.zero_policy == "clamp" and not self.epsilon_fraction > 0:
            raise DomainError("epsilon_fraction must be positive when clamping")


@dataclass(frozen=True)
class OptimalWeightsResult:
    weights: WeightSequence
    lam: float
    bound_value: float


def median_filter(values: Sequence[float], width: int) -> np.ndarray:
    """Centered running median, edge-padded on the left and mirrored on the right.

    The right padding reflects without repeating the last element, e.g.
    ``[a, b, c]`` padded by two becomes ``a a | a b c | b a``.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise DomainError("median filter of an empty sequence")
    if width < 1 or width % 2 == 0:
        raise DomainError("filter width must be a positive odd integer")
    if width > 2 * x.size + 1:
        raise DomainError("filter width exceeds 2 * len + 1")
    half = width // 2
    if half == 0:
        return x.copy()
    left = np.full(half, x[0])
    if x.size == 1:
        right = np.full(half, x[0])
    else:
        # mirror index sequence n-2, n-3, ..., 0, 1, ... bounces with period 2(n-1)
        period = 2 * (x.size - 1)
        k = (np.arange(1, half + 1) % period)
        idx = np.where(k < x.size, x.size - 1 - k, k - (x.size - 1))
        right = x[idx]
    padded = np.concatenate([left, x, right])
    windows = np.lib.stride_tricks.sliding_window_view(padded, width)
    # odd width: the median is the middle order statistic, an actual element
    return np.partition(windows, half, axis=1)[:, half]


def filter_width(tau: float, T: int) -> int:
    width = max(1, math.floor(tau * T + 0.5))
    return width + 1 if width % 2 == 0 else width


def _weights_from_norms(smoothed: np.ndarray, weighting: Weighting) -> np.ndarray:
    if weighting == "inv_sq_l2":
        return 1.0 / smoothed**2
    return 1.0 / smoothed


def refine(log: GradientNormLog | Sequence[float], config: RefinementConfig | None = None) -> Schedule:
    """Refined schedule from a gradient-norm log, normalized to peak at 1.

    Under ``zero_policy="clamp"`` smoothed zeros are lifted to
    ``epsilon_fraction * max(smoothed)`` and the returned schedule carries a
    note saying so.
    """
    if config is None:
        config = RefinementConfig()
    if not isinstance(log, GradientNormLog):
        log = GradientNormLog.from_norms(log)
    T = len(log)
    if T == 0:
        raise DomainError("empty gradient-norm log")
    smoothed = median_filter(log.norms, filter_width(config.tau, T))
    notes: tuple[str, ...] = ()
    zeros = smoothed == 0
    if np.any(zeros):
        first = int(log.steps[np.argmax(zeros)])
        if config.zero_policy == "error":
            raise DegenerateNormsError(f"{DEGENERATE_ADVICE} (first zero at step {first})")
        floor = config.epsilon_fraction * float(smoothed.max())
        if floor <= 0:
            raise DegenerateNormsError(f"{DEGENERATE_ADVICE}; all smoothed norms are zero")
        smoothed = np.where(zeros, floor, smoothed)
        notes = (f"clamped {int(zeros.sum())} zero norm(s) to {floor!r}",)
        warnings.warn(notes[0], ClampedNormsWarning, stacklevel=2)
    if T == 1:
        # a single step has an empty suffix; nothing to normalize
        return Schedule(np.zeros(1), notes)
    w = _weights_from_norms(smoothed, config.weighting)
    schedule = weights_to_schedule(WeightSequence(w), normalize=True)
    return Schedule(schedule.values, notes)


def _inverse_energy_weights(energy: np.ndarray, scale: float) -> tuple[np.ndarray, float]:
    inv = 1.0 / energy
    lam = scale / math.sqrt(math.fsum(inv))
    return inv * lam, lam


def weighted_objective(w, gnorms, D: float) -> float:
    """``(D**2 + sum w_t**2 ||g_t||**2) / (2 w_{1:T})``."""
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(gnorms, dtype=np.float64)
    return (D * D + math.fsum(w * w * g * g)) / (2.0 * math.fsum(w))


def optimal_weights(gnorms: Sequence[float], D: float = 1.0) -> OptimalWeightsResult:
    """Weights ``w_t = lam / ||g_t||**2`` with ``lam = D / sqrt(sum ||g_p||**-2)``."""
    g = np.asarray(gnorms, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise DomainError("need a non-empty sequence of gradient norms")
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise DomainError("gradient norms must be positive (a zero norm gives an infinite weight)")
    if not D > 0:
        raise DomainError("D must be positive")
    w, lam = _inverse_energy_weights(g * g, D)
    return OptimalWeightsResult(WeightSequence(w), lam, weighted_objective(w, g, D))


def per_coordinate_weights(lr, grads, R: float) -> WeightSequence:
    """Optimal weights for per-coordinate learning rates ``lr[t, i]``.

    With ``e_t = sum_i lr[t, i] * grads[t, i]**2`` the weights are
    ``R / sqrt(sum_t 1/e_t) / e_t``.
    """
    lr = np.asarray(lr, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if lr.ndim == 1:
        lr = lr[:, None]
    if grads.ndim == 1:
        grads = grads[:, None]
    if lr.shape != grads.shape:
        raise DomainError("learning-rate and gradient tables must have the same shape")
    if np.any(lr <= 0):
        raise DomainError("per-coordinate learning rates must be positive")
    if not R > 0:
        raise DomainError("R must be positive")
    energy = np.sum(lr * grads**2, axis=1)
    if np.any(energy <= 0):
        bad = int(np.argmax(energy <= 0)) + 1
        raise DomainError(f"all-zero gradient at step {bad}: inverse energy undefined")
    w, _ = _inverse_energy_weights(energy, R)
    return WeightSequence(w)
