"""Weight sequences, schedules, and the conversions between them.

A positive weight sequence ``w_1..w_T`` induces the step-size schedule

    eta_t = w_t * w_{t+1:T} / w_{1:T}

where ``w_{a:b}`` is the sum ``w_a + ... + w_b`` (zero when ``a > b``), so the
final multiplier is always zero. ``schedule_to_weights`` goes the other way:
every non-negative schedule of length ``T-1`` has such a representation.

Schedules are 1-indexed over ``t = 1..T``. All functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .errors import DomainError

SCHEDULE_KINDS = ("linear", "cosine", "stepwise", "inv_t", "inv_sqrt", "poly", "constant")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def suffix_sums(x) -> np.ndarray:
    """Return ``s`` of length ``len(x) + 1`` with ``s[i] = x[i] + s[i+1]`` and ``s[-1] = 0``.

    The sums are accumulated right to left, one addition per element, so the
    recurrence holds exactly in floating point.
    """
    x = np.asarray(x, dtype=np.float64)
    s = np.zeros(x.size + 1)
    s[:-1] = np.cumsum(x[::-1])[::-1]
    return s


@dataclass(frozen=True)
class WeightSequence:
    """Weights ``w_1..w_T`` together with their suffix sums.

    ``suffix[t-1]`` holds ``w_{t:T}`` for ``t = 1..T+1``; ``suffix[T]`` is 0.
    Zero weights are rejected unless ``allow_zero`` is set, which only the
    schedule-to-weights construction needs (a zero step maps to a zero weight).
    """

    weights: np.ndarray
    allow_zero: bool = field(default=False, repr=False, compare=False)
    suffix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size < 1:
            raise DomainError("weight sequence must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        if self.allow_zero:
            if np.any(w < 0):
                raise DomainError("weights must be non-negative")
            if not np.any(w > 0):
                raise DomainError("at least one weight must be positive")
        elif np.any(w <= 0):
            raise DomainError("weights must be strictly positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "suffix", _frozen(suffix_sums(w)))

    @property
    def total(self) -> float:
        return float(self.suffix[0])

    def __len__(self) -> int:
        return self.weights.size

    def scaled(self, c: float) -> WeightSequence:
        return WeightSequence(c * self.weights, allow_zero=self.allow_zero)


@dataclass(frozen=True)
class Schedule:
    """Non-negative learning-rate multipliers ``eta_1..eta_T``.

    ``notes`` carries warnings attached by whatever produced the schedule
    (for instance clamped gradient norms during refinement).
    """

    values: np.ndarray
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size < 1:
            raise DomainError("schedule must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DomainError("schedule values must be finite and non-negative")
        object.__setattr__(self, "values", v)

    @property
    def horizon(self) -> int:
        return self.values.size

    @property
    def normalized(self) -> bool:
        return float(self.values.max()) == 1.0

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, t):
        return self.values[t]

    def normalize(self) -> Schedule:
        peak = float(self.values.max())
        if peak <= 0:
            raise DomainError("cannot normalize an all-zero schedule")
        return Schedule(self.values / peak, self.notes)


@dataclass(frozen=True)
class PolyFit:
    warmup_fraction: float
    power: float
    rms_residual: float


def weights_to_schedule(w: WeightSequence | Sequence[float], normalize: bool = False) -> Schedule:
    """Schedule ``eta_t = w_t * w_{t+1:T} / w_{1:T}``; optionally scaled to peak at 1."""
    if not isinstance(w, WeightSequence):
        w = WeightSequence(w)
    eta = w.weights * w.suffix[1:] / w.suffix[0]
    if normalize:
        if len(w) == 1:
            raise DomainError("degenerate horizon: T = 1 gives an all-zero schedule")
        eta = eta / eta.max()
    return Schedule(eta)


def min_precision_bits(T: int) -> int:
    return 4 * T + 64


def represent_weights(eta: Sequence[float], precision_bits: int | None = None):
    """Exact-arithmetic weights whose induced schedule is ``eta`` (rescaled to peak 1).

    ``eta`` has length ``T-1``; the result has length ``T``. Returns the
    weights and suffix sums ``s_1..s_T`` as lists of ``mpmath.mpf`` at the
    working precision, plus the rescaling factor applied to ``eta``.

    With ``s_1 = 4**T`` each weight is the smaller root of
    ``w**2 - s_t*w + s_1*eta_t = 0`` and ``s_{t+1} = s_t - w_t``. Keeping
    ``s_t >= s_1 / 2**(t-1)`` guarantees real, non-negative roots, but the
    subtraction loses about two bits per step, hence the precision floor.
    """
    eta = [float(e) for e in eta]
    T = len(eta) + 1
    if T < 2:
        raise DomainError("need at least one schedule value (T >= 2)")
    if any(not math.isfinite(e) or e < 0 for e in eta):
        raise DomainError("schedule values must be finite and non-negative")
    if precision_bits is None:
        precision_bits = 4 * T + 128
    if precision_bits < min_precision_bits(T):
        raise DomainError(
            f"insufficient precision for horizon T={T}: "
            f"need at least {min_precision_bits(T)} bits, got {precision_bits}"
        )
    peak = max(eta)
    scale = 1.0 / peak if peak > 0 else 1.0
    with mpmath.workprec(precision_bits):
        s1 = mpmath.mpf(2) ** (2 * T)
        weights, suffix = [], [s1]
        s = s1
        for e in eta:
            target = s1 * mpmath.mpf(e) * scale
            disc = s * s - 4 * target
            # stable form of (s - sqrt(disc)) / 2
            w = 2 * target / (s + mpmath.sqrt(disc))
            weights.append(w)
            s = s - w
            suffix.append(s)
        weights.append(s)
    return weights, suffix, scale


def schedule_to_weights(eta: Schedule | Sequence[float], precision_bits: int | None = None) -> WeightSequence:
    """Weights of length ``T`` representing a length ``T-1`` schedule.

    The schedule is first rescaled so its maximum is 1; the weights reproduce
    that rescaled schedule. Default precision is ``4T + 128`` bits.
    """
    values = eta.values if isinstance(eta, Schedule) else eta
    weights, _, _ = represent_weights(values, precision_bits)
    out = np.array([float(w) for w in weights])
    if not np.all(np.isfinite(out)):
        raise DomainError(f"horizon T={len(out)} too long: weights overflow float64")
    return WeightSequence(out, allow_zero=True)


def _milestone_steps(fractions: Sequence[float], T: int) -> list[int]:
    return [int(round(f * T)) for f in fractions]


def make_schedule(
    kind: str,
    T: int,
    *,
    beta: float | None = None,
    power: float | None = None,
    milestones: Sequence[float] = (0.3, 0.6, 0.9),
    factor: float = 0.1,
) -> Schedule:
    """Build one of the standard schedules of length ``T``.

    ``linear`` is ``1 - t/T`` and ``poly`` is ``(1 - t/T)**power``, both ending
    at exactly zero. The others are evaluated at ``t - 1`` so they start at 1:
    ``cosine`` is ``(1 + cos(pi*(t-1)/T))/2``, ``inv_t`` is
    ``beta/(beta + t - 1)``, ``inv_sqrt`` is ``sqrt(beta/(beta + t - 1))`` and
    ``stepwise`` multiplies by ``factor`` at each milestone fraction of ``T``.
    """
    if T < 1:
        raise DomainError("T must be at least 1")
    t = np.arange(1, T + 1, dtype=np.float64)
    if kind == "linear":
        values = (T - t) / T
    elif kind == "poly":
        if power is None or not power > 0:
            raise DomainError("poly schedule needs a power p > 0")
        values = ((T - t) / T) ** float(power)
    elif kind == "cosine":
        values = 0.5 * (1.0 + np.cos(np.pi * (t - 1) / T))
    elif kind == "stepwise":
        if not factor > 0:
            raise DomainError("stepwise decay factor must be positive")
        drops = _milestone_steps(milestones, T)
        passed = np.zeros(T)
        for m in drops:
            passed += (t - 1) >= m
        values = float(factor) ** passed
    elif kind in ("inv_t", "inv_sqrt"):
        if beta is None or not beta > 0:
            raise DomainError(f"{kind} schedule needs an offset beta > 0")
        values = beta / (beta + t - 1)
        if kind == "inv_sqrt":
            values = np.sqrt(beta) / np.sqrt(beta + t - 1)
    elif kind == "constant":
        values = np.ones(T)
    else:
        raise DomainError(f"unknown schedule kind {kind!r}; expected one of {', '.join(SCHEDULE_KINDS)}")
    return Schedule(values)


def warmup_steps(warmup_fraction: float, T: int) -> int:
    if warmup_fraction == 0:
        return 0
    # round first: 0.07 * 100 is 7.000000000000001 in binary floating point
    return max(1, math.ceil(round(warmup_fraction * T, 9)))


def apply_warmup(s: Schedule, warmup_fraction: float) -> Schedule:
    """Multiply the first ``W = ceil(fraction * T)`` steps by the ramp ``t / W``."""
    if not 0 <= warmup_fraction < 1:
        raise DomainError("warmup fraction must lie in [0, 1)")
    W = warmup_steps(warmup_fraction, s.horizon)
    if W == 0:
        return s
    t = np.arange(1, s.horizon + 1, dtype=np.float64)
    ramp = np.minimum(t / W, 1.0)
    return Schedule(ramp * s.values, s.notes)


def golden_section(f, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200) -> float:
    """Minimize a unimodal ``f`` on ``[lo, hi]``."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


_FIT_WARMUPS = np.round(np.arange(0, 51) * 0.01, 2)
_FIT_POWERS = np.round(np.arange(1, 51) * 0.1, 1)


def _warmup_poly(T: int, warmup_fraction: float, power: float) -> np.ndarray:
    cand = apply_warmup(make_schedule("poly", T, power=power), warmup_fraction).values
    return cand / cand.max()


def fit_poly(s: Schedule) -> PolyFit:
    """Fit a warmed-up polynomial decay ``(1 - t/T)**p`` to a schedule.

    Both the target and each candidate are scaled to peak at 1. The search is
    a grid over warmup fractions ``0, 0.01, ..., 0.5`` and powers
    ``0.1, ..., 5.0`` followed by golden-section refinement of the power in
    the neighbouring grid interval. Ties go to the smaller warmup, then the
    smaller power.
    """
    T = s.horizon
    if T < 10:
        raise DomainError("fit_poly needs at least 10 steps")
    peak = float(s.values.max())
    if peak <= 0:
        raise DomainError("cannot fit an all-zero schedule")
    target = s.values / peak
    t = np.arange(1, T + 1, dtype=np.float64)
    base = (T - t) / T
    decays = base[None, :] ** _FIT_POWERS[:, None]

    best = (math.inf, 0.0, 0.0)
    for rho in _FIT_WARMUPS:
        W = warmup_steps(float(rho), T)
        ramp = np.minimum(t / W, 1.0) if W else np.ones(T)
        cands = ramp[None, :] * decays
        cands /= cands.max(axis=1, keepdims=True)
        rms = np.sqrt(np.mean((cands - target) ** 2, axis=1))
        i = int(np.argmin(rms))  # argmin keeps the first (smallest p) on ties
        if rms[i] < best[0]:
            best = (float(rms[i]), float(rho), float(_FIT_POWERS[i]))

    _, rho, p = best

    def loss(power: float) -> float:
        return float(np.sqrt(np.mean((_warmup_poly(T, rho, power) - target) ** 2)))

    p_ref = golden_section(loss, max(p - 0.1, 1e-3), p + 0.1, tol=1e-7)
    rms_ref = loss(p_ref)
    if rms_ref < best[0]:
        p, rms = p_ref, rms_ref
    else:
        rms = best[0]
    return PolyFit(warmup_fraction=rho, power=p, rms_residual=rms)
