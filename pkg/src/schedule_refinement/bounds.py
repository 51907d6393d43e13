"""Evaluators for the all-tail identity and last-iterate bounds.

The public evaluators run in O(T) via suffix sums. The ``naive_*`` functions
are direct O(T^2) transcriptions kept as test oracles for moderate ``T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .schedule_core import Schedule, WeightSequence, suffix_sums


@dataclass(frozen=True)
class BoundReport:
    distance_term: float
    variance_term: float
    tail_term: float
    total: float
    inputs_digest: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _positive(w, name: str = "weights") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d sequence")
    if np.any(~(w > 0)):
        raise DomainError(f"{name} must be strictly positive")
    return w


def tail_identity(q: Sequence[float], w: Sequence[float]) -> tuple[float, float]:
    """Both sides of the all-tail summation identity.

    ``q_T = (1/w_{1:T}) sum_t w_t q_t
            + sum_{k<T} (1/w_{k+1:T} - 1/w_{k:T}) sum_{t>=k} w_t (q_t - q_k)``

    holds for any real ``q`` and positive ``w``.
    """
    q = np.asarray(q, dtype=np.float64)
    w = _positive(w)
    if q.shape != w.shape:
        raise DomainError("q and w must have equal length")
    s = suffix_sums(w)
    # sum_{t>=k} w_t (q_t - q_k) = sum_{j>k} s_j (q_j - q_{j-1}); exact zero for constant q
    tails = suffix_sums(np.concatenate([[0.0], s[1:-1] * np.diff(q)]))[1:]
    avg = q[0] + tails[0] / s[0]
    if q.size == 1:
        return float(q[-1]), float(avg)
    k = slice(0, q.size - 1)
    # 1/s_{k+1} - 1/s_k without cancellation
    coef = w[k] / (s[1:-1] * s[:-2])
    return float(q[-1]), float(avg + math.fsum(coef * tails[:-1]))


def naive_tail_identity(q: Sequence[float], w: Sequence[float]) -> float:
    """Right side of the all-tail identity by unrolling the averages ``S_k``.

    ``S_k`` is the w-weighted mean of the last ``k`` values of ``q``; the
    recursion ``S_k = S_{k+1} + w_{T-k}/w_{T-k+1:T} (S_{k+1} - q_{T-k})``
    telescopes from ``S_T`` (the full average) down to ``S_1 = q_T``.
    """
    q = [float(v) for v in q]
    w = [float(v) for v in _positive(w)]
    T = len(q)

    def S(k: int) -> float:
        tail_w = w[T - k:]
        return math.fsum(a * b for a, b in zip(tail_w, q[T - k:])) / math.fsum(tail_w)

    total = S(T)
    for k in range(1, T):
        total += w[T - k - 1] / math.fsum(w[T - k:]) * (S(k + 1) - q[T - k - 1])
    return total


def tail_upper_bound(q: Sequence[float], eta: Sequence[float]) -> tuple[float, float]:
    """Both sides of the classical bound for non-negative ``q`` and non-increasing ``eta``.

    ``eta_T q_T <= (1/T) sum_t eta_t q_t
                   + sum_{k<T} 1/((T-k)(T-k+1)) sum_{t>k} eta_t (q_t - q_k)``

    The coefficient is indexed by the tail length ``T - k``; with ``1/(k(k+1))``
    the inequality fails on ordinary inputs.
    """
    q = np.asarray(q, dtype=np.float64)
    eta = _positive(eta, "eta")
    if q.shape != eta.shape:
        raise DomainError("q and eta must have equal length")
    if np.any(q < 0):
        raise DomainError("q must be non-negative")
    if np.any(np.diff(eta) > 0):
        i = int(np.argmax(np.diff(eta) > 0)) + 2
        raise DomainError(f"eta must be non-increasing (increases at step {i})")
    T = q.size
    lhs = float(eta[-1] * q[-1])
    s = suffix_sums(eta)
    sq = suffix_sums(eta * q)
    avg = sq[0] / T
    if T == 1:
        return lhs, float(avg)
    m = T - np.arange(1, T, dtype=np.float64)
    tails = sq[1:-1] - q[:-1] * s[1:-1]
    return lhs, float(avg + math.fsum(tails / (m * (m + 1))))


def tail_looseness(q: Sequence[float], eta: Sequence[float]) -> float:
    """Gap between the classical bound and the exact identity scaled by ``eta_T``.

    Non-negative whenever the classical bound applies.
    """
    _, exact = tail_identity(q, eta)
    _, classic = tail_upper_bound(q, eta)
    return classic - float(np.asarray(eta, dtype=np.float64)[-1]) * exact


def sgd_weighted_bound(w: WeightSequence | Sequence[float], gnorms: Sequence[float], D: float) -> float:
    """``(D**2 + sum w_t**2 ||g_t||**2) / (2 w_{1:T})``."""
    weights = w.weights if isinstance(w, WeightSequence) else np.asarray(w, dtype=np.float64)
    g = np.asarray(gnorms, dtype=np.float64)
    if weights.shape != g.shape:
        raise DomainError("weights and gradient norms must have equal length")
    if not D > 0:
        raise DomainError("D must be positive")
    return (D * D + math.fsum(weights * weights * g * g)) / (2.0 * math.fsum(weights))


def _eta_and_norms(eta, gnorms) -> tuple[np.ndarray, np.ndarray]:
    values = eta.values if isinstance(eta, Schedule) else np.asarray(eta, dtype=np.float64)
    g = np.asarray(gnorms, dtype=np.float64)
    if g.ndim == 0:
        g = np.full(values.shape, float(g))
    if values.shape != g.shape or values.ndim != 1 or values.size == 0:
        raise DomainError("schedule and gradient norms must be non-empty and of equal length")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise DomainError("schedule values must be finite and non-negative")
    return values, g


def anyeta_bound(eta: Schedule | Sequence[float], gnorms, D: float) -> BoundReport:
    """Last-iterate bound for SGD run with step sizes ``eta``.

    ``gnorms`` is either one norm per step or a single Lipschitz constant. With
    ``A_k = sum_{t>=k} eta_t`` and ``B_k = sum_{t>=k} eta_t**2 ||g_t||**2`` the
    terms are ``D**2/(2 A_1)``, ``B_1/(2 A_1)`` and
    ``(1/2) sum_{k<T} eta_k / A_{k+1} * B_k / A_k``.
    """
    if not D > 0:
        raise DomainError("D must be positive")
    values, g = _eta_and_norms(eta, gnorms)
    A = suffix_sums(values)
    B = suffix_sums(values * values * g * g)
    T = values.size
    if np.any(A[1:T] <= 0) or A[0] <= 0:
        k = int(np.argmax(A[1:T] <= 0)) + 2 if T > 1 else 1
        raise DomainError(f"zero suffix sum of the schedule from step {k}: the tail term is undefined")
    distance = D * D / (2.0 * A[0])
    variance = B[0] / (2.0 * A[0])
    tail = 0.5 * math.fsum(values[:-1] / A[1:T] * (B[:T - 1] / A[:T - 1]))
    total = distance + variance + tail
    digest = f"T={T} D={D!r} sum_eta={float(A[0])!r} sum_eta2g2={float(B[0])!r}"
    return BoundReport(float(distance), float(variance), float(tail), float(total), digest)


def naive_anyeta_tail(eta: Sequence[float], gnorms, D: float = 1.0) -> float:
    """Tail term of ``anyeta_bound`` by direct double summation."""
    values, g = _eta_and_norms(eta, gnorms)
    values = [float(v) for v in values]
    sq = [float(v * v * x * x) for v, x in zip(values, g)]
    T = len(values)
    terms = []
    for k in range(T - 1):
        after = math.fsum(values[k + 1:])
        here = math.fsum(values[k:])
        terms.append(values[k] / after * (math.fsum(sq[k:]) / here))
    return 0.5 * math.fsum(terms)


def harmonic(n: int) -> float:
    """``H(n) = 1 + 1/2 + ... + 1/n``; ``H(0) = 0``."""
    return math.fsum(1.0 / t for t in range(1, n + 1))


def linear_decay_constant(T: int) -> float:
    """Stated last-iterate constant ``2 + (H(T-1) - 2/3)/(T+1)`` for the offset linear schedule."""
    if T < 2:
        raise DomainError("T must be at least 2")
    return 2.0 + (harmonic(T - 1) - 2.0 / 3.0) / (T + 1)


def linear_decay_exact_constant(T: int) -> float:
    """Exact value of the key bound for ``eta_t ∝ 1 - t/(T+1)`` with constant norms, over ``DG/sqrt(T)``.

    Summing the three terms in closed form gives ``2 + (H(T-1) - 3/2)/(T+1)``,
    a little below ``linear_decay_constant(T)``.
    """
    if T < 2:
        raise DomainError("T must be at least 2")
    return 2.0 + (harmonic(T - 1) - 1.5) / (T + 1)


def offset_linear_schedule(T: int, D: float = 1.0, G: float = 1.0) -> np.ndarray:
    """``D/(G sqrt(T)) * (1 - t/(T+1))`` for ``t = 1..T`` (never zero at ``t = T``)."""
    t = np.arange(1, T + 1, dtype=np.float64)
    return D / (G * math.sqrt(T)) * ((T + 1 - t) / (T + 1))
