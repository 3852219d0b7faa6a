"""Closed-form failure exponents and related comparisons.

The failure exponent of a strategy is the limit of
``ln P(miss deadline t) / t**alpha`` as ``t`` grows. For a plan that needs
``K`` of ``p`` tasks in the worst case it is bounded by

    epsilon(s) = -(p - K + 1) * mu**alpha / tau(s)**alpha

with ``tau(s) = 2*C*s*log(2s)``; this is exact for the uncoded and
replication strategies. Probabilities use natural logs; ``tau`` uses the
cost model's log base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .planner import ProblemSpec, coded_piece_lengths, plan_replication
from .straggler import TimeModel, task_shift

_RANGE_RTOL = 1e-12


@dataclass(frozen=True)
class ExponentReport:
    epsilon: float
    worst_k: float
    s: float
    is_upper_bound: bool


def _check_range(spec: ProblemSpec, s: float) -> None:
    lo = spec.uncoded_len
    if s < lo * (1 - _RANGE_RTOL) or s > spec.min_len * (1 + _RANGE_RTOL):
        raise InvalidArgumentError(
            f"s={s:.6g} outside [sqrt(n1*n2/p), min(n1, n2)] = [{lo:.6g}, {spec.min_len}]"
        )


def _redundancy(spec: ProblemSpec, s: float) -> float:
    # p - K + 1 with K = p - p*s/n2 + n1/s
    return spec.p * s / spec.n2 - spec.n1 / s + 1.0


def epsilon(spec: ProblemSpec, s: float, model: TimeModel = TimeModel()) -> ExponentReport:
    """Exponent bound for the coded plan with piece length ``s``.

    At ``s = sqrt(n1*n2/p)`` this is the exact uncoded exponent.
    """
    _check_range(spec, s)
    coeff = _redundancy(spec, s)
    eps = -coeff * model.mu ** model.alpha / task_shift(s, model) ** model.alpha
    coded = s > spec.uncoded_len * (1 + _RANGE_RTOL)
    return ExponentReport(float(eps), spec.p - coeff + 1.0, s, coded)


def epsilon_replication(spec: ProblemSpec, r: int, model: TimeModel = TimeModel()) -> ExponentReport:
    """Exact exponent of the (p, r) replication strategy (K = p - r + 1)."""
    plan = plan_replication(spec, r)
    s = plan.piece_len
    eps = -r * model.mu ** model.alpha / task_shift(s, model) ** model.alpha
    return ExponentReport(float(eps), plan.worst_k, s, False)


class CodingGain(NamedTuple):
    ratio: float
    lower_bound: float


def theorem5_ratio(spec: ProblemSpec, model: TimeModel = TimeModel()) -> CodingGain:
    """Exponent gain of coding at s = 2*sqrt(n1*n2/p) over the uncoded split,
    with the closed-form lower bound 3*sqrt(p*n1/n2) / (2 * 4**alpha)."""
    s0 = spec.uncoded_len
    coded = epsilon(spec, 2 * s0, model).epsilon
    uncoded = epsilon(spec, s0, model).epsilon
    bound = 3 * math.sqrt(spec.p * spec.n1 / spec.n2) / (2 * 4 ** model.alpha)
    return CodingGain(abs(coded) / abs(uncoded), bound)


def heuristic_E(spec: ProblemSpec, s: float, model: TimeModel = TimeModel()) -> float:
    """ln|epsilon(s)|; larger means a faster-decaying failure tail."""
    _check_range(spec, s)
    coeff = _redundancy(spec, s)
    inner = 2 * s * model.cost.log(2 * s)
    if coeff <= 0 or inner <= 0:
        raise InvalidArgumentError(f"log argument is not positive at s={s}")
    a = model.alpha
    return float(math.log(coeff) - a * math.log(inner) + a * math.log(model.mu / model.cost.c))


def heuristic_E_prime(spec: ProblemSpec, s: float, model: TimeModel = TimeModel()) -> float:
    """d/ds of :func:`heuristic_E`.

    The last term carries the natural log ln(2s) whatever the cost log
    base: d/ds ln(log_b(2s)) = 1 / (s ln(2s)).
    """
    _check_range(spec, s)
    coeff = _redundancy(spec, s)
    if coeff <= 0:
        raise InvalidArgumentError(f"log argument is not positive at s={s}")
    a = model.alpha
    return float(
        (spec.p / spec.n2 + spec.n1 / s ** 2) / coeff - a / s - a / (s * math.log(2 * s))
    )


def alpha_threshold(spec: ProblemSpec) -> float:
    """Largest Weibull shape for which ``heuristic_E`` still increases at
    the uncoded point, i.e. some coded piece length beats the uncoded split.

    Equal to 2*sqrt(p*n1/n2) / (1 + 1/ln(2*sqrt(n1*n2/p))).
    """
    s0 = spec.uncoded_len
    return 2 * math.sqrt(spec.p * spec.n1 / spec.n2) / (1 + 1 / math.log(2 * s0))


def best_s(spec: ProblemSpec, model: TimeModel = TimeModel()) -> int:
    """Feasible coded piece length with the largest |epsilon|; ties go to the smaller s."""
    candidates = coded_piece_lengths(spec)
    if not candidates:
        raise InvalidArgumentError(
            f"no coded piece length for {spec}: need sqrt(n1*n2/p) < s <= min(n1, n2), "
            "s | n1, s | n2, n2 | p*s and p*s/n2 >= n1/s"
        )
    best, best_mag = None, -1.0
    for s in candidates:
        mag = abs(epsilon(spec, s, model).epsilon)
        if mag > best_mag:
            best, best_mag = s, mag
    return best


class ComplexityTerms(NamedTuple):
    encode: float
    decode: float
    add: float
    per_processor: float

    @property
    def ratio(self) -> float:
        return (self.encode + self.decode + self.add) / self.per_processor


def complexity_terms(spec: ProblemSpec, s: float, model: TimeModel = TimeModel()) -> ComplexityTerms:
    """Operation counts for encoding, decoding and shift-adds next to the
    per-processor FFT cost, assuming O(m log^2 m) multipoint evaluation and
    interpolation."""
    log = model.cost.log
    n = spec.p * s / spec.n2
    k = spec.n1 / s
    blocks = spec.n1 * spec.n2 / s ** 2
    enc = s * n * log(n) ** 2
    dec = 2 * s * blocks * log(k) ** 2
    add = 2 * s * blocks
    return ComplexityTerms(float(enc), float(dec), float(add), float(2 * model.cost.c * s * log(2 * s)))


def complexity_ratio(spec: ProblemSpec, s: float, model: TimeModel = TimeModel()) -> float:
    return complexity_terms(spec, s, model).ratio


def fit_tail_slope(
    points: Sequence,
    alpha: float = 1.0,
    tail_fraction: float = 0.5,
    min_survival: float = 0.0,
) -> float:
    """Least-squares slope of ln(survival) against deadline**alpha.

    ``points`` holds ``(deadline, survival)`` pairs or objects with those
    attributes. Only points with ``min_survival <= survival < 1`` and
    survival > 0 are usable, and of those only the largest-deadline
    ``tail_fraction`` enter the fit.
    """
    pairs = []
    for pt in points:
        if hasattr(pt, "survival"):
            pairs.append((pt.deadline, pt.survival))
        else:
            pairs.append((pt[0], pt[1]))
    usable = sorted((t, sv) for t, sv in pairs if 0 < sv < 1 and sv >= min_survival)
    if len(usable) < 5:
        raise InvalidArgumentError(f"need at least 5 usable tail points, got {len(usable)}")
    take = max(2, int(math.ceil(len(usable) * tail_fraction)))
    tail = np.array(usable[-take:])
    slope, _ = np.polyfit(tail[:, 0] ** alpha, np.log(tail[:, 1]), 1)
    return float(slope)
