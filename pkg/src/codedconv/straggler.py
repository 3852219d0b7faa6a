"""Shifted-Weibull task times and Monte Carlo deadline-failure estimates.

A task convolving two length-``s`` pieces takes at least
``tau(s) = 2*C*s*log(2s)``; the excess over ``tau`` is Weibull:

    F_s(t) = 1 - exp(-(mu * (t/tau - 1))**alpha),   t >= tau

``alpha = 1`` is the shifted exponential.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .conv import CostModel
from .errors import InvalidArgumentError
from .planner import ExecutionPlan

BLOCK_TRIALS = 8192


@dataclass(frozen=True)
class TimeModel:
    mu: float = 1.0
    alpha: float = 1.0
    cost: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise InvalidArgumentError(f"mu must be positive, got {self.mu!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidArgumentError(f"alpha must be positive, got {self.alpha!r}")


def task_shift(s, model: TimeModel = TimeModel()) -> float:
    """Deterministic minimum task time 2*C*s*log(2s)."""
    if s < 1:
        raise InvalidArgumentError(f"s must be >= 1, got {s!r}")
    return float(2.0 * model.cost.c * s * model.cost.log(2.0 * s))


def cdf(s, t, model: TimeModel = TimeModel()):
    """P(task time <= t). Vectorised over ``t``."""
    tau = task_shift(s, model)
    t = np.asarray(t, dtype=np.float64)
    excess = np.maximum(t / tau - 1.0, 0.0)
    out = -np.expm1(-((model.mu * excess) ** model.alpha))
    return float(out) if out.ndim == 0 else out


def survival(s, t, model: TimeModel = TimeModel()):
    """P(task time > t), without the cancellation of ``1 - cdf``."""
    tau = task_shift(s, model)
    t = np.asarray(t, dtype=np.float64)
    excess = np.maximum(t / tau - 1.0, 0.0)
    out = np.exp(-((model.mu * excess) ** model.alpha))
    return float(out) if out.ndim == 0 else out


def sample_time(s, model: TimeModel, u):
    """Inverse-transform sample: tau * (1 + (-ln(1-u))**(1/alpha) / mu).

    ``u`` must lie in [0, 1); scalar or array.
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any((u < 0) | (u >= 1)) or np.any(np.isnan(u)):
        raise InvalidArgumentError("u must lie in [0, 1)")
    tau = task_shift(s, model)
    out = tau * (1.0 + (-np.log1p(-u)) ** (1.0 / model.alpha) / model.mu)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CompletionTrace:
    finish_times: np.ndarray  # indexed by task id
    seed: Optional[int]


def simulate_trace(plan: ExecutionPlan, model: TimeModel, seed=None) -> CompletionTrace:
    rng = np.random.default_rng(seed)
    times = sample_time(plan.piece_len, model, rng.random(plan.p))
    return CompletionTrace(np.atleast_1d(times), seed)


def finish_times(plan: ExecutionPlan, times: np.ndarray) -> np.ndarray:
    """Strategy finish time for each row of a ``(trials, p)`` time matrix.

    A group finishes at the ``quorum``-th smallest time among its members;
    the strategy finishes when its last group does.
    """
    times = np.atleast_2d(times)
    done = np.empty((times.shape[0], len(plan.groups)))
    for g in plan.groups:
        member_times = times[:, list(g.members)]
        q = g.quorum - 1
        done[:, g.group_id] = np.partition(member_times, q, axis=1)[:, q]
    return done.max(axis=1)


def strategy_finish_time(plan: ExecutionPlan, trace: CompletionTrace) -> float:
    if len(trace.finish_times) != plan.p:
        raise InvalidArgumentError(
            f"trace has {len(trace.finish_times)} times for a plan with {plan.p} tasks"
        )
    return float(finish_times(plan, trace.finish_times)[0])


@dataclass(frozen=True)
class TailPoint:
    deadline: float
    trials: int
    failures: int

    @property
    def survival(self) -> float:
        return self.failures / self.trials


def _block_finish_times(plan, model, seed, block, n):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    times = sample_time(plan.piece_len, model, rng.random((n, plan.p)))
    return finish_times(plan, times)


def sample_finish_times(
    plan: ExecutionPlan,
    model: TimeModel,
    trials: int,
    seed: int = 0,
    max_workers: Optional[int] = None,
) -> np.ndarray:
    """Strategy finish times for ``trials`` independent runs.

    Trials are drawn in fixed blocks of ``BLOCK_TRIALS``, block ``b``
    seeded from ``(seed, b)``, so the result does not depend on
    ``max_workers``.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    sizes = [min(BLOCK_TRIALS, trials - start) for start in range(0, trials, BLOCK_TRIALS)]
    args = [(plan, model, seed, b, n) for b, n in enumerate(sizes)]
    if max_workers == 1 or len(args) == 1:
        parts = [_block_finish_times(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            parts = list(pool.map(lambda a: _block_finish_times(*a), args))
    return np.concatenate(parts)


def monte_carlo_tail(
    plan: ExecutionPlan,
    model: TimeModel,
    deadlines: Sequence[float],
    trials: int,
    seed: int = 0,
    max_workers: Optional[int] = None,
) -> list[TailPoint]:
    """Empirical P(strategy finish time > deadline) for each deadline."""
    done = np.sort(sample_finish_times(plan, model, trials, seed, max_workers))
    out = []
    for d in deadlines:
        failures = trials - int(np.searchsorted(done, d, side="right"))
        out.append(TailPoint(float(d), trials, failures))
    return out
