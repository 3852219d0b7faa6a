"""Run an execution plan on real vectors.

The engine splits ``a`` and ``x`` into pieces, encodes ``a`` for coded
plans, computes the piece convolutions task by task, and feeds each
completion to a collector. A group is resolved as soon as its quorum has
arrived: replication takes the first replica, coded groups are decoded
from exactly the first ``k`` finishers. Late results are discarded.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .conv import as_vector, convolve_fft, shift_add_combine
from .errors import InvalidArgumentError
from .mds import DecoderMatrix, VandermondeCode, decode_group, encode, make_code, make_decoder
from .planner import ExecutionPlan

DecoderFactory = Callable[[VandermondeCode, Sequence[int]], DecoderMatrix]


@dataclass(frozen=True)
class CompletionOrder:
    """A permutation of task ids in the order they finish."""

    order: tuple

    @classmethod
    def from_times(cls, finish_times) -> "CompletionOrder":
        times = np.asarray(finish_times, dtype=np.float64)
        if times.ndim != 1 or not np.all(times > 0):
            raise InvalidArgumentError("finish times must be a 1-D array of positive values")
        return cls(tuple(int(i) for i in np.argsort(times, kind="stable")))

    def validate(self, p: int) -> None:
        if sorted(self.order) != list(range(p)):
            raise InvalidArgumentError(
                f"completion order must be a permutation of 0..{p - 1}, got {list(self.order)}"
            )


@dataclass(frozen=True)
class ExecutionResult:
    output: np.ndarray
    tasks_used: int
    # per group, the member positions (coded indices for coded plans)
    # whose results were used
    per_group_indices: tuple


class _Collector:
    """Accepts (task_id, output) completions in any order, from any thread."""

    def __init__(self, plan: ExecutionPlan):
        self.plan = plan
        self._lock = threading.Lock()
        self._arrived = [[] for _ in plan.groups]
        self._position = {tid: pos for g in plan.groups for pos, tid in enumerate(g.members)}
        self._pending = len(plan.groups)
        self.consumed = 0
        self.tasks_used = None

    @property
    def done(self) -> bool:
        return self._pending == 0

    def add(self, task_id: int, output: np.ndarray) -> Optional[tuple]:
        """Record a completion. Returns ``(group_id, results)`` when it
        completes a group's quorum, else None."""
        with self._lock:
            if self.done:
                return None
            self.consumed += 1
            g = self.plan.group_of[task_id]
            bucket = self._arrived[g]
            quorum = self.plan.groups[g].quorum
            if len(bucket) >= quorum:
                return None
            bucket.append((self._position[task_id], output))
            if len(bucket) < quorum:
                return None
            self._pending -= 1
            if self._pending == 0:
                self.tasks_used = self.consumed
            return g, list(bucket)


def split(v: np.ndarray, s: int) -> np.ndarray:
    return v.reshape(-1, s)


def reconstruct(plan: ExecutionPlan, partials: Sequence) -> np.ndarray:
    """Combine the ``n2/s`` per-x-piece results ``a * x_j`` into ``a * x``.

    Each partial has length ``n1 + s - 1``; partial ``j`` is shifted right
    by ``j * s``.
    """
    s = plan.piece_len
    if len(partials) != plan.x_pieces or any(p is None for p in partials):
        raise InvalidArgumentError(
            f"reconstruct needs all {plan.x_pieces} partial outputs, got "
            f"{sum(p is not None for p in partials)}"
        )
    return shift_add_combine(partials, s, plan.spec.n1 + plan.spec.n2 - 1)


def _combine_a_pieces(plan: ExecutionPlan, piece_outputs: Sequence) -> np.ndarray:
    s = plan.piece_len
    return shift_add_combine(piece_outputs, s, plan.spec.n1 + s - 1)


def execute(
    plan: ExecutionPlan,
    a,
    x,
    order=None,
    *,
    node_scheme: str = "chebyshev",
    max_workers: Optional[int] = None,
    decoder_factory: DecoderFactory = make_decoder,
) -> ExecutionResult:
    """Compute ``a * x`` under ``plan``.

    With ``order`` given (a permutation, a :class:`CompletionOrder`, or use
    ``CompletionOrder.from_times``) tasks complete in that order on the
    calling thread. With ``order=None`` tasks run on a thread pool and
    complete in whatever order the scheduler produces.
    """
    a = as_vector(a, "a")
    x = as_vector(x, "x")
    spec, s = plan.spec, plan.piece_len
    if a.size != spec.n1 or x.size != spec.n2:
        raise InvalidArgumentError(
            f"expected |a|={spec.n1}, |x|={spec.n2}; got {a.size}, {x.size}"
        )
    a_src = split(a, s)
    x_src = split(x, s)
    coded = plan.strategy.kind == "coded"
    code = None
    if coded:
        code = make_code(plan.code_n, plan.code_k, node_scheme)
        a_src = encode(code, a_src)

    def run_task(tid: int) -> np.ndarray:
        t = plan.tasks[tid]
        left = a_src[t.coded_index if coded else t.a_index]
        return convolve_fft(left, x_src[t.x_index])

    collector = _Collector(plan)
    decoders: dict = {}
    pieces = {}  # (i, j) -> a_i * x_j
    used = [None] * len(plan.groups)

    def resolve(g: int, results: list) -> None:
        results.sort(key=lambda item: item[0])
        used[g] = tuple(pos for pos, _ in results)
        group = plan.groups[g]
        first = plan.tasks[group.members[0]]
        if not coded:
            pieces[(first.a_index, first.x_index)] = results[0][1]
            return
        key = used[g]
        if key not in decoders:
            decoders[key] = decoder_factory(code, key)
        decoded = decode_group(decoders[key], [out for _, out in results])
        for i, row in enumerate(decoded):
            pieces[(i, first.x_index)] = row

    if order is not None:
        if not isinstance(order, CompletionOrder):
            order = CompletionOrder(tuple(int(t) for t in order))
        order.validate(plan.p)
        for tid in order.order:
            hit = collector.add(tid, run_task(tid))
            if hit is not None:
                resolve(*hit)
            if collector.done:
                break
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {pool.submit(run_task, tid): tid for tid in range(plan.p)}
            for fut in as_completed(futures):
                hit = collector.add(futures[fut], fut.result())
                if hit is not None:
                    resolve(*hit)
                if collector.done:
                    for other in futures:
                        other.cancel()
                    break

    partials = [
        _combine_a_pieces(plan, [pieces[(i, j)] for i in range(plan.a_pieces)])
        for j in range(plan.x_pieces)
    ]
    return ExecutionResult(reconstruct(plan, partials), collector.tasks_used, tuple(used))
