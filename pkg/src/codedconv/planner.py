"""Execution plans for the uncoded, replication and coded strategies.

A plan lists the ``p`` tasks and partitions them into groups. A group is
done once ``quorum`` of its members have finished, and the whole job is
done once every group is. The worst-case number of completions needed
(``worst_k``) comes from closed forms; ``brute_force_worst_case_k``
recomputes it by enumerating completion orders.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .conv import CostModel
from .errors import InvalidArgumentError

BRUTE_FORCE_MAX_P = 8
CONSTRUCTIVE_MAX_P = 16


def _isqrt_exact(n: int) -> Optional[int]:
    r = math.isqrt(n)
    return r if r * r == n else None


def _divisors(n: int) -> list[int]:
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


@dataclass(frozen=True)
class ProblemSpec:
    """Vector lengths ``n1`` (of a), ``n2`` (of x) and processor count ``p``.

    The standing assumption 2*sqrt(n1*n2/p) <= min(n1, n2) is reported by
    ``satisfies_assumption`` but not enforced here; plans only need their
    own divisibility constraints. Call ``require_assumption`` to enforce it.
    """

    n1: int
    n2: int
    p: int

    def __post_init__(self):
        for name in ("n1", "n2", "p"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def uncoded_len(self) -> float:
        """The uncoded piece length sqrt(n1*n2/p), possibly non-integral."""
        return math.sqrt(self.n1 * self.n2 / self.p)

    @property
    def min_len(self) -> int:
        return min(self.n1, self.n2)

    @property
    def satisfies_assumption(self) -> bool:
        # 2*sqrt(n1 n2 / p) <= m  <=>  4 n1 n2 <= p m^2, exact in integers
        return 4 * self.n1 * self.n2 <= self.p * self.min_len ** 2

    def require_assumption(self) -> None:
        if not self.satisfies_assumption:
            raise InvalidArgumentError(
                f"2*sqrt(n1*n2/p) = {2 * self.uncoded_len:.6g} exceeds "
                f"min(n1, n2) = {self.min_len} for {self}"
            )


@dataclass(frozen=True)
class Strategy:
    kind: str  # "uncoded" | "replication" | "coded"
    r: int = 1
    s: Optional[int] = None

    @classmethod
    def uncoded(cls) -> "Strategy":
        return cls("uncoded")

    @classmethod
    def replication(cls, r: int) -> "Strategy":
        return cls("replication", r=int(r))

    @classmethod
    def coded(cls, s: int) -> "Strategy":
        return cls("coded", s=int(s))

    @property
    def label(self) -> str:
        if self.kind == "replication":
            return f"replication(r={self.r})"
        if self.kind == "coded":
            return f"coded(s={self.s})"
        return "uncoded"


@dataclass(frozen=True)
class TaskSpec:
    task_id: int
    group_id: int
    x_index: int
    a_index: Optional[int] = None  # source piece of a (uncoded / replication)
    coded_index: Optional[int] = None  # coded piece of a (coded)
    replica: int = 0


@dataclass(frozen=True)
class Group:
    group_id: int
    members: tuple  # task ids, in coded-index / replica order
    quorum: int


@dataclass(frozen=True)
class ExecutionPlan:
    spec: ProblemSpec
    strategy: Strategy
    piece_len: int
    tasks: tuple
    groups: tuple
    worst_k: int
    code_n: Optional[int] = None
    code_k: Optional[int] = None
    group_of: tuple = field(init=False, repr=False)

    def __post_init__(self):
        owner = [0] * len(self.tasks)
        for t in self.tasks:
            owner[t.task_id] = t.group_id
        object.__setattr__(self, "group_of", tuple(owner))

    @property
    def p(self) -> int:
        return len(self.tasks)

    @property
    def a_pieces(self) -> int:
        return self.spec.n1 // self.piece_len

    @property
    def x_pieces(self) -> int:
        return self.spec.n2 // self.piece_len

    def summary(self) -> dict:
        return {
            "n1": self.spec.n1,
            "n2": self.spec.n2,
            "p": self.spec.p,
            "strategy": self.strategy.kind,
            "r": self.strategy.r if self.strategy.kind != "coded" else None,
            "s": self.piece_len,
            "worst_k": self.worst_k,
            "groups": [
                {"group_id": g.group_id, "tasks": list(g.members), "quorum": g.quorum}
                for g in self.groups
            ],
            "code": (
                {"n": self.code_n, "k": self.code_k} if self.strategy.kind == "coded" else None
            ),
        }


def _nearest_uncoded_p(spec: ProblemSpec) -> list[int]:
    g = math.gcd(spec.n1, spec.n2)
    valid = sorted({spec.n1 * spec.n2 // (s * s) for s in _divisors(g)})
    below = [q for q in valid if q < spec.p]
    above = [q for q in valid if q > spec.p]
    return ([below[-1]] if below else []) + ([above[0]] if above else [])


def plan_uncoded(spec: ProblemSpec) -> ExecutionPlan:
    """Split both vectors into pieces of sqrt(n1*n2/p); all p tasks must finish."""
    s = None
    if (spec.n1 * spec.n2) % spec.p == 0:
        s = _isqrt_exact(spec.n1 * spec.n2 // spec.p)
    if s is None or spec.n1 % s or spec.n2 % s:
        raise InvalidArgumentError(
            f"uncoded split needs sqrt(n1*n2/p) to be an integer dividing n1 and n2; "
            f"sqrt({spec.n1}*{spec.n2}/{spec.p}) = {spec.uncoded_len:.6g}. "
            f"Nearest valid p: {_nearest_uncoded_p(spec)}"
        )
    na = spec.n1 // s
    tasks = []
    for j in range(spec.n2 // s):
        for i in range(na):
            tid = j * na + i
            tasks.append(TaskSpec(tid, tid, x_index=j, a_index=i))
    groups = tuple(Group(t.task_id, (t.task_id,), 1) for t in tasks)
    return ExecutionPlan(spec, Strategy.uncoded(), s, tuple(tasks), groups, worst_k=spec.p)


def plan_replication(spec: ProblemSpec, r: int) -> ExecutionPlan:
    """``p/r`` distinct piece convolutions, each run on ``r`` processors.

    ``r == 1`` is the uncoded plan.
    """
    if int(r) != r or r < 1:
        raise InvalidArgumentError(f"replication factor must be a positive integer, got {r!r}")
    r = int(r)
    if r == 1:
        return plan_uncoded(spec)
    if spec.p % r:
        raise InvalidArgumentError(f"replication factor r={r} must divide p={spec.p}")
    s = None
    if (spec.n1 * spec.n2 * r) % spec.p == 0:
        s = _isqrt_exact(spec.n1 * spec.n2 * r // spec.p)
    if s is None or spec.n1 % s or spec.n2 % s:
        raise InvalidArgumentError(
            f"replication needs sqrt(n1*n2*r/p) to be an integer dividing n1 and n2; "
            f"got sqrt({spec.n1}*{spec.n2}*{r}/{spec.p}) = "
            f"{math.sqrt(spec.n1 * spec.n2 * r / spec.p):.6g}"
        )
    na = spec.n1 // s
    tasks, groups = [], []
    for g in range(spec.p // r):
        j, i = divmod(g, na)
        members = []
        for rep in range(r):
            tid = g * r + rep
            tasks.append(TaskSpec(tid, g, x_index=j, a_index=i, replica=rep))
            members.append(tid)
        groups.append(Group(g, tuple(members), 1))
    worst_k = spec.p - spec.p * s * s // (spec.n1 * spec.n2) + 1
    return ExecutionPlan(spec, Strategy.replication(r), s, tuple(tasks), tuple(groups), worst_k)


def coded_violations(spec: ProblemSpec, s: int) -> list[str]:
    """Constraints a coded piece length ``s`` breaks (empty if valid).

    ``s`` equal to sqrt(n1*n2/p) is allowed: it gives a square code with
    no redundancy, which behaves exactly like the uncoded split.
    """
    out = []
    if s * s < spec.n1 * spec.n2 / spec.p:
        out.append(f"s={s} is below sqrt(n1*n2/p)={spec.uncoded_len:.6g}: not in the coded regime")
    if s > spec.min_len:
        out.append(f"s={s} exceeds min(n1, n2)={spec.min_len}")
    if spec.n1 % s:
        out.append(f"s={s} does not divide n1={spec.n1}")
    if spec.n2 % s:
        out.append(f"s={s} does not divide n2={spec.n2}")
    if (spec.p * s) % spec.n2:
        out.append(f"n2={spec.n2} does not divide p*s={spec.p * s}")
    elif not out and spec.p * s // spec.n2 < spec.n1 // s:
        out.append(f"p*s/n2={spec.p * s // spec.n2} is less than n1/s={spec.n1 // s}")
    return out


def plan_coded(spec: ProblemSpec, s: int) -> ExecutionPlan:
    """``n2/s`` groups of ``p*s/n2`` coded tasks, each needing ``n1/s`` finishers."""
    if int(s) != s or s < 1:
        raise InvalidArgumentError(f"piece length must be a positive integer, got {s!r}")
    s = int(s)
    bad = coded_violations(spec, s)
    if bad:
        raise InvalidArgumentError("invalid coded plan: " + "; ".join(bad))
    n = spec.p * s // spec.n2
    k = spec.n1 // s
    tasks, groups = [], []
    for j in range(spec.n2 // s):
        members = []
        for c in range(n):
            tid = j * n + c
            tasks.append(TaskSpec(tid, j, x_index=j, coded_index=c))
            members.append(tid)
        groups.append(Group(j, tuple(members), k))
    worst_k = spec.p - n + k
    return ExecutionPlan(
        spec, Strategy.coded(s), s, tuple(tasks), tuple(groups), worst_k, code_n=n, code_k=k
    )


def make_plan(spec: ProblemSpec, strategy: Strategy) -> ExecutionPlan:
    if strategy.kind == "uncoded":
        return plan_uncoded(spec)
    if strategy.kind == "replication":
        return plan_replication(spec, strategy.r)
    if strategy.kind == "coded":
        return plan_coded(spec, strategy.s)
    raise InvalidArgumentError(f"unknown strategy kind {strategy.kind!r}")


def coded_piece_lengths(spec: ProblemSpec, include_uncoded: bool = False) -> list[int]:
    """All divisibility-feasible coded piece lengths, ascending."""
    out = []
    for s in _divisors(math.gcd(spec.n1, spec.n2)):
        if coded_violations(spec, s):
            continue
        if not include_uncoded and s * s * spec.p == spec.n1 * spec.n2:
            continue
        out.append(s)
    return out


def replication_factors(spec: ProblemSpec) -> list[int]:
    """Replication factors r > 1 that give a valid plan."""
    out = []
    for r in _divisors(spec.p):
        if r == 1:
            continue
        try:
            plan_replication(spec, r)
        except InvalidArgumentError:
            continue
        out.append(r)
    return out


def completion_count(plan: ExecutionPlan, order) -> int:
    """Number of completions consumed when the last group reaches quorum."""
    need = [g.quorum for g in plan.groups]
    pending = len(need)
    group_of = plan.group_of
    for pos, tid in enumerate(order, start=1):
        g = group_of[tid]
        if need[g] > 0:
            need[g] -= 1
            if need[g] == 0:
                pending -= 1
                if pending == 0:
                    return pos
    raise InvalidArgumentError("completion order never satisfies every group")


def adversarial_order(plan: ExecutionPlan, last_group: int) -> list[int]:
    """Finish every other group completely, then feed ``last_group`` last."""
    order = [t for g in plan.groups if g.group_id != last_group for t in g.members]
    return order + list(plan.groups[last_group].members)


def brute_force_worst_case_k(plan: ExecutionPlan) -> int:
    """Worst-case completions needed, found by search rather than formula.

    Every permutation of task ids is tried when ``p <= 8``. For
    ``8 < p <= 16`` only the adversarial orders (all other groups first)
    are tried; each is a valid order, so the result is a constructive lower
    bound that the closed form should match. Larger ``p`` is refused.
    """
    p = plan.p
    if p <= BRUTE_FORCE_MAX_P:
        return max(completion_count(plan, order) for order in itertools.permutations(range(p)))
    if p <= CONSTRUCTIVE_MAX_P:
        best = 0
        for g in plan.groups:
            order = adversarial_order(plan, g.group_id)
            assert sorted(order) == list(range(p))
            best = max(best, completion_count(plan, order))
        return best
    raise InvalidArgumentError(
        f"brute-force worst case is limited to p <= {CONSTRUCTIVE_MAX_P}, got p={p}"
    )


def worst_case_order(plan: ExecutionPlan) -> list[int]:
    """A completion order that forces ``plan.worst_k`` completions."""
    return max(
        (adversarial_order(plan, g.group_id) for g in plan.groups),
        key=lambda order: completion_count(plan, order),
    )


@dataclass(frozen=True)
class SplitCosts:
    """Per-processor cost comparisons for the uncoded split.

    ``scenario1_opt`` is the one-shot FFT cost at s = sqrt(n1*n2/p).
    ``scenario2_at(s1)`` is the overlap-add cost when a is cut into pieces
    of length ``s1``. ``serial_cost(r)`` is the cost of r serial rounds on
    the same processors.
    """

    spec: ProblemSpec
    model: CostModel
    scenario1_opt: float
    scenario2_at: Callable[[float], float]
    serial_cost: Callable[[int], float]


def appendix_a_costs(spec: ProblemSpec, model: CostModel = CostModel()) -> SplitCosts:
    s = spec.uncoded_len
    c, log = model.c, model.log
    nn_p = spec.n1 * spec.n2 / spec.p

    def scenario2_at(s1: float) -> float:
        return float(2 * c * s1 * (log(2 * nn_p / s1) + 1))

    def serial_cost(r: int) -> float:
        piece = math.sqrt(nn_p / r)
        return float(r * 2 * c * piece * log(2 * piece))

    return SplitCosts(spec, model, float(c * 2 * s * log(2 * s)), scenario2_at, serial_cost)
