"""Experiment configuration loaded from JSON.

Unknown keys are rejected at every level. Example::

    {
      "n1": 4096, "n2": 2048, "p": 8,
      "strategies": [{"kind": "uncoded"},
                     {"kind": "replication", "r": 4},
                     {"kind": "coded", "s": 2048}],
      "model": {"mu": 1.0, "alpha": 1.0, "c": 1.0, "log_base": "2"},
      "deadlines": {"min": 0, "max": 400000, "count": 801, "spacing": "linear"},
      "trials": 100000,
      "seed": 0
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .conv import CostModel
from .errors import InvalidArgumentError
from .mds import NODE_SCHEMES
from .planner import ExecutionPlan, ProblemSpec, Strategy, make_plan
from .straggler import TimeModel

TOP_KEYS = {
    "n1", "n2", "p", "strategies", "model", "deadlines", "trials", "seed",
    "node_scheme", "strict_assumption", "fit", "e_sweep",
}
MODEL_KEYS = {"mu", "alpha", "c", "log_base"}
DEADLINE_KEYS = {"min", "max", "count", "spacing"}
FIT_KEYS = {"tail_fraction", "min_failures"}
E_SWEEP_KEYS = {"n_values", "p", "alpha"}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise InvalidArgumentError(f"{where} must be a JSON object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise InvalidArgumentError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _parse_strategy(d: dict) -> Strategy:
    kind = d.get("kind")
    if kind == "uncoded":
        _reject_unknown(d, {"kind"}, "uncoded strategy")
        return Strategy.uncoded()
    if kind == "replication":
        _reject_unknown(d, {"kind", "r"}, "replication strategy")
        return Strategy.replication(d["r"])
    if kind == "coded":
        _reject_unknown(d, {"kind", "s"}, "coded strategy")
        return Strategy.coded(d["s"])
    raise InvalidArgumentError(f"strategy kind must be uncoded, replication or coded; got {kind!r}")


def _parse_deadlines(raw) -> tuple:
    if isinstance(raw, list):
        vals = [float(v) for v in raw]
    else:
        _reject_unknown(raw, DEADLINE_KEYS, "deadlines")
        lo, hi, count = float(raw["min"]), float(raw["max"]), int(raw["count"])
        spacing = raw.get("spacing", "linear")
        if count < 1 or hi < lo:
            raise InvalidArgumentError("deadlines need count >= 1 and max >= min")
        if spacing == "linear":
            vals = np.linspace(lo, hi, count).tolist()
        elif spacing == "log":
            if lo <= 0:
                raise InvalidArgumentError("log-spaced deadlines need min > 0")
            vals = np.geomspace(lo, hi, count).tolist()
        else:
            raise InvalidArgumentError(f"spacing must be linear or log, got {spacing!r}")
    if not vals:
        raise InvalidArgumentError("deadline list is empty")
    return tuple(vals)


def _deadlines_or_empty(d: dict) -> tuple:
    if "deadlines" not in d:
        return ()
    try:
        return _parse_deadlines(d["deadlines"])
    except KeyError as exc:
        raise InvalidArgumentError(f"deadlines is missing key {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ProblemSpec
    strategies: tuple
    model: TimeModel = field(default_factory=TimeModel)
    deadlines: tuple = ()
    trials: int = 100_000
    seed: int = 0
    node_scheme: str = "chebyshev"
    tail_fraction: float = 0.5
    min_failures: int = 20
    e_sweep: Optional[dict] = None

    def plans(self) -> list[ExecutionPlan]:
        return [make_plan(self.spec, st) for st in self.strategies]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _reject_unknown(d, TOP_KEYS, "config")
        for key in ("n1", "n2", "p", "strategies"):
            if key not in d:
                raise InvalidArgumentError(f"config is missing required key {key!r}")
        spec = ProblemSpec(d["n1"], d["n2"], d["p"])
        if d.get("strict_assumption", True):
            spec.require_assumption()
        try:
            strategies = tuple(_parse_strategy(s) for s in d["strategies"])
        except KeyError as exc:
            raise InvalidArgumentError(f"strategy is missing key {exc}") from exc
        if not strategies:
            raise InvalidArgumentError("config lists no strategies")

        m = d.get("model", {})
        _reject_unknown(m, MODEL_KEYS, "model")
        cost = CostModel(float(m.get("c", 1.0)), str(m.get("log_base", "2")))
        model = TimeModel(float(m.get("mu", 1.0)), float(m.get("alpha", 1.0)), cost)

        fit = d.get("fit", {})
        _reject_unknown(fit, FIT_KEYS, "fit")
        e_sweep = d.get("e_sweep")
        if e_sweep is not None:
            _reject_unknown(e_sweep, E_SWEEP_KEYS, "e_sweep")

        scheme = d.get("node_scheme", "chebyshev")
        if scheme not in NODE_SCHEMES:
            raise InvalidArgumentError(f"node_scheme must be one of {NODE_SCHEMES}")
        trials = int(d.get("trials", 100_000))
        if trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        seed = int(d.get("seed", 0))
        if not 0 <= seed < 2 ** 64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")

        cfg = cls(
            spec=spec,
            strategies=strategies,
            model=model,
            deadlines=_deadlines_or_empty(d),
            trials=trials,
            seed=seed,
            node_scheme=scheme,
            tail_fraction=float(fit.get("tail_fraction", 0.5)),
            min_failures=int(fit.get("min_failures", 20)),
            e_sweep=e_sweep,
        )
        cfg.plans()  # re-validate every strategy against the spec
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)
