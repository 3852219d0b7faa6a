"""``codedconv`` command line: plan, verify, simulate, analyze."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections import defaultdict
from typing import Optional

import numpy as np

from . import analytics
from .config import ExperimentConfig
from .conv import convolve_direct
from .engine import execute
from .errors import CodedConvError, InvalidArgumentError
from .mds import DecoderMatrix, make_decoder
from .planner import (
    BRUTE_FORCE_MAX_P,
    ExecutionPlan,
    ProblemSpec,
    Strategy,
    brute_force_worst_case_k,
)
from .straggler import monte_carlo_tail

CSV_HEADER = ["strategy", "s", "r", "deadline", "trials", "failures", "survival", "log10_survival"]
VERIFY_ORDERS = 20
VERIFY_RTOL = 1e-8
VERIFY_MAX_PRODUCT = 2 ** 24


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _r_field(strategy: Strategy):
    return "" if strategy.kind == "coded" else strategy.r


def cmd_plan(cfg: ExperimentConfig, out: Optional[str] = None) -> int:
    report = []
    for plan in cfg.plans():
        entry = plan.summary()
        entry["brute_force_k"] = None
        line = (
            f"{plan.strategy.label}: s={plan.piece_len} groups={len(plan.groups)} "
            f"x {len(plan.groups[0].members)} tasks, quorum={plan.groups[0].quorum}, "
            f"worst_k={plan.worst_k}"
        )
        if plan.p <= BRUTE_FORCE_MAX_P:
            bf = brute_force_worst_case_k(plan)
            entry["brute_force_k"] = bf
            line += f", brute-force K={bf} ({'match' if bf == plan.worst_k else 'MISMATCH'})"
        print(line, file=sys.stderr)
        report.append(entry)
    _emit(_dump_json(report), out)
    return 0


def _corrupted_decoder(code, indices) -> DecoderMatrix:
    good = make_decoder(code, indices)
    bad = good.inverse.copy()
    bad[0, 0] += 1e-3
    return DecoderMatrix(good.indices, bad, good.condition)


def cmd_verify(cfg: ExperimentConfig, seed: int, corrupt_decoder: bool = False) -> int:
    spec = cfg.spec
    if spec.n1 * spec.n2 > VERIFY_MAX_PRODUCT:
        raise InvalidArgumentError(
            f"n1*n2 = {spec.n1 * spec.n2} exceeds {VERIFY_MAX_PRODUCT} for the direct oracle"
        )
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(spec.n1)
    x = rng.standard_normal(spec.n2)
    ref = convolve_direct(a, x)
    scale = np.max(np.abs(ref))
    factory = _corrupted_decoder if corrupt_decoder else make_decoder
    ok = True
    for plan in cfg.plans():
        worst, worst_order, max_used = 0.0, None, 0
        for _ in range(VERIFY_ORDERS):
            order = rng.permutation(plan.p).tolist()
            res = execute(plan, a, x, order, node_scheme=cfg.node_scheme, decoder_factory=factory)
            dev = float(np.max(np.abs(res.output - ref)) / scale)
            max_used = max(max_used, res.tasks_used)
            if dev > worst:
                worst, worst_order = dev, order
        passed = worst <= VERIFY_RTOL and max_used <= plan.worst_k
        ok &= passed
        msg = (
            f"{plan.strategy.label}: {'PASS' if passed else 'FAIL'} "
            f"max relative deviation {worst:.3e}, max tasks used {max_used}/{plan.worst_k}"
        )
        if not passed:
            msg += f", failing order {worst_order}"
        print(msg)
    return 0 if ok else 1


def simulate_rows(cfg: ExperimentConfig) -> list[list]:
    if not cfg.deadlines:
        raise InvalidArgumentError("simulate needs a 'deadlines' entry in the config")
    rows = []
    for plan in cfg.plans():
        for pt in monte_carlo_tail(plan, cfg.model, cfg.deadlines, cfg.trials, cfg.seed):
            sv = pt.survival
            rows.append([
                plan.strategy.kind,
                plan.piece_len,
                _r_field(plan.strategy),
                repr(pt.deadline),
                pt.trials,
                pt.failures,
                repr(sv) if sv not in (0.0, 1.0) else str(int(sv)),
                repr(math.log10(sv)) if sv > 0 else "",
            ])
    return rows


def cmd_simulate(cfg: ExperimentConfig, out: Optional[str] = None) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(simulate_rows(cfg))
    _emit(buf.getvalue(), out)
    return 0


def _theory(spec: ProblemSpec, strategy: Strategy, s: int, model) -> analytics.ExponentReport:
    if strategy.kind == "replication":
        return analytics.epsilon_replication(spec, strategy.r, model)
    return analytics.epsilon(spec, s, model)


def read_simulation_csv(path) -> dict:
    """Group simulation CSV rows by (strategy, s, r)."""
    groups = defaultdict(list)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise InvalidArgumentError(f"{path}: unexpected CSV header {reader.fieldnames}")
        for row in reader:
            key = (row["strategy"], int(row["s"]), int(row["r"]) if row["r"] else None)
            groups[key].append(
                (float(row["deadline"]), float(row["survival"]), int(row["trials"]))
            )
    return groups


def fitted_slopes(cfg: ExperimentConfig, groups: dict) -> list[dict]:
    out = []
    for (kind, s, r), rows in groups.items():
        strategy = Strategy(kind, r=r or 1, s=s if kind == "coded" else None)
        theory = _theory(cfg.spec, strategy, s, cfg.model)
        trials = rows[0][2]
        slope = analytics.fit_tail_slope(
            [(t, sv) for t, sv, _ in rows],
            alpha=cfg.model.alpha,
            tail_fraction=cfg.tail_fraction,
            min_survival=cfg.min_failures / trials,
        )
        out.append({
            "strategy": kind,
            "s": s,
            "r": r,
            "fitted_slope": slope,
            "theory": theory.epsilon,
            "ratio": slope / theory.epsilon,
            "theory_is_upper_bound": theory.is_upper_bound,
        })
    return out


def analyze_report(cfg: ExperimentConfig, csv_path: Optional[str] = None) -> dict:
    spec, model = cfg.spec, cfg.model
    strategies = []
    for plan in cfg.plans():
        st = plan.strategy
        rep = _theory(spec, st, plan.piece_len, model)
        strategies.append({
            "strategy": st.kind,
            "s": plan.piece_len,
            "r": _r_field(st) or None,
            "worst_k": plan.worst_k,
            "epsilon": rep.epsilon,
            "is_upper_bound": rep.is_upper_bound,
            "complexity_ratio": (
                analytics.complexity_ratio(spec, plan.piece_len, model) if st.kind == "coded" else None
            ),
        })
    try:
        t5 = analytics.theorem5_ratio(spec, model)
        gain = {"ratio": t5.ratio, "lower_bound": t5.lower_bound, "holds": t5.ratio > t5.lower_bound}
    except InvalidArgumentError:
        gain = None
    threshold = analytics.alpha_threshold(spec)
    try:
        best = analytics.best_s(spec, model)
    except InvalidArgumentError:
        best = None

    e_sweep = None
    if cfg.e_sweep is not None:
        p = int(cfg.e_sweep.get("p", 16))
        alpha = float(cfg.e_sweep.get("alpha", model.alpha))
        fmodel = type(model)(model.mu, alpha, model.cost)
        e_sweep = []
        for n in cfg.e_sweep.get("n_values", [2 ** 10, 2 ** 14, 2 ** 18]):
            fspec = ProblemSpec(4 * n, n, p)
            e_unc = analytics.heuristic_E(fspec, 2 * n / math.sqrt(p), fmodel)
            e_cod = analytics.heuristic_E(fspec, 4 * n / math.sqrt(p), fmodel)
            e_sweep.append({"N": n, "p": p, "alpha": alpha, "E_uncoded": e_unc, "E_coded": e_cod})

    return {
        "n1": spec.n1,
        "n2": spec.n2,
        "p": spec.p,
        "assumption_holds": spec.satisfies_assumption,
        "model": {
            "mu": model.mu,
            "alpha": model.alpha,
            "c": model.cost.c,
            "log_base": model.cost.base_name,
        },
        "strategies": strategies,
        "coding_gain": gain,
        "alpha_threshold": threshold,
        "regime": "coded-favorable" if model.alpha < threshold else "uncoded-favorable",
        "best_s": best,
        "e_sweep": e_sweep,
        "fitted_slopes": fitted_slopes(cfg, read_simulation_csv(csv_path)) if csv_path else None,
    }


def cmd_analyze(cfg: ExperimentConfig, out: Optional[str] = None, csv_path: Optional[str] = None) -> int:
    _emit(_dump_json(analyze_report(cfg, csv_path)), out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codedconv",
        description="Coded distributed convolution: plans, verification, deadline simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("plan", "print execution plans and worst-case K"),
        ("verify", "run end-to-end convolutions against the direct oracle"),
        ("simulate", "Monte Carlo deadline-failure tail as CSV"),
        ("analyze", "closed-form exponent report as JSON"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--trials", type=int, default=None, help="override the config trial count")
        p.add_argument("--out", default=None, help="write output here instead of stdout")
        if name == "analyze":
            p.add_argument("--csv", default=None, help="simulation CSV to fit tail slopes from")
        if name == "verify":
            p.add_argument("--corrupt-decoder", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            if args.trials < 1:
                raise InvalidArgumentError("--trials must be >= 1")
            overrides["trials"] = args.trials
        if overrides:
            from dataclasses import replace
            cfg = replace(cfg, **overrides)
        if args.command == "plan":
            return cmd_plan(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, cfg.seed, args.corrupt_decoder)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out)
        return cmd_analyze(cfg, args.out, args.csv)
    except (CodedConvError, OSError) as exc:
        print(f"codedconv: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
