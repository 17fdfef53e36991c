"""``glr`` command line.

Exit codes: 0 success; 1 solver failure or failed property checks; 2 bad
input; 3 the answer is infinite or the kernel set is empty (the report is
still printed).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import GlrError, NoGoodDealKernel, ParseError, SolverError
from .examples import (
    BsDigitalSpec,
    ForkMarketSpec,
    bs_digital_gain,
    bs_mirror_gain,
    bs_monte_carlo,
    fork_alpha_closed_form,
    fork_positions,
    make_fork_market,
)
from .gainloss import best_gain_loss
from .indices import (
    check_continuity_from_below,
    check_endowment_dominance,
    check_monotonicity,
    check_quasi_concavity,
    check_scale_invariance,
)
from .kernels import dual_best_gain_loss, duality_gap_report, good_deal_bounds, market_rho
from .random_trees import random_payoff
from .scenario_tree import Payoff, ScenarioTree

DEFAULT_SEED = 0
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INFINITE = 0, 1, 2, 3


def jsonable(obj: Any) -> Any:
    """Replace infinities by ``"inf"``/``"-inf"`` and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def _cell(v: Any) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.10g}"
    if v is None:
        return "-"
    return str(v)


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, Any]]:
    rows = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and v:
            rows.extend(_flatten(v, key + "."))
        else:
            rows.append((key, v))
    return rows


def render(report: Any, fmt: str = "table") -> str:
    """Render a report: a dict, a list of row dicts, or an object with ``to_dict``."""
    if hasattr(report, "to_dict"):
        report = report.to_dict()
    if isinstance(report, list):
        report = [r.to_dict() if hasattr(r, "to_dict") else r for r in report]
    if fmt == "json":
        if isinstance(report, list):
            return "\n".join(json.dumps(jsonable(r)) for r in report)
        return json.dumps(jsonable(report), indent=2)
    if isinstance(report, list):
        if not report:
            return ""
        cols = list(report[0])
        cells = [[_cell(r.get(c)) for c in cols] for r in report]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
        lines += ["  ".join(x.rjust(w) for x, w in zip(row, widths)) for row in cells]
        return "\n".join(lines)
    rows = _flatten(report)
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {_cell(v)}" for k, v in rows)


def _load_tree(path: str) -> ScenarioTree:
    return ScenarioTree.from_json(_read(path))


def _load_payoff(path: str, tree: ScenarioTree) -> Payoff:
    payoff = Payoff.from_json(_read(path))
    payoff.to_array(tree)  # key check against the tree
    return payoff


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _dual_table(dual: dict) -> list[dict]:
    return [{"value": dual["value"], "ess_sup": dual["ess_sup"], "ess_inf": dual["ess_inf"],
             "E_Q[B]": dual["endowment_expectation"]}]


# -- verbs -------------------------------------------------------------------

def _analyze(tree: ScenarioTree, b: Payoff | None, tol: float) -> tuple[int, dict]:
    primal = best_gain_loss(tree, b)
    dual = dual_best_gain_loss(tree, b)
    gap = duality_gap_report(tree, b, tol=tol)
    out = {
        "alpha_star": primal.value,
        "attained": primal.attained,
        "primal": primal.to_dict(),
        "dual": dual.to_dict(),
        "gap": gap.gap,
        "agree": gap.agree,
    }
    if b is not None:
        out["alpha_star_market"] = best_gain_loss(tree).value
        out["strict_zero_check"] = gap.strict_zero_check
        out["strict_value"] = gap.strict_value
    code = EXIT_INFINITE if math.isinf(primal.value) or math.isinf(dual.value) else EXIT_OK
    return code, out


def cmd_analyze(args) -> tuple[int, Any]:
    return _analyze(_load_tree(args.tree), None, args.tol)


def cmd_endow(args) -> tuple[int, Any]:
    tree = _load_tree(args.tree)
    return _analyze(tree, _load_payoff(args.payoff, tree), args.tol)


def cmd_bounds(args) -> tuple[int, Any]:
    tree = _load_tree(args.tree)
    claim = _load_payoff(args.claim, tree)
    try:
        lo, hi = good_deal_bounds(tree, claim, args.lam)
    except NoGoodDealKernel as exc:
        return EXIT_INFINITE, {"lambda": args.lam, "status": "infeasible", "threshold": exc.threshold}
    return EXIT_OK, {"lambda": args.lam, "status": "optimal", "lower": lo, "upper": hi}


def cmd_rho(args) -> tuple[int, Any]:
    tree = _load_tree(args.tree)
    x = _load_payoff(args.payoff, tree)
    rho = market_rho(tree, x, args.lam)
    return (EXIT_INFINITE if math.isinf(rho) else EXIT_OK), {"lambda": args.lam, "rho": rho}


def cmd_check(args) -> tuple[int, Any]:
    tree = _load_tree(args.tree)
    seed = args.seed
    rng = np.random.default_rng(seed)
    verdicts: dict[str, Any] = {}

    def add(v):
        verdicts[v.property_name] = v if v.property_name not in verdicts else verdicts[v.property_name].merge(v)

    for _ in range(args.instances):
        b1 = random_payoff(tree, rng)
        b2 = Payoff.from_array(tree, b1.to_array(tree) + np.abs(rng.normal(0.0, 0.5, len(tree.leaves))))
        b3 = random_payoff(tree, rng)
        add(check_monotonicity(tree, b1, b2, seed=seed))
        add(check_quasi_concavity(tree, b1, b3, 0.5, seed=seed))
        add(check_scale_invariance(tree, b1, (0.1, 3.0, 100.0), seed=seed))
        add(check_endowment_dominance(tree, b1, seed=seed))
        add(check_continuity_from_below(tree, b1, seed=seed))
    rows = [v.to_dict() for v in verdicts.values()]
    return (EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAIL), rows


def cmd_demo_forks(args) -> tuple[int, Any]:
    weights = None if args.weights is None else tuple(float(w) for w in args.weights.split(","))
    counts = sorted({n for n in (2 ** k for k in range(12)) if n < args.n} | {args.n})
    series = []
    for n in counts:
        spec = ForkMarketSpec(n, args.c, args.pu, weights if n == args.n else None)
        tree = make_fork_market(spec)
        rep = best_gain_loss(tree)
        closed = fork_alpha_closed_form(spec)
        pos = fork_positions(tree, rep.witness_strategy.positions)
        series.append({
            "N": n,
            "lp_alpha": rep.value,
            "closed_form": closed.truncated_alpha,
            "limit": closed.limit_alpha,
            "max_off_fork_position": max((abs(x) for x in pos[:-1]), default=0.0),
        })
    return EXIT_OK, series


def cmd_demo_bs(args) -> tuple[int, Any]:
    rows = []
    for eps in (float(e) for e in args.eps.split(",")):
        spec = BsDigitalSpec(args.pi, args.maturity, eps)
        dig, mir = bs_digital_gain(spec), bs_mirror_gain(spec)
        row = {
            "eps": eps,
            "p_eps": dig.p_eps,
            "c_eps": dig.c_eps,
            "digital_ratio": dig.ratio,
            "digital_bound": dig.lower_bound,
            "q_eps": mir.q_eps,
            "b_eps": mir.b_eps,
            "mirror_ratio": mir.ratio,
            "mirror_bound": mir.lower_bound,
            "chains_hold": dig.ok and mir.ok,
        }
        if args.mc_samples:
            mc = bs_monte_carlo(spec, args.mc_samples, args.seed)
            closed = {"p_eps": dig.p_eps, "c_eps": dig.c_eps, "q_eps": mir.q_eps, "b_eps": mir.b_eps}
            row["mc_max_z"] = max(abs(mc[k].value - v) / mc[k].stderr for k, v in closed.items())
        rows.append(row)
    return EXIT_OK, rows


def cmd_validate(args) -> tuple[int, Any]:
    tree = _load_tree(args.tree)
    out: dict[str, Any] = {"tree": tree.to_dict()}
    if args.payoff:
        out["payoff"] = _load_payoff(args.payoff, tree).to_dict()
    return EXIT_OK, out


# -- parsing -----------------------------------------------------------------

def _positive_lambda(text: str) -> float:
    value = float(text)
    if not value >= 1.0:
        raise argparse.ArgumentTypeError(f"lambda must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    # options accepted both before and after the verb
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "json"), default=argparse.SUPPRESS)
    common.add_argument("--csv", metavar="PATH", default=argparse.SUPPRESS, help="also write rows as CSV")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="primal/dual agreement tolerance")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="overrides GLR_SEED")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="glr", parents=[common],
                                     description="Best gain-loss ratios on finite market trees.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("analyze", parents=[common], help="best gain-loss of the market, primal and dual")
    p.add_argument("tree")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("endow", parents=[common], help="best gain-loss around an endowment")
    p.add_argument("tree")
    p.add_argument("payoff")
    p.set_defaults(func=cmd_endow)

    p = sub.add_parser("bounds", parents=[common], help="good-deal price bounds of a claim")
    p.add_argument("tree")
    p.add_argument("claim")
    p.add_argument("--lambda", dest="lam", type=_positive_lambda, required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rho", parents=[common], help="market-modified risk of a payoff")
    p.add_argument("tree")
    p.add_argument("payoff")
    p.add_argument("--lambda", dest="lam", type=_positive_lambda, required=True)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("check", parents=[common], help="acceptability-index property checks on random payoffs")
    p.add_argument("tree")
    p.add_argument("--instances", type=int, default=20)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("validate", parents=[common], help="parse, validate and re-emit a tree (and payoff)")
    p.add_argument("tree")
    p.add_argument("payoff", nargs="?")
    p.set_defaults(func=cmd_validate)

    demo = sub.add_parser("demo", parents=[common], help="worked examples")
    dsub = demo.add_subparsers(dest="example", required=True)
    p = dsub.add_parser("forks", parents=[common], help="truncated fork market")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--pu", type=float, default=0.5)
    p.add_argument("--weights", help="comma-separated fork weights for the largest N")
    p.set_defaults(func=cmd_demo_forks)
    p = dsub.add_parser("blackscholes", parents=[common], help="lognormal-kernel digital bets")
    p.add_argument("--pi", type=float, default=0.4)
    p.add_argument("--maturity", type=float, default=1.0)
    p.add_argument("--eps", default="0.5,0.2,0.1,0.05")
    p.add_argument("--mc-samples", type=int, default=0, help="add an importance-sampled Monte Carlo check")
    p.set_defaults(func=cmd_demo_bs)
    return parser


def _default_seed() -> int:
    raw = os.environ.get("GLR_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"GLR_SEED must be an integer, got {raw!r}") from exc


def run(argv: Sequence[str] | None = None) -> tuple[int, str, str]:
    """Parse ``argv``, execute, and return ``(exit code, stdout text, stderr text)``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("format", "table"), ("csv", None), ("tol", 1e-7), ("verbose", 0)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO, stream=sys.stderr)
    try:
        if not hasattr(args, "seed"):
            args.seed = _default_seed()
        code, report = args.func(args)
    except GlrError as exc:
        where = f" (node {exc.node})" if exc.node is not None else ""
        code = EXIT_FAIL if isinstance(exc, SolverError) else EXIT_INPUT
        return code, "", f"{exc.code}: {exc}{where}"
    except ValueError as exc:
        # malformed numbers inside list-valued options such as --eps or --weights
        return EXIT_INPUT, "", f"{ParseError.code}: {exc}"
    if args.csv and isinstance(report, list):
        _write_csv(args.csv, report)
    if args.format == "table" and isinstance(report, dict) and "dual" in report:
        text = render({k: v for k, v in report.items() if k not in ("dual", "primal")}, "table")
        text += "\n\n" + render(_dual_table(report["dual"]), "table")
        return code, text, ""
    return code, render(report, args.format), ""


def _write_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) if isinstance(v, float) else v for k, v in row.items()})


def main(argv: Sequence[str] | None = None) -> int:
    code, out, err = run(argv)
    if out:
        print(out)
    if err:
        print(err, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
