"""Acceptability-index properties of the best gain-loss ratio, checked numerically.

Each check returns a :class:`PropertyVerdict`.  Values are compared on the
extended half-line: ``+inf`` equals itself and exceeds every real.  Solves go
through an injectable ``solver`` (default :func:`best_gain_loss`) so a harness
self-test can corrupt individual answers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import BadScale, PreconditionViolated
from .gainloss import GainLossReport, best_gain_loss, gain_loss_ratio
from .kernels import q_lambda_m_feasible
from .scenario_tree import Payoff, ScenarioTree

Solver = Callable[[ScenarioTree, "Payoff | None"], GainLossReport]

BISECTION_CAP = 1e9


@dataclass(frozen=True)
class PropertyVerdict:
    property_name: str
    instances_tested: int
    violations: tuple[dict, ...]
    max_violation_magnitude: float
    tolerance: float
    seed: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def merge(self, other: PropertyVerdict) -> PropertyVerdict:
        if other.property_name != self.property_name:
            raise ValueError("cannot merge verdicts of different properties")
        return replace(
            self,
            instances_tested=self.instances_tested + other.instances_tested,
            violations=self.violations + other.violations,
            max_violation_magnitude=max(self.max_violation_magnitude, other.max_violation_magnitude),
            tolerance=max(self.tolerance, other.tolerance),
            details={},
        )

    def to_dict(self) -> dict:
        return {
            "property": self.property_name,
            "instances": self.instances_tested,
            "passed": self.passed,
            "max_violation": _jnum(self.max_violation_magnitude),
            "tolerance": self.tolerance,
            "seed": self.seed,
            "violations": [_jsonable(v) for v in self.violations],
        }


def _jnum(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Payoff):
        return {str(k): v for k, v in obj.values.items()}
    return _jnum(obj)


def _verdict(name: str, magnitudes: Sequence[tuple[float, dict]], tol: float, seed: int | None = None,
             details: dict | None = None) -> PropertyVerdict:
    """``magnitudes`` holds (excess over the allowed bound, descriptor) per tested relation."""
    worst = max((m for m, _ in magnitudes), default=0.0)
    bad = tuple({**desc, "magnitude": m} for m, desc in magnitudes if m > tol)
    return PropertyVerdict(name, 1, bad, max(worst, 0.0), tol, seed, details or {})


def excess(a: float, b: float) -> float:
    """How far ``a`` exceeds ``b`` on the extended line, relative to ``max(1, |b|)``."""
    if a == b:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return math.inf if a > b else -math.inf
    return (a - b) / max(1.0, abs(b))


def _value(solver: Solver, tree: ScenarioTree, b: Payoff | None) -> float:
    return solver(tree, b).value


def _combine(tree: ScenarioTree, c1: float, b1: Payoff, c2: float, b2: Payoff) -> Payoff:
    return Payoff.from_array(tree, c1 * b1.to_array(tree) + c2 * b2.to_array(tree))


def check_monotonicity(tree: ScenarioTree, b1: Payoff, b2: Payoff, tol: float = 1e-9,
                       solver: Solver = best_gain_loss, seed: int | None = None) -> PropertyVerdict:
    """A nodewise larger endowment never has a smaller best ratio."""
    x1, x2 = b1.to_array(tree), b2.to_array(tree)
    if np.any(x1 > x2):
        bad = tree.leaves[int(np.argmax(x1 > x2))]
        raise PreconditionViolated(f"b1 exceeds b2 at node {bad}", node=bad)
    v1, v2 = _value(solver, tree, b1), _value(solver, tree, b2)
    return _verdict("monotonicity", [(excess(v1, v2), {"b1": b1, "b2": b2, "alpha_b1": v1, "alpha_b2": v2})],
                    tol, seed)


def check_quasi_concavity(tree: ScenarioTree, b1: Payoff, b2: Payoff, c: float, tol: float = 1e-7,
                          solver: Solver = best_gain_loss, seed: int | None = None) -> PropertyVerdict:
    """The best ratio of a mixture is at least the smaller of the two endpoint ratios."""
    v1, v2 = _value(solver, tree, b1), _value(solver, tree, b2)
    vm = _value(solver, tree, _combine(tree, c, b1, 1.0 - c, b2))
    floor = min(v1, v2)
    return _verdict("quasi_concavity",
                    [(excess(floor, vm), {"b1": b1, "b2": b2, "c": c, "alpha_b1": v1, "alpha_b2": v2, "alpha_mix": vm})],
                    tol, seed)


def check_scale_invariance(tree: ScenarioTree, b: Payoff, scales: Sequence[float], tol: float = 1e-7,
                           solver: Solver = best_gain_loss, seed: int | None = None) -> PropertyVerdict:
    for c in scales:
        if not (c > 0 and math.isfinite(c)):
            raise BadScale(f"scales must be finite and positive, got {c!r}")
    base = _value(solver, tree, b)
    rows = []
    for c in scales:
        v = _value(solver, tree, _combine(tree, c, b, 0.0, b))
        rows.append((abs(excess(v, base)), {"b": b, "scale": c, "alpha_b": base, "alpha_scaled": v}))
    return _verdict("scale_invariance", rows, tol, seed)


def check_endowment_dominance(tree: ScenarioTree, b: Payoff, tol: float = 1e-9,
                              solver: Solver = best_gain_loss, seed: int | None = None) -> PropertyVerdict:
    """Holding an endowment never lowers the best ratio below the market's own."""
    v0, vb = _value(solver, tree, None), _value(solver, tree, b)
    return _verdict("endowment_dominance", [(excess(v0, vb), {"b": b, "alpha_0": v0, "alpha_b": vb})], tol, seed)


def apriori_modulus(report: GainLossReport, eps: float) -> float:
    """Upper bound on ``alpha*(b) - alpha*(b - eps)`` from the optimal witness.

    Shifting the witness ``s*B + K`` (normalized to unit expected loss) down by
    ``s*eps`` costs at most ``s*eps`` of expected gain and adds at most as much
    expected loss.  A witness with zero scale gives a zero bound, since then
    the value is the market's own and cannot drop further.
    """
    if not report.attained or report.witness_scale == 0.0 or report.normalization <= 0.0:
        return 0.0
    s = report.witness_scale / report.normalization
    a = report.value
    return s * eps * (a + 1.0) / (1.0 + s * eps)


def check_continuity_from_below(tree: ScenarioTree, b: Payoff, n_steps: int = 64, tol: float = 1e-9,
                                gap_tol: float = 1e-4, solver: Solver = best_gain_loss,
                                seed: int | None = None, max_doublings: int = 40) -> PropertyVerdict:
    """Values along ``b - 1/k`` rise monotonically to the value at ``b``.

    The dense run covers ``k = 1..n_steps``.  If the last value is still more
    than ``gap_tol`` below the target (or finite while the target is not),
    the run continues along ``k = n_steps * 2^j`` until it gets there or
    ``max_doublings`` is used up; the latter is reported as a violation.
    """
    if n_steps < 2:
        raise PreconditionViolated("n_steps must be at least 2")
    barr = b.to_array(tree)
    target_rep = solver(tree, b)
    target = target_rep.value

    def at(k: int) -> float:
        return solver(tree, Payoff.from_array(tree, barr - 1.0 / k)).value

    ks = list(range(1, n_steps + 1))
    values = [at(k) for k in ks]
    for _ in range(max_doublings):
        if excess(target, values[-1]) <= gap_tol:
            break
        ks.append(2 * ks[-1])
        values.append(at(ks[-1]))

    rows = []
    for (k0, v0), (k1, v1) in zip(zip(ks, values), zip(ks[1:], values[1:])):
        rows.append((excess(v0, v1), {"kind": "monotone", "k": k0, "k_next": k1, "alpha_k": v0, "alpha_next": v1}))
    for k_, v in zip(ks, values):
        rows.append((excess(v, target), {"kind": "above_limit", "k": k_, "alpha_k": v, "alpha_b": target}))
    final_gap = excess(target, values[-1])
    # measured as the overshoot beyond gap_tol
    rows.append((max(final_gap - gap_tol, 0.0), {"kind": "final_gap", "k": ks[-1], "gap": final_gap, "alpha_b": target}))
    return _verdict("continuity_from_below", rows, tol, seed,
                    {"final_k": ks[-1], "final_gap": final_gap, "solves": len(ks) + 1,
                     "apriori_modulus": apriori_modulus(target_rep, 1.0 / ks[-1])})


@dataclass(frozen=True)
class BisectionResult:
    value: float
    proven: bool
    feasibility_calls: int


def lambda_bisection(tree: ScenarioTree, b: Payoff | None = None, tol: float = 1e-7) -> BisectionResult:
    """Smallest ``lam`` admitting a martingale kernel with ratio ``<= lam`` that prices ``b`` at most 0.

    An infinite answer is ``proven`` when the kernel system is infeasible with
    no ratio bound at all; otherwise it only means the cap ``1e9`` was reached.
    """
    calls = 0

    def feasible(lam: float) -> bool:
        nonlocal calls
        calls += 1
        return q_lambda_m_feasible(tree, lam, b)

    if feasible(1.0):
        # nothing to bisect: lam = 1 already admits a kernel (the market value is 1)
        return BisectionResult(1.0, True, calls)
    lo, hi = 1.0, 2.0
    while not feasible(hi):
        lo = hi
        if hi >= BISECTION_CAP:
            proven = not feasible(math.inf)
            return BisectionResult(math.inf, proven, calls)
        hi = min(2.0 * hi, BISECTION_CAP)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return BisectionResult(hi, True, calls)


def alpha_via_lambda_bisection(tree: ScenarioTree, b: Payoff | None = None, tol: float = 1e-7) -> float:
    return lambda_bisection(tree, b, tol).value


def check_ratio_quasi_concavity(x1: np.ndarray, x2: np.ndarray, p: np.ndarray, c: float,
                                tol: float = 1e-12, seed: int | None = None) -> PropertyVerdict:
    """Quasi-concavity of the plain ratio on payoffs with positive expectation."""
    if not (p @ x1 > 0 and p @ x2 > 0):
        raise PreconditionViolated("both payoffs need positive expectation")
    a1, a2 = gain_loss_ratio(x1, p), gain_loss_ratio(x2, p)
    am = gain_loss_ratio(c * x1 + (1.0 - c) * x2, p)
    return _verdict("ratio_quasi_concavity",
                    [(excess(min(a1, a2), am), {"c": c, "alpha_1": a1, "alpha_2": a2, "alpha_mix": am})], tol, seed)
