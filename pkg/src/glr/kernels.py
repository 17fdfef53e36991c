"""Pricing kernels on a tree: the dual side of the best gain-loss problem.

A kernel is a nonnegative weight ``Z`` per leaf, read as an unnormalized
density against the physical measure.  It prices every asset as a martingale
iff, at every trading node, the ``p * Z``-weighted price increments over the
leaves below that node sum to zero.  Those are exactly the columns of the gain
matrix, so the martingale system is ``(G * p[:, None]).T @ Z = 0``.

The ratio ``max Z / min Z`` does not change when ``Z`` is scaled, so the
best kernel is found with the floor ``Z >= 1`` and the linear objective
``min t`` subject to ``Z <= t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadLambda, NoGoodDealKernel
from .lp_core import LpProblem, Status, solve_fractional, solve_lp
from .scenario_tree import Payoff, ScenarioTree

STRICT_ZERO_MARGIN = 1e-7


@dataclass(frozen=True)
class KernelWeights:
    weights: dict[int, float]

    def to_array(self, tree: ScenarioTree) -> np.ndarray:
        return np.array([self.weights[i] for i in tree.leaves])

    def to_dict(self) -> dict:
        return {str(k): v for k, v in self.weights.items()}


@dataclass(frozen=True)
class DualReport:
    value: float
    kernel: KernelWeights | None
    ess_sup: float
    ess_inf: float
    endowment_expectation: float | None
    status: Status

    def to_dict(self) -> dict:
        return {
            "value": _jnum(self.value),
            "kernel": None if self.kernel is None else self.kernel.to_dict(),
            "ess_sup": _jnum(self.ess_sup),
            "ess_inf": _jnum(self.ess_inf),
            "endowment_expectation": _jnum(self.endowment_expectation),
            "status": self.status.value,
        }


@dataclass(frozen=True)
class GapReport:
    primal: float
    dual: float
    gap: float
    agree: bool
    strict_zero_check: float | None = None
    strict_value: float | None = None

    def to_dict(self) -> dict:
        return {k: _jnum(getattr(self, k)) for k in
                ("primal", "dual", "gap", "agree", "strict_zero_check", "strict_value")}


def _jnum(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def martingale_constraints(tree: ScenarioTree) -> np.ndarray:
    """Rows ``M`` with ``M @ Z = 0`` iff ``Z`` reweights every asset into a martingale.

    One row per (trading node, asset), in gain-matrix column order.
    """
    return (tree.gain_matrix * tree.leaf_probs[:, None]).T


def _kernel_lp(tree: ScenarioTree, b: np.ndarray | None, strict_zero: bool) -> LpProblem:
    """Variables ``[Z (n), t, slacks for Z <= t (n), slack for E[ZB] <= 0]``; maximize ``-t``."""
    M = martingale_constraints(tree)
    p = tree.leaf_probs
    m, n = M.shape
    with_b = b is not None
    slack_b = with_b and not strict_zero
    nvar = 2 * n + 1 + int(slack_b)
    rows = m + n + int(with_b)
    A = np.zeros((rows, nvar))
    A[:m, :n] = M
    A[m:m + n, :n] = np.eye(n)
    A[m:m + n, n] = -1.0
    A[m:m + n, n + 1:2 * n + 1] = np.eye(n)
    if with_b:
        A[-1, :n] = p * b
        if slack_b:
            A[-1, -1] = 1.0
    c = np.zeros(nvar)
    c[n] = -1.0
    lower = np.zeros(nvar)
    lower[:n] = 1.0
    return LpProblem(c, A, np.zeros(rows), lower, np.inf)


def dual_best_gain_loss(tree: ScenarioTree, b: Payoff | None = None, strict_zero: bool = False) -> DualReport:
    """Smallest ``max Z / min Z`` over martingale kernels, optionally with ``E_Q[B] <= 0``.

    ``strict_zero`` replaces the endowment inequality by ``E_Q[B] = 0``.
    No feasible kernel means the best gain-loss ratio is ``+inf``.
    """
    barr = None if b is None else b.to_array(tree)
    out = solve_lp(_kernel_lp(tree, barr, strict_zero))
    if out.status is not Status.OPTIMAL:
        return DualReport(math.inf, None, math.inf, 1.0, None, out.status)
    n = len(tree.leaves)
    z = out.x[:n]
    z = z / z.min()
    p = tree.leaf_probs
    ebar = None if barr is None else float((p * z) @ barr / (p @ z))
    return DualReport(float(-out.value), KernelWeights(dict(zip(tree.leaves, z.tolist()))),
                      float(z.max()), 1.0, ebar, out.status)


def _box_lp(tree: ScenarioTree, lam: float, b: np.ndarray | None) -> LpProblem:
    """Feasibility of ``1 <= Z <= lam``, martingale rows, optional ``E[ZB] <= 0``."""
    M = martingale_constraints(tree)
    p = tree.leaf_probs
    m, n = M.shape
    if b is None:
        return LpProblem(np.zeros(n), M, np.zeros(m), 1.0, lam)
    A = np.zeros((m + 1, n + 1))
    A[:m, :n] = M
    A[m, :n] = p * b
    A[m, n] = 1.0
    upper = np.full(n + 1, np.inf)
    upper[:n] = lam
    return LpProblem(np.zeros(n + 1), A, np.zeros(m + 1), np.append(np.ones(n), 0.0), upper)


def q_lambda_m_feasible(tree: ScenarioTree, lam: float, b: Payoff | None = None) -> bool:
    """Is there a martingale kernel with ``max/min <= lam`` (and ``E_Q[B] <= 0``)?"""
    if not lam >= 1.0:
        raise BadLambda(f"lambda must be >= 1, got {lam!r}")
    barr = None if b is None else b.to_array(tree)
    return solve_lp(_box_lp(tree, lam, barr)).status is Status.OPTIMAL


def good_deal_bounds(tree: ScenarioTree, c: Payoff, lam: float) -> tuple[float, float]:
    """``[inf, sup]`` of ``E_Q[C]`` over martingale measures with density ratio at most ``lam``.

    Raises NoGoodDealKernel when no such measure exists; its ``threshold``
    is the smallest admissible ``lam`` (``inf`` under arbitrage).
    """
    if not lam >= 1.0:
        raise BadLambda(f"lambda must be >= 1, got {lam!r}")
    carr = c.to_array(tree)
    p = tree.leaf_probs
    M = martingale_constraints(tree)
    m, n = M.shape
    # homogenized box: w = h*Z with h <= w_i <= lam*h, as a cone with slacks
    # variables [w (n), h, lo slacks (n), hi slacks (n)]
    nvar = 3 * n + 1
    A = np.zeros((m + 2 * n, nvar))
    A[:m, :n] = M
    A[m:m + n, :n] = np.eye(n)
    A[m:m + n, n] = -1.0
    A[m:m + n, n + 1:2 * n + 1] = -np.eye(n)
    A[m + n:, :n] = -np.eye(n)
    A[m + n:, n] = lam
    A[m + n:, 2 * n + 1:] = -np.eye(n)
    cone = LpProblem(np.zeros(nvar), A, np.zeros(A.shape[0]), 0.0, np.inf)
    num = np.zeros(nvar)
    num[:n] = p * carr
    den = np.zeros(nvar)
    den[:n] = p
    hi = solve_fractional(num, den, cone, maximize=True)
    if hi.status is Status.INFEASIBLE:
        raise NoGoodDealKernel(lam, dual_best_gain_loss(tree).value)
    lo = solve_fractional(num, den, cone, maximize=False)
    return float(lo.value), float(hi.value)


def market_rho(tree: ScenarioTree, x: Payoff, lam: float) -> float:
    """``sup E_Q[-X]`` over martingale measures with density ratio at most ``lam``; ``-inf`` if there are none."""
    try:
        lower, _ = good_deal_bounds(tree, x, lam)
    except NoGoodDealKernel:
        return -math.inf
    return -lower


def duality_gap_report(tree: ScenarioTree, b: Payoff | None = None, tol: float = 1e-7) -> GapReport:
    """Primal and dual best ratios side by side.

    When the endowment strictly improves on the market alone and the value is
    finite, the minimizing kernel must price the endowment at exactly zero;
    ``strict_zero_check`` is that price and ``strict_value`` the value with
    the equality imposed.
    """
    from .gainloss import best_gain_loss

    primal = best_gain_loss(tree, b).value
    rep = dual_best_gain_loss(tree, b)
    dual = rep.value
    if math.isinf(primal) and math.isinf(dual):
        gap = 0.0
    elif math.isinf(primal) or math.isinf(dual):
        gap = math.inf
    else:
        gap = abs(primal - dual) / max(1.0, dual)
    check = strict = None
    if b is not None and math.isfinite(dual):
        base = dual_best_gain_loss(tree).value
        if dual > base + STRICT_ZERO_MARGIN * max(1.0, base):
            check = abs(rep.endowment_expectation)
            strict = dual_best_gain_loss(tree, b, strict_zero=True).value
    return GapReport(primal, dual, gap, gap <= tol, check, strict)
