"""Gain-loss ratios and the best market gain-loss, with or without an endowment.

The best ratio ``sup alpha(s*B + K)`` over zero-cost gains ``K`` and scales
``s >= 0`` is computed as one LP.  Writing ``s*B + K = u - v`` with
``u, v >= 0`` and fixing ``E[v] = 1`` turns the ratio into the linear
objective ``E[u]``; overlapping ``u`` and ``v`` can only pull the value
towards 1, and every market has best ratio at least 1, so the relaxation is
exact.  Unboundedness of the LP is a ratio of ``+inf``.

Whether the supremum is attained *with the endowment actually held* is a
second LP: maximize ``s`` over the optimal face.  ``s = 0`` throughout the
face means the best one can do is dilute ``B`` away by taking ever larger
market positions, so the value is only approached, not reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadLambda, ZeroPayoff
from .lp_core import LpProblem, Status, solve_lp
from .scenario_tree import Payoff, ScenarioTree, Strategy

ATTAIN_TOL = 1e-7


def gain_loss_ratio(x: Payoff | np.ndarray, p: np.ndarray | dict) -> float:
    """``E[X+] / E[X-]``; ``+inf`` when the payoff never loses."""
    xs, ps = _aligned(x, p)
    if not np.any(xs != 0.0):
        raise ZeroPayoff("the gain-loss ratio is undefined at the zero payoff")
    gain = float(ps @ np.maximum(xs, 0.0))
    loss = float(ps @ np.maximum(-xs, 0.0))
    return math.inf if loss == 0.0 else gain / loss


def _aligned(x, p) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(x, Payoff):
        keys = list(x.values)
        xs = np.array([x.values[k] for k in keys], dtype=float)
        ps = np.array([p[k] for k in keys], dtype=float) if isinstance(p, dict) else np.asarray(p, dtype=float)
    else:
        xs = np.asarray(x, dtype=float)
        ps = np.array(list(p.values()), dtype=float) if isinstance(p, dict) else np.asarray(p, dtype=float)
    return xs, ps


def _check_lambda(lam: float) -> None:
    if not lam >= 1.0:
        raise BadLambda(f"lambda must be >= 1, got {lam!r}")


def utility_U(x: float, lam: float) -> float:
    _check_lambda(lam)
    return x if x >= 0 else lam * x


def conjugate_V(y: float, lam: float) -> float:
    _check_lambda(lam)
    return 0.0 if 1.0 <= y <= lam else math.inf


def fenchel_gap(x: float, y: float, lam: float) -> float:
    """``V(y) - U(x) + x*y``, nonnegative for every pair."""
    v = conjugate_V(y, lam)
    return v if math.isinf(v) else v - utility_U(x, lam) + x * y


@dataclass(frozen=True)
class GainLossReport:
    value: float
    attained: bool
    witness_strategy: Strategy | None
    witness_scale: float
    normalization: float
    witness_payoff: Payoff | None = None

    def to_dict(self) -> dict:
        return {
            "value": _jnum(self.value),
            "attained": self.attained,
            "witness": None if self.witness_strategy is None
            else {str(k): list(v) for k, v in self.witness_strategy.positions.items()},
            "scale": _jnum(self.witness_scale),
            "normalization": _jnum(self.normalization),
        }


def _jnum(x: float):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _primal_lp(tree: ScenarioTree, b: np.ndarray | None) -> tuple[LpProblem, int]:
    """Variables ``[xi (free), s >= 0 (only with b), u >= 0, v >= 0]``."""
    G = tree.gain_matrix
    p = tree.leaf_probs
    n, k = G.shape
    ns = 0 if b is None else 1
    nvar = k + ns + 2 * n
    A = np.zeros((n + 1, nvar))
    A[:n, :k] = -G
    if b is not None:
        A[:n, k] = -b
    A[:n, k + ns:k + ns + n] = np.eye(n)
    A[:n, k + ns + n:] = -np.eye(n)
    A[n, k + ns + n:] = p
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    c = np.zeros(nvar)
    c[k + ns:k + ns + n] = p
    lower = np.zeros(nvar)
    lower[:k] = -np.inf
    return LpProblem(c, A, rhs, lower, np.inf), k


def best_gain_loss(tree: ScenarioTree, b: Payoff | None = None) -> GainLossReport:
    """Best gain-loss ratio of the market, optionally around the endowment ``b``."""
    barr = None if b is None else b.to_array(tree)
    lp, k = _primal_lp(tree, barr)
    out = solve_lp(lp)
    G = tree.gain_matrix
    p = tree.leaf_probs

    if out.status is Status.UNBOUNDED:
        ray = out.certificate
        xi, s = ray[:k], 0.0
        attained = True
        if barr is not None:
            s_max, xi_s = _max_scale_on_ray(lp, k, p)
            attained = s_max is not None and s_max >= ATTAIN_TOL
            if s_max is not None and math.isinf(s_max):
                # b is replicable: hold it against its hedge plus the arbitrage
                xi, s = xi - _replicate(G, barr), 1.0
            elif s_max is not None:
                xi, s = xi_s, s_max
        payoff = G @ xi + (s * barr if barr is not None else 0.0)
        return GainLossReport(math.inf, attained, Strategy.from_array(tree, xi), float(s),
                              float(p @ np.maximum(-payoff, 0.0)), Payoff.from_array(tree, payoff))

    value = out.value
    x = out.x
    attained = True
    if barr is not None:
        second = _max_scale_at_value(lp, k, value, out.x, G, barr)
        if second is not None:
            x = second
        attained = x[k] >= ATTAIN_TOL
        if not attained:
            # the value is reached by market gains alone; report those
            x = out.x
    xi = x[:k]
    s = float(x[k]) if barr is not None and attained else 0.0
    payoff = G @ xi + (s * barr if barr is not None else 0.0)
    if not np.any(np.abs(payoff) > 1e-7):
        # only the degenerate u = v split reaches the value, which is then 1;
        # a zero-mean endowment has ratio 1 on its own, otherwise fall back
        # to any nonzero gain (or its negative)
        if barr is not None and abs(p @ barr) <= 1e-9 * max(1.0, np.max(np.abs(barr))) and np.any(barr != 0):
            xi, s, payoff, attained = np.zeros(k), 1.0, barr, True
        else:
            xi, payoff, ok = _nonzero_gain(G, p)
            s, attained = 0.0, ok and barr is None
    return GainLossReport(float(value), bool(attained), Strategy.from_array(tree, xi), s,
                          float(p @ np.maximum(-payoff, 0.0)), Payoff.from_array(tree, payoff))


def _nonzero_gain(G: np.ndarray, p: np.ndarray):
    norms = np.max(np.abs(G), axis=0, initial=0.0)
    if not np.any(norms > 1e-12):
        return np.zeros(G.shape[1]), np.zeros(G.shape[0]), False
    j = int(np.argmax(norms > 1e-12))
    xi = np.zeros(G.shape[1])
    g = G[:, j]
    xi[j] = 1.0 if p @ g >= 0 else -1.0
    return xi, G @ xi, True


def _max_scale_at_value(lp: LpProblem, k: int, value: float, x0: np.ndarray,
                        G: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Maximize ``s`` over the optimal face ``E[u] >= value``."""
    nvar = lp.shape[1]
    A = np.zeros((lp.shape[0] + 1, nvar + 1))
    A[:-1, :nvar] = lp.A
    A[-1, :nvar] = lp.c
    A[-1, nvar] = -1.0
    rhs = np.append(lp.b, value - 1e-9 * max(1.0, abs(value)))
    c = np.zeros(nvar + 1)
    c[k] = 1.0
    out = solve_lp(LpProblem(c, A, rhs, np.append(lp.lower, 0.0), np.append(lp.upper, np.inf)))
    if out.status is Status.OPTIMAL:
        return out.x[:nvar]
    if out.status is Status.UNBOUNDED:
        # s grows without bound on the face only when b is replicable:
        # hold b at unit scale against its hedge
        x = x0.copy()
        x[:k] += (x[k] - 1.0) * _replicate(G, b)
        x[k] = 1.0
        return x
    return None


def _replicate(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Strategy whose gain equals ``b`` (least squares; exact when ``b`` is replicable)."""
    return np.linalg.lstsq(G, b, rcond=None)[0]


def _max_scale_on_ray(lp: LpProblem, k: int, p: np.ndarray):
    """Largest ``s`` among payoffs ``s*B + K >= 0`` with ``E[s*B + K] = 1``."""
    n = p.size
    nvar = lp.shape[1]
    # recession cone of the primal: same rows with E[v] = 0, hence v = 0
    A = lp.A[:-1].copy()
    A = np.vstack([A, lp.c])
    rhs = np.zeros(A.shape[0])
    rhs[-1] = 1.0
    upper = np.full(nvar, np.inf)
    upper[k + 1 + n:] = 0.0
    c = np.zeros(nvar)
    c[k] = 1.0
    out = solve_lp(LpProblem(c, A, rhs, lp.lower, upper))
    if out.status is Status.OPTIMAL:
        return float(out.x[k]), out.x[:k]
    if out.status is Status.UNBOUNDED:
        return math.inf, out.certificate[:k]
    return None, None


def is_gain_loss_free(tree: ScenarioTree, lam: float) -> bool:
    if not lam > 1.0:
        raise BadLambda(f"lambda must be > 1, got {lam!r}")
    return best_gain_loss(tree).value < lam
