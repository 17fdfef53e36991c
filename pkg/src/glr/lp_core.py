"""Dense two-phase simplex for small bounded-variable linear programs.

Problems are ``maximize c @ x  s.t.  A x = b,  lower <= x <= upper`` with
lower bounds possibly ``-inf`` and upper bounds possibly ``+inf``.  Every
outcome carries a certificate: the optimal primal/dual pair, an improving
recession ray, or Farkas multipliers proving infeasibility.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _simplex_kernels as kern
from .errors import DimensionMismatch, NumericalBreakdown

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
GAP_TOL = 1e-8
PIVOT_TOL = 1e-9  # relative to the entering column's largest entry
# refactor the tableau from the original data this often to stop drift
REINVERT_EVERY = 64


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(-1, n) if A.ndim == 2 and A.shape[1] == n else np.zeros((0, n))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        up = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if A.ndim != 2 or A.shape != (b.size, n):
            raise DimensionMismatch(f"A has shape {A.shape}, expected ({b.size}, {n})")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DimensionMismatch("objective and constraints must be finite")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)) or np.any(lo == np.inf) or np.any(up == -np.inf):
            raise DimensionMismatch("bounds must be reals, -inf (lower) or +inf (upper)")
        for name, val in (("c", c), ("A", A), ("b", b), ("lower", lo), ("upper", up)):
            object.__setattr__(self, name, val)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @classmethod
    def build(cls, c, A=None, b=None, lower=0.0, upper=np.inf) -> LpProblem:
        c = np.asarray(c, dtype=float)
        if A is None:
            A = np.zeros((0, c.size))
            b = np.zeros(0)
        return cls(c, A, b, lower, upper)


@dataclass(frozen=True, eq=False)
class LpOutcome:
    status: Status
    value: float = np.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    certificate: np.ndarray | None = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# -- standard form -----------------------------------------------------------

@dataclass
class _Std:
    """x = shift + M y with 0 <= y <= ub; A' = R A M, b' = R (b - A shift), R = diag(row_scale)."""

    cols: list[tuple[int, float]]   # (original var, signed column scale) per internal column
    ub: np.ndarray
    shift: np.ndarray
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    const: float
    row_scale: np.ndarray

    def to_x(self, y: np.ndarray, n: int, with_shift: bool = True) -> np.ndarray:
        x = self.shift.copy() if with_shift else np.zeros(n)
        for k, (orig, sign) in enumerate(self.cols):
            x[orig] += sign * y[k]
        return x


def _standardize(p: LpProblem) -> _Std:
    m, n = p.shape
    cols: list[tuple[int, float]] = []
    ub: list[float] = []
    shift = np.zeros(n)
    for k in range(n):
        lo, up = p.lower[k], p.upper[k]
        if np.isfinite(lo):
            shift[k] = lo
            cols.append((k, 1.0))
            ub.append(up - lo)
        elif np.isfinite(up):
            shift[k] = up
            cols.append((k, -1.0))
            ub.append(np.inf)
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
            ub.extend([np.inf, np.inf])
    idx = np.array([c[0] for c in cols], dtype=int)
    sgn = np.array([c[1] for c in cols])
    A = p.A[:, idx] * sgn if cols else np.zeros((m, 0))
    # equilibrate rows so feasibility tolerances mean the same thing on every row
    peak = np.max(np.abs(p.A), axis=1, initial=0.0)
    rs = np.where(peak > 0.0, 1.0 / np.where(peak > 0.0, peak, 1.0), 1.0)
    b = (p.b - p.A @ shift) * rs
    A = A * rs[:, None]
    # then columns, by powers of two so the rescaling is exact; a column of
    # tiny entries otherwise has reduced costs below the optimality tolerance
    cpeak = np.max(np.abs(A), axis=0, initial=0.0)
    cs = np.where(cpeak > 0.0, np.exp2(-np.round(np.log2(np.where(cpeak > 0.0, cpeak, 1.0)))), 1.0)
    cols = [(k, s * f) for (k, s), f in zip(cols, cs.tolist())]
    ubs = np.array(ub, dtype=float) / cs
    return _Std(cols, ubs, shift, A * cs, b, p.c[idx] * sgn * cs, float(p.c @ shift), rs)


# -- driver ------------------------------------------------------------------

def solve_lp(p: LpProblem, max_iter: int | None = None) -> LpOutcome:
    """Solve ``p`` to optimality or produce an infeasibility / unboundedness certificate."""
    m, n = p.shape
    if np.any(p.lower > p.upper):
        k = int(np.flatnonzero(p.lower > p.upper)[0])
        return LpOutcome(Status.INFEASIBLE, certificate=np.zeros(m), extra={"empty_bounds": k})
    std = _standardize(p)
    nv = std.A.shape[1]
    N = nv + m
    sign = np.where(std.b >= 0, 1.0, -1.0)
    T = np.hstack([std.A * sign[:, None], np.eye(m)])
    xB = np.abs(std.b)
    basis = np.arange(nv, N)
    is_basic = np.zeros(N, dtype=np.bool_)
    is_basic[nv:] = True
    at_upper = np.zeros(N, dtype=np.bool_)
    ub = np.concatenate([std.ub, np.full(m, np.inf)])
    allowed = np.zeros(N, dtype=np.bool_)
    allowed[:nv] = True
    limit = max_iter if max_iter is not None else 50 * (m + N) + 1000
    scale_b = max(1.0, float(np.max(np.abs(std.b)))) if m else 1.0

    full = T.copy()
    rhs = xB.copy()

    def run(cost, d):
        done = 0
        while True:
            chunk = min(REINVERT_EVERY, limit - done)
            status, j, delta, it = kern.iterate(T, d, xB, basis, is_basic, at_upper, ub, allowed,
                                                chunk, OPT_TOL, PIVOT_TOL)
            done += it
            if status != kern.ITERATION_LIMIT or done >= limit:
                return status, j, delta, done
            _reinvert(full, rhs, T, d, xB, basis, at_upper, ub, cost)

    # phase 1: maximize -sum(artificials)
    cost1 = np.concatenate([np.zeros(nv), -np.ones(m)])
    d = cost1 - cost1[basis] @ T
    status, _, _, it1 = run(cost1, d)
    _check_status(status, T, "phase 1")
    if status == kern.UNBOUNDED:
        raise NumericalBreakdown("phase 1: spurious unbounded direction (tableau drift)")
    _reinvert(full, rhs, T, d, xB, basis, at_upper, ub, cost1)
    infeas = float(np.sum(xB[basis >= nv]))
    log.debug("phase 1: %d iterations, artificial mass %.3e", it1, infeas)
    if infeas > FEAS_TOL * scale_b:
        y1 = cost1[basis] @ T[:, nv:]
        # multipliers in the original row space
        return LpOutcome(Status.INFEASIBLE, certificate=-(y1 * sign) * std.row_scale, iterations=it1)

    # phase 2: artificials pinned at zero, never re-enter
    ub[nv:] = 0.0
    cost2 = np.concatenate([std.c, np.zeros(m)])
    d = cost2 - cost2[basis] @ T
    if np.any(std.c != 0.0):
        status, j, delta, it2 = run(cost2, d)
        _check_status(status, T, "phase 2")
    else:
        status, j, delta, it2 = kern.OPTIMAL, -1, 0.0, 0
    log.debug("phase 2: %d iterations, status %d", it2, status)
    if log.isEnabledFor(logging.DEBUG) and T.size <= 4000:
        log.debug("final tableau basis=%s\n%s", basis.tolist(), np.array2string(T, precision=4, max_line_width=200))
    iters = it1 + it2

    if status == kern.UNBOUNDED:
        ray_y = np.zeros(N)
        ray_y[j] = delta
        ray_y[basis] = -delta * T[:, j]
        ray = std.to_x(ray_y[:nv], n, with_shift=False)
        ray /= max(1.0, float(np.max(np.abs(ray))))
        return LpOutcome(Status.UNBOUNDED, value=np.inf, certificate=ray, iterations=iters)

    y, duals = _refine(std, T, xB, basis, at_upper, ub, sign, cost2, nv, m)
    x = std.to_x(y, n)
    value = float(p.c @ x)
    return LpOutcome(Status.OPTIMAL, value=value, x=x, duals=duals * std.row_scale, iterations=iters)


def _check_status(status: int, T: np.ndarray, phase: str) -> None:
    if status == kern.ITERATION_LIMIT:
        raise NumericalBreakdown(f"{phase}: iteration limit reached (cycling or breakdown)")
    if not np.all(np.isfinite(T)):
        raise NumericalBreakdown(f"{phase}: tableau lost finiteness")


def _reinvert(full, rhs, T, d, xB, basis, at_upper, ub, cost) -> None:
    """Rebuild tableau, basic values and reduced costs in place for the current basis."""
    B = full[:, basis]
    yN = np.zeros(full.shape[1])
    upper_nb = at_upper.copy()
    upper_nb[basis] = False
    yN[upper_nb] = ub[upper_nb]
    try:
        T[:] = np.linalg.solve(B, full)
        xB[:] = np.linalg.solve(B, rhs - full @ yN)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown("basis became singular") from exc
    d[:] = cost - cost[basis] @ T


def _refine(std, T, xB, basis, at_upper, ub, sign, cost, nv, m):
    """Recompute basic values and duals from the original data for the final basis."""
    full = np.hstack([std.A * sign[:, None], np.eye(m)])
    rhs = np.abs(std.b)
    yN = np.zeros(nv + m)
    upper_nb = at_upper.copy()
    upper_nb[basis] = False
    yN[upper_nb] = ub[upper_nb]
    B = full[:, basis]
    try:
        xb = np.linalg.solve(B, rhs - full @ yN)
        dual_signed = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:
        xb = xB.copy()
        dual_signed = cost[basis] @ T[:, nv:]
    else:
        lo_ok = np.all(xb >= -FEAS_TOL)
        up_ok = np.all(xb <= ub[basis] + FEAS_TOL)
        if not (lo_ok and up_ok and np.all(np.isfinite(xb))):
            xb = xB.copy()
            dual_signed = cost[basis] @ T[:, nv:]
    y = yN
    y[basis] = np.clip(xb, 0.0, ub[basis])
    return y[:nv], dual_signed * sign


# -- certificates and diagnostics --------------------------------------------

def reduced_costs(p: LpProblem, duals: np.ndarray) -> np.ndarray:
    return p.c - p.A.T @ duals


def dual_objective(p: LpProblem, duals: np.ndarray, tol: float = OPT_TOL) -> float:
    """Lagrangian dual bound ``b @ y + sum_k sup_{x_k in box} r_k x_k`` (maximization)."""
    r = reduced_costs(p, duals)
    r = np.where(np.abs(r) <= tol * max(1.0, float(np.max(np.abs(p.c), initial=0.0))), 0.0, r)
    total = float(p.b @ duals)
    for rk, lo, up in zip(r, p.lower, p.upper):
        if rk > 0:
            total += rk * up
        elif rk < 0:
            total += rk * lo
    return total


def primal_residual(p: LpProblem, x: np.ndarray) -> float:
    """Largest violation of equality rows and bounds."""
    eq = float(np.max(np.abs(p.A @ x - p.b), initial=0.0))
    bnd = float(np.max(np.maximum(p.lower - x, 0.0), initial=0.0))
    bnd = max(bnd, float(np.max(np.maximum(x - p.upper, 0.0), initial=0.0)))
    return max(eq, bnd)


def complementarity_residual(p: LpProblem, x: np.ndarray, duals: np.ndarray) -> float:
    """Largest ``|r_k| * distance of x_k from the bound that r_k pushes it to``."""
    r = reduced_costs(p, duals)
    zero = OPT_TOL * max(1.0, float(np.max(np.abs(p.c), initial=0.0)))
    worst = 0.0
    for rk, xk, lo, up in zip(r, x, p.lower, p.upper):
        if abs(rk) <= zero:
            continue
        if rk > 0:
            gap = up - xk
        else:
            gap = xk - lo
        worst = max(worst, abs(rk) * gap)
    return worst


def verify_infeasibility(p: LpProblem, y: np.ndarray) -> bool:
    """Farkas check: ``y @ b`` exceeds ``sup_{x in box} (A^T y) @ x``, so ``A x = b`` has no solution in the box."""
    g = p.A.T @ y
    hi = 0.0
    for gk, l, u in zip(g, p.lower, p.upper):
        if abs(gk) <= 1e-12:
            continue
        bound = u if gk > 0 else l
        if not np.isfinite(bound):
            return False
        hi += gk * bound
    return float(y @ p.b) > hi + 1e-12


def verify_ray(p: LpProblem, ray: np.ndarray, tol: float = 1e-8) -> bool:
    """Recession direction that stays feasible and strictly improves the objective."""
    if float(p.c @ ray) <= tol:
        return False
    if np.max(np.abs(p.A @ ray), initial=0.0) > tol:
        return False
    if np.any((np.isfinite(p.lower)) & (ray < -tol)) or np.any((np.isfinite(p.upper)) & (ray > tol)):
        return False
    return True


# -- linear-fractional programs ----------------------------------------------

def solve_fractional(numerator, denominator, cone: LpProblem, maximize: bool = True) -> LpOutcome:
    """Optimize ``numerator @ x / denominator @ x`` over the cone ``{A x = 0, bounds}``.

    The denominator must be positive on the cone minus the origin.  Fixing
    ``denominator @ x = 1`` turns the ratio into a linear objective.  Status
    ``UNBOUNDED`` means the supremum (infimum) is ``+inf`` (``-inf``);
    ``INFEASIBLE`` means the cone is ``{0}``.
    """
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    if num.shape != (cone.shape[1],) or den.shape != num.shape:
        raise DimensionMismatch("numerator/denominator length must match cone variables")
    if np.any(cone.b != 0.0):
        raise DimensionMismatch("cone constraints must be homogeneous (b = 0)")
    if np.any(np.isfinite(cone.lower) & (cone.lower != 0)) or np.any(np.isfinite(cone.upper) & (cone.upper != 0)):
        raise DimensionMismatch("cone bounds must be 0 or infinite")
    lp = LpProblem(num if maximize else -num, np.vstack([cone.A, den]), np.append(cone.b, 1.0), cone.lower, cone.upper)
    out = solve_lp(lp)
    if out.status is Status.OPTIMAL:
        val = out.value if maximize else -out.value
        return LpOutcome(Status.OPTIMAL, val, out.x, out.duals, iterations=out.iterations)
    if out.status is Status.UNBOUNDED:
        return LpOutcome(Status.UNBOUNDED, np.inf if maximize else -np.inf, certificate=out.certificate,
                         iterations=out.iterations)
    return out
