"""Two worked markets where the best gain-loss ratio misbehaves.

Fork market
    A root branches into ``N`` forks; inside fork ``n`` one asset moves from
    0 to ``c`` or to ``-(1 + 1/n)``.  Going long in fork ``n`` alone has ratio
    ``c p / ((1 + 1/n)(1 - p))``, which rises with ``n``, so the supremum over
    the infinite family is never reached.  Truncating at ``N`` forks gives a
    finite tree on which the LP should put all weight on the last fork.

Lognormal kernel
    In a Black-Scholes market the unique kernel ``Z = exp(-pi W_T - pi^2 T / 2)``
    is lognormal, unbounded above and not bounded away from zero.  Digital
    bets on ``{Z < eps}`` are cheap relative to their probability, and
    selling bets on ``{Z > 1/eps}`` is expensive relative to theirs; both
    ratios blow up as ``eps -> 0``.  Everything here is closed form in the
    Gaussian CDF; a tree cannot exhibit an unbounded kernel.

Not covered: a single jump with a symmetric law of infinite mean, for which
no nonzero gain has a defined ratio.  It has no finite-state counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadSpec
from .scenario_tree import Node, ScenarioTree, validate_tree


@dataclass(frozen=True)
class ForkMarketSpec:
    fork_count: int
    up_value: float = 2.0
    p_up: float = 0.5
    fork_weights: tuple[float, ...] | None = None

    def weights(self) -> np.ndarray:
        if self.fork_weights is None:
            return np.full(self.fork_count, 1.0 / self.fork_count)
        w = np.asarray(self.fork_weights, dtype=float)
        return w / w.sum()


def _check_fork(spec: ForkMarketSpec) -> None:
    if not (isinstance(spec.fork_count, int) and spec.fork_count >= 1):
        raise BadSpec(f"fork_count must be a positive integer, got {spec.fork_count!r}")
    if not 0.0 < spec.p_up < 1.0:
        raise BadSpec(f"p_up must lie in (0, 1), got {spec.p_up!r}")
    if not (math.isfinite(spec.up_value) and spec.up_value > 0.0):
        raise BadSpec(f"up_value must be positive, got {spec.up_value!r}")
    floor = 2.0 * (1.0 - spec.p_up) / spec.p_up
    if spec.up_value < floor:
        raise BadSpec(f"up_value {spec.up_value!r} is below {floor!r}: a short position would win in some fork")
    if spec.fork_weights is not None:
        w = spec.fork_weights
        if len(w) != spec.fork_count or not all(math.isfinite(x) and x > 0 for x in w):
            raise BadSpec("fork_weights must be fork_count positive numbers")


def make_fork_market(spec: ForkMarketSpec) -> ScenarioTree:
    """Root 0, fork nodes ``1..N``, then leaves ``N + 2n - 1`` (up) and ``N + 2n`` (down)."""
    _check_fork(spec)
    n_forks = spec.fork_count
    w = spec.weights()
    p = spec.p_up
    nodes = [Node(0, None, 0, 1.0, (0.0,))]
    nodes += [Node(n, 0, 1, float(w[n - 1]), (0.0,)) for n in range(1, n_forks + 1)]
    for n in range(1, n_forks + 1):
        nodes.append(Node(n_forks + 2 * n - 1, n, 2, p, (spec.up_value,)))
        nodes.append(Node(n_forks + 2 * n, n, 2, 1.0 - p, (-(1.0 + 1.0 / n),)))
    return validate_tree(ScenarioTree(1, tuple(nodes)))


@dataclass(frozen=True)
class ForkClosedForm:
    per_fork: tuple[float, ...]
    truncated_alpha: float
    limit_alpha: float


def fork_alpha_closed_form(spec: ForkMarketSpec) -> ForkClosedForm:
    _check_fork(spec)
    odds = spec.up_value * spec.p_up / (1.0 - spec.p_up)
    per_fork = tuple(odds / (1.0 + 1.0 / n) for n in range(1, spec.fork_count + 1))
    return ForkClosedForm(per_fork, per_fork[-1], odds)


def fork_positions(tree: ScenarioTree, positions: dict[int, tuple[float, ...]]) -> list[float]:
    """Per-fork holdings ``[fork 1, ..., fork N]`` of a strategy on a fork market."""
    return [positions[n][0] for n in tree.children[tree.root]]


@dataclass(frozen=True)
class BsDigitalSpec:
    pi: float
    maturity: float
    epsilon: float

    @property
    def vol(self) -> float:
        """Standard deviation of ``log Z``."""
        return abs(self.pi) * math.sqrt(self.maturity)


def _check_bs(spec: BsDigitalSpec) -> None:
    if not (math.isfinite(spec.pi) and spec.pi != 0.0):
        raise BadSpec(f"pi must be finite and nonzero, got {spec.pi!r}")
    if not (math.isfinite(spec.maturity) and spec.maturity > 0.0):
        raise BadSpec(f"maturity must be positive, got {spec.maturity!r}")
    if not 0.0 < spec.epsilon < 1.0:
        raise BadSpec(f"epsilon must lie in (0, 1), got {spec.epsilon!r}")


def norm_cdf(x: float) -> float:
    # erfc keeps full relative accuracy deep in the lower tail
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class DigitalGain:
    p_eps: float
    c_eps: float
    ratio: float
    lower_bound: float
    checks: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


@dataclass(frozen=True)
class MirrorGain:
    q_eps: float
    b_eps: float
    ratio: float
    lower_bound: float
    checks: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def bs_digital_gain(spec: BsDigitalSpec) -> DigitalGain:
    """Long the digital on ``{Z < eps}``, financed at its price.

    ``log Z`` is normal with mean ``-v^2/2`` and sd ``v`` under P; under the
    pricing measure the mean flips to ``+v^2/2``, which gives the price.
    """
    _check_bs(spec)
    v, eps = spec.vol, spec.epsilon
    p = norm_cdf((math.log(eps) + 0.5 * v * v) / v)
    c = norm_cdf((math.log(eps) - 0.5 * v * v) / v)
    ratio = (1.0 - c) * p / (c * (1.0 - p))
    bound = 1.0 / eps - p
    checks = {
        "cost_below_eps_prob": c < eps * p < 1.0,
        "ratio_above_cost_bound": ratio > (1.0 - c) / eps,
        "cost_bound_above_lower_bound": (1.0 - c) / eps > bound,
    }
    return DigitalGain(p, c, ratio, bound, checks)


def bs_mirror_gain(spec: BsDigitalSpec) -> MirrorGain:
    """Short the digital on ``{Z > 1/eps}``, selling it at its price."""
    _check_bs(spec)
    v, eps = spec.vol, spec.epsilon
    q = norm_cdf((math.log(eps) - 0.5 * v * v) / v)
    b = norm_cdf((math.log(eps) + 0.5 * v * v) / v)
    ratio = b * (1.0 - q) / ((1.0 - b) * q)
    bound = (1.0 - q) / eps
    checks = {
        "price_between": 1.0 > b > q / eps,
        "ratio_above_bound": ratio > bound,
    }
    return MirrorGain(q, b, ratio, bound, checks)


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float


def bs_monte_carlo(spec: BsDigitalSpec, samples: int = 1_000_000, seed: int = 0) -> dict[str, McEstimate]:
    """Importance-sampled estimates of ``p_eps, c_eps, q_eps, b_eps``.

    The events sit many standard deviations out for small ``eps``, so the
    Gaussian driver is sampled with its mean moved onto each event boundary
    and reweighted by the likelihood ratio.
    """
    _check_bs(spec)
    v, eps = spec.vol, spec.epsilon
    rng = np.random.default_rng(seed)
    # log Z = -v g - v^2/2 with g standard normal
    out = {}
    g_low = (-math.log(eps) - 0.5 * v * v) / v     # Z < eps  iff  g > g_low
    g_high = (math.log(eps) - 0.5 * v * v) / v     # Z > 1/eps  iff  g < g_high
    for names, shift, inside in (
        (("p_eps", "c_eps"), g_low, lambda g: g > g_low),
        (("q_eps", "b_eps"), g_high, lambda g: g < g_high),
    ):
        g = rng.standard_normal(samples) + shift
        w = np.exp(-shift * g + 0.5 * shift * shift) * inside(g)
        z = np.exp(-v * g - 0.5 * v * v)
        prob, cost = w, w * z
        out[names[0]] = McEstimate(float(prob.mean()), float(prob.std(ddof=1) / math.sqrt(samples)))
        out[names[1]] = McEstimate(float(cost.mean()), float(cost.std(ddof=1) / math.sqrt(samples)))
    return out


def fork_series(counts: Sequence[int], up_value: float = 2.0, p_up: float = 0.5) -> list[tuple[int, float]]:
    """``(N, truncated closed-form value)`` pairs."""
    return [(n, fork_alpha_closed_form(ForkMarketSpec(n, up_value, p_up)).truncated_alpha) for n in counts]


def bs_series(pi: float, maturity: float, eps: Sequence[float]) -> list[tuple[float, float, float]]:
    """``(eps, digital ratio, mirror ratio)`` triples."""
    rows = []
    for e in eps:
        spec = BsDigitalSpec(pi, maturity, e)
        rows.append((e, bs_digital_gain(spec).ratio, bs_mirror_gain(spec).ratio))
    return rows
