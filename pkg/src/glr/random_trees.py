"""Seeded random markets for property checks.

Prices are built so that a chosen interior martingale measure exists: at each
trading node the increments are centred under random branch weights ``q``.
With ``q = p`` the physical measure itself is a martingale measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario_tree import Node, Payoff, ScenarioTree, validate_tree


@dataclass(frozen=True)
class TreeShape:
    stages: tuple[int, int] = (1, 3)
    assets: tuple[int, int] = (1, 2)
    branches: tuple[int, int] = (2, 4)


def random_tree(rng: np.random.Generator, shape: TreeShape = TreeShape(), martingale: bool = False,
                arbitrage_free: bool = True) -> ScenarioTree:
    """A random tree, free of arbitrage unless ``arbitrage_free`` is off.

    ``martingale=True`` makes the physical measure a martingale measure.
    """
    stages = int(rng.integers(shape.stages[0], shape.stages[1] + 1))
    d = int(rng.integers(shape.assets[0], shape.assets[1] + 1))
    nodes = [Node(0, None, 0, 1.0, tuple(rng.normal(0.0, 1.0, d).round(6)))]
    frontier = [nodes[0]]
    next_id = 1
    for t in range(1, stages + 1):
        new = []
        for parent in frontier:
            k = int(rng.integers(shape.branches[0], shape.branches[1] + 1))
            p = _probs(rng, k)
            q = p if martingale else _probs(rng, k)
            inc = rng.normal(0.0, 1.0, (k, d))
            if arbitrage_free:
                inc -= q @ inc
            for j in range(k):
                node = Node(next_id, parent.id, t, float(p[j]), tuple((np.array(parent.prices) + inc[j]).tolist()))
                next_id += 1
                nodes.append(node)
                new.append(node)
        frontier = new
    return validate_tree(ScenarioTree(d, tuple(nodes)))


def _probs(rng: np.random.Generator, k: int) -> np.ndarray:
    p = np.clip(rng.dirichlet(np.full(k, 2.0)), 0.05, None)
    p = p / p.sum()
    # exact sum-to-one for the validator
    p[-1] = 1.0 - p[:-1].sum()
    return p


def perturb_subtree(tree: ScenarioTree, rng: np.random.Generator, size: float = 0.5) -> ScenarioTree:
    """Shift the first asset of one root child (and its whole subtree) by ``±size``.

    Applied to a martingale tree this breaks martingality under the physical
    measure while keeping other martingale measures available.
    """
    child = tree.children[tree.root][int(rng.integers(len(tree.children[tree.root])))]
    below = set()
    stack = [child]
    while stack:
        nid = stack.pop()
        below.add(nid)
        stack.extend(tree.children[nid])
    delta = size if rng.random() < 0.5 else -size
    nodes = tuple(
        Node(n.id, n.parent, n.time, n.prob, (n.prices[0] + delta,) + n.prices[1:]) if n.id in below else n
        for n in tree.nodes
    )
    return validate_tree(ScenarioTree(tree.asset_count, nodes))


def random_payoff(tree: ScenarioTree, rng: np.random.Generator, centred: bool = True) -> Payoff:
    """A leaf payoff; ``centred`` shifts it so the best-ratio martingale measure prices it at zero.

    Centring makes finite values above the market-alone value common, which
    is the interesting regime for endowment checks.  A random offset is added
    to about a third of the draws so that both signs of the price occur.
    """
    raw = rng.normal(0.0, 1.0, len(tree.leaves))
    if centred:
        q = _some_martingale_measure(tree)
        if q is not None:
            raw = raw - q @ raw
            if rng.random() < 1 / 3:
                raw = raw + rng.normal(0.0, 0.3)
    return Payoff.from_array(tree, raw)


def _some_martingale_measure(tree: ScenarioTree) -> np.ndarray | None:
    from .kernels import dual_best_gain_loss

    rep = dual_best_gain_loss(tree)
    if rep.kernel is None:
        return None
    z = rep.kernel.to_array(tree) * tree.leaf_probs
    return z / z.sum()
