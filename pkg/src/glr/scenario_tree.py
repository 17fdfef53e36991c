"""Finite multi-period market models on an event tree.

A tree node carries the (already discounted) prices of ``asset_count`` assets
and the conditional probability of reaching it from its parent.  Trading
happens at non-terminal nodes; a strategy's terminal gain is the telescoping
sum of position times price increment along the root-to-leaf path.

Finite state spaces make the integrability of the running maximum of prices
automatic, so there is nothing to check for it here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import (
    BadProbability,
    KeyMismatch,
    MalformedTree,
    NonFiniteNumber,
    OrphanNode,
    ParseError,
    RaggedHorizon,
)

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Node:
    id: int
    parent: int | None
    time: int
    prob: float
    prices: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class ScenarioTree:
    asset_count: int
    nodes: tuple[Node, ...]

    @cached_property
    def _index(self) -> dict[int, int]:
        return {n.id: i for i, n in enumerate(self.nodes)}

    def node(self, node_id: int) -> Node:
        return self.nodes[self._index[node_id]]

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None:
                kids[n.parent].append(n.id)
        return {k: tuple(v) for k, v in kids.items()}

    @cached_property
    def root(self) -> int:
        return next(n.id for n in self.nodes if n.parent is None)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if not self.children[n.id])

    @cached_property
    def nonterminals(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if self.children[n.id])

    @property
    def horizon(self) -> int:
        return self.node(self.leaves[0]).time

    def path(self, node_id: int) -> list[int]:
        """Node ids from the root down to ``node_id`` inclusive."""
        out = [node_id]
        while (parent := self.node(out[-1]).parent) is not None:
            out.append(parent)
        return out[::-1]

    @cached_property
    def leaf_probs(self) -> np.ndarray:
        probs = np.empty(len(self.leaves))
        for k, leaf in enumerate(self.leaves):
            probs[k] = math.prod(self.node(i).prob for i in self.path(leaf)[1:])
        return probs

    @cached_property
    def gain_matrix(self) -> np.ndarray:
        """Matrix G with ``G @ theta`` the terminal gains of the flattened strategy ``theta``.

        Column ``k * d + a`` belongs to asset ``a`` held at ``nonterminals[k]``.
        """
        d = self.asset_count
        col = {nid: k for k, nid in enumerate(self.nonterminals)}
        G = np.zeros((len(self.leaves), len(self.nonterminals) * d))
        for i, leaf in enumerate(self.leaves):
            path = self.path(leaf)
            for start, end in zip(path[:-1], path[1:]):
                k = col[start]
                G[i, k * d:(k + 1) * d] = np.subtract(self.node(end).prices, self.node(start).prices)
        return G

    @cached_property
    def descendant_leaves(self) -> dict[int, tuple[int, ...]]:
        """Positions (into ``leaves``) of the leaves below each node."""
        out: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for i, leaf in enumerate(self.leaves):
            for nid in self.path(leaf):
                out[nid].append(i)
        return {k: tuple(v) for k, v in out.items()}

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "asset_count": self.asset_count,
            "nodes": [
                {"id": n.id, "parent": n.parent, "time": n.time, "prob": n.prob, "prices": list(n.prices)}
                for n in self.nodes
            ],
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> ScenarioTree:
        """Parse the JSON tree format and validate it."""
        try:
            d = raw["asset_count"]
            nodes = tuple(
                Node(
                    id=_as_int(n["id"]),
                    parent=None if n.get("parent") is None else _as_int(n["parent"]),
                    time=_as_int(n["time"]),
                    prob=float(n["prob"]),
                    prices=tuple(float(v) for v in n["prices"]),
                )
                for n in raw["nodes"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed tree document: {exc!r}") from exc
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise ParseError("asset_count must be a positive integer")
        return validate_tree(cls(asset_count=d, nodes=nodes))

    @classmethod
    def from_json(cls, text: str) -> ScenarioTree:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(raw)


def _as_int(v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


@dataclass(frozen=True)
class Payoff:
    """A real value per terminal node."""

    values: Mapping[int, float] = field(default_factory=dict)

    def to_array(self, tree: ScenarioTree) -> np.ndarray:
        check_keys(tree.leaves, self.values, "payoff")
        return np.array([self.values[i] for i in tree.leaves], dtype=float)

    @classmethod
    def from_array(cls, tree: ScenarioTree, arr: Iterable[float]) -> Payoff:
        return cls(dict(zip(tree.leaves, (float(x) for x in arr))))

    def to_dict(self) -> dict[str, Any]:
        return {"values": {str(k): v for k, v in self.values.items()}}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Payoff:
        try:
            values = {_as_int(int(k)): float(v) for k, v in raw["values"].items()}
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"malformed payoff document: {exc!r}") from exc
        for k, v in values.items():
            if not math.isfinite(v):
                raise NonFiniteNumber(f"payoff value at node {k} is not finite", node=k)
        return cls(values)

    @classmethod
    def from_json(cls, text: str) -> Payoff:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(raw)


@dataclass(frozen=True)
class Strategy:
    """Asset positions held over the step following each non-terminal node."""

    positions: Mapping[int, tuple[float, ...]]

    def to_array(self, tree: ScenarioTree) -> np.ndarray:
        check_keys(tree.nonterminals, self.positions, "strategy")
        d = tree.asset_count
        out = np.empty(len(tree.nonterminals) * d)
        for k, nid in enumerate(tree.nonterminals):
            pos = self.positions[nid]
            if len(pos) != d:
                raise KeyMismatch(f"strategy at node {nid} has {len(pos)} positions, expected {d}", node=nid)
            out[k * d:(k + 1) * d] = pos
        if not np.all(np.isfinite(out)):
            raise NonFiniteNumber("strategy has non-finite positions")
        return out

    @classmethod
    def from_array(cls, tree: ScenarioTree, arr: np.ndarray) -> Strategy:
        d = tree.asset_count
        return cls({nid: tuple(float(x) for x in arr[k * d:(k + 1) * d]) for k, nid in enumerate(tree.nonterminals)})


def check_keys(expected: Iterable[int], got: Mapping[int, Any], what: str) -> None:
    exp = set(expected)
    keys = set(got)
    if keys != exp:
        missing = sorted(exp - keys)
        extra = sorted(keys - exp)
        bad = (missing or extra)[0]
        raise KeyMismatch(f"{what} keys do not match tree: missing {missing}, unexpected {extra}", node=bad)


def validate_tree(raw: ScenarioTree) -> ScenarioTree:
    """Return ``raw`` unchanged if it is a well-formed market tree, else raise.

    Checks run in order: finiteness, structure (ids, root, parents, stages),
    branch probabilities, common horizon.  The error names the first node found
    violating the first failing check.
    """
    d = raw.asset_count
    for n in raw.nodes:
        if not math.isfinite(n.prob) or not all(math.isfinite(v) for v in n.prices):
            raise NonFiniteNumber(f"node {n.id} has a non-finite probability or price", node=n.id)
        if len(n.prices) != d:
            raise MalformedTree(f"node {n.id} has {len(n.prices)} prices, expected {d}", node=n.id)

    ids: dict[int, Node] = {}
    for n in raw.nodes:
        if n.id in ids:
            raise MalformedTree(f"duplicate node id {n.id}", node=n.id)
        ids[n.id] = n
    roots = [n for n in raw.nodes if n.parent is None]
    if not roots:
        raise MalformedTree("tree has no root")
    if len(roots) > 1:
        raise MalformedTree(f"tree has {len(roots)} roots", node=roots[1].id)
    root = roots[0]
    if root.time != 0:
        raise MalformedTree(f"root {root.id} must be at time 0", node=root.id)
    for n in raw.nodes:
        if n.parent is None:
            continue
        if n.parent not in ids:
            raise OrphanNode(f"node {n.id} refers to missing parent {n.parent}", node=n.id)
        if n.time != ids[n.parent].time + 1:
            raise MalformedTree(f"node {n.id} is not one stage after its parent", node=n.id)

    for n in raw.nodes:
        if not 0.0 < n.prob <= 1.0:
            raise BadProbability(f"node {n.id} has branch probability {n.prob!r} outside (0, 1]", node=n.id)
    if root.prob != 1.0:
        raise BadProbability(f"root {root.id} must carry probability 1", node=root.id)
    sums: dict[int, float] = {}
    for n in raw.nodes:
        if n.parent is not None:
            sums[n.parent] = sums.get(n.parent, 0.0) + n.prob
    for n in raw.nodes:
        if n.id in sums and abs(sums[n.id] - 1.0) > PROB_SUM_TOL:
            raise BadProbability(f"children of node {n.id} have probabilities summing to {sums[n.id]!r}", node=n.id)

    leaf_times = {n.id: n.time for n in raw.nodes if n.id not in sums}
    horizon = max(leaf_times.values())
    for nid, t in leaf_times.items():
        if t != horizon:
            raise RaggedHorizon(f"leaf {nid} ends at stage {t}, others at {horizon}", node=nid)
    return raw


def terminal_measure(tree: ScenarioTree) -> dict[int, float]:
    return dict(zip(tree.leaves, tree.leaf_probs.tolist()))


def gain_vector(tree: ScenarioTree, xi: Strategy) -> Payoff:
    return Payoff.from_array(tree, tree.gain_matrix @ xi.to_array(tree))


def build_tree(asset_count: int, spec: Iterable[tuple[int, int | None, float, Iterable[float]]]) -> ScenarioTree:
    """Convenience constructor from ``(id, parent, prob, prices)`` rows; stages are inferred."""
    rows = list(spec)
    parent_of = {r[0]: r[1] for r in rows}

    def depth(i: int) -> int:
        t = 0
        while parent_of.get(i) is not None:
            i = parent_of[i]
            t += 1
            if t > len(rows):
                raise MalformedTree("cycle in parent links", node=i)
        return t

    nodes = []
    for nid, parent, prob, prices in rows:
        if parent is not None and parent not in parent_of:
            raise OrphanNode(f"node {nid} refers to missing parent {parent}", node=nid)
        nodes.append(Node(nid, parent, depth(nid), float(prob), tuple(float(p) for p in prices)))
    return validate_tree(ScenarioTree(asset_count, tuple(nodes)))


def binomial(up: float, down: float, p_up: float = 0.5, s0: float = 0.0) -> ScenarioTree:
    """One-period, one-asset tree moving from ``s0`` to ``up`` (node 1) or ``down`` (node 2)."""
    return build_tree(1, [(0, None, 1.0, [s0]), (1, 0, p_up, [up]), (2, 0, 1.0 - p_up, [down])])
