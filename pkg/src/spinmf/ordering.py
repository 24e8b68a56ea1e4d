"""Spin orderings for the autoregressive factorization.

The main product is the criticality order: vertices ranked by when a
greedy maximum-weight spanning forest (negated Kruskal over |coupling|)
first touches them. Random and inverse orders are the experiment controls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .model import IsingModel
from .seeding import rng_for


@dataclass(eq=False)
class SpinOrder:
    """A permutation of spin indices; position t holds the t-th spin visited."""

    permutation: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.permutation, dtype=np.int64)
        n = p.shape[0]
        if p.ndim != 1 or sorted(p.tolist()) != list(range(n)):
            raise ContractViolation("order must be a permutation of 0..n-1")
        self.permutation = p

    @property
    def n(self) -> int:
        return self.permutation.shape[0]


@dataclass(eq=False)
class SpanningForest:
    """Accepted edges of the maximum spanning forest, in acceptance order."""

    edges: list[tuple[int, int]] = field(default_factory=list)
    total_weight: float = 0.0


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def coupling_edges(model: IsingModel) -> list[tuple[float, int, int]]:
    """(weight, u, v) for every pair with |J_uv + J_vu| > 0, u < v.

    Summing the two stored entries keeps edge weights invariant under field
    absorption and other asymmetric storage.
    """
    W = np.abs(model.J + model.J.T)
    iu, iv = np.nonzero(np.triu(W, k=1))
    return [(float(W[u, v]), int(u), int(v)) for u, v in zip(iu, iv)]


def criticality_order(
    model: IsingModel, tie_break: str = "index", seed: int = 0
) -> tuple[SpinOrder, SpanningForest]:
    """Vertex first-touch order of the greedy maximum spanning forest.

    Edges are taken in non-increasing |weight| order; an edge is accepted iff
    its endpoints lie in different union-find components. When an accepted
    edge introduces two new vertices both are appended (u first); when it
    introduces one, that one is appended. Vertices never touched by an
    accepted edge (isolated spins, or extra components' leftovers) are
    appended in ascending index order at the end.

    tie_break:
        "index": stable sort by (weight desc, u asc, v asc); both-new vertices
            append in the edge's stored orientation. Fully reproducible.
        "seeded": equally weighted edges are permuted by ``seed`` and
            both-new appends are coin-flipped from the same stream.
    """
    if model.n < 1:
        raise ContractViolation("model must have at least one spin")
    if tie_break not in ("index", "seeded"):
        raise ContractViolation(f"unknown tie_break {tie_break!r}")
    edges = coupling_edges(model)
    if tie_break == "seeded":
        rng = rng_for(seed)
        rng.shuffle(edges)
    edges.sort(key=lambda e: -e[0])

    uf = _UnionFind(model.n)
    order: list[int] = []
    in_order = np.zeros(model.n, dtype=bool)
    forest = SpanningForest()
    for w, u, v in edges:
        if not uf.union(u, v):
            continue
        forest.edges.append((u, v))
        forest.total_weight += w
        if in_order[u] and in_order[v]:
            # Possible when the edge merges two already-visited components.
            pass
        elif in_order[u]:
            order.append(v)
        elif in_order[v]:
            order.append(u)
        else:
            first, second = (u, v)
            if tie_break == "seeded" and rng.random() < 0.5:
                first, second = (v, u)
            order.extend((first, second))
        in_order[u] = in_order[v] = True
        if len(forest.edges) == model.n - 1:
            break
    for v in range(model.n):
        if not in_order[v]:
            order.append(v)
    return SpinOrder(np.array(order)), forest


def random_order(n: int, seed: int = 0) -> SpinOrder:
    """Uniformly random permutation, deterministic given the seed."""
    return SpinOrder(rng_for(seed).permutation(n))


def inverse_order(order: SpinOrder) -> SpinOrder:
    """The same sequence visited back to front."""
    return SpinOrder(order.permutation[::-1].copy())


def save_order(order: SpinOrder, forest: SpanningForest | None, path) -> None:
    payload = {
        "order": order.permutation.tolist(),
        "tree_edges": [list(e) for e in forest.edges] if forest else [],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_order(path) -> SpinOrder:
    with open(path) as fh:
        return SpinOrder(np.array(json.load(fh)["order"]))
