"""Undirected graphs, depth-first chain reduction and total variation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)


@dataclass(frozen=True)
class ChainOrder:
    """DFS visit order of a graph and the path it induces.

    ``chain_edges[k]`` joins ``order[k]`` and ``order[k + 1]``; its edge
    index is ``k + 1`` (1-based, in chain position order).
    """

    root: int
    order: tuple[int, ...]
    chain_edges: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.order)

    def order_array(self) -> np.ndarray:
        return np.asarray(self.order, dtype=np.int64)

    def position(self) -> np.ndarray:
        """Inverse permutation: ``position()[node]`` is the chain slot of ``node``."""
        pos = np.empty(self.n, dtype=np.int64)
        pos[self.order_array()] = np.arange(self.n)
        return pos


def new_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    if n < 1:
        raise GraphError("graph needs at least one node")
    seen: set[tuple[int, int]] = set()
    for e in edges:
        if len(e) != 2:
            raise GraphError(f"edge {tuple(e)!r} is not a node pair")
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        if u == v:
            raise GraphError(f"self-loop at node {u}")
        seen.add((u, v) if u < v else (v, u))
    canon = tuple(sorted(seen))
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u, v in canon:
        nbrs[u].append(v)
        nbrs[v].append(u)
    adjacency = tuple(tuple(sorted(a)) for a in nbrs)
    return Graph(n=n, edges=canon, adjacency=adjacency)


def _reachable(g: Graph, start: int) -> int:
    visited = bytearray(g.n)
    visited[start] = 1
    stack = [start]
    count = 1
    while stack:
        u = stack.pop()
        for v in g.adjacency[u]:
            if not visited[v]:
                visited[v] = 1
                count += 1
                stack.append(v)
    return count


def is_connected(g: Graph) -> bool:
    return _reachable(g, 0) == g.n


def dfs_chain(g: Graph, root: int = 0) -> ChainOrder:
    """Depth-first visit order from ``root``, exploring neighbours in ascending id.

    Consecutive visits are linked even when they are not adjacent in ``g``
    (after backtracking), so the result is always a Hamiltonian path on the
    node set.
    """
    if not 0 <= root < g.n:
        raise GraphError(f"root {root} outside [0, {g.n})")
    if not is_connected(g):
        raise GraphError("graph is not connected")

    visited = bytearray(g.n)
    visited[root] = 1
    order = [root]
    # (node, index of next neighbour to try)
    stack: list[list[int]] = [[root, 0]]
    while stack:
        frame = stack[-1]
        u, i = frame
        nbrs = g.adjacency[u]
        while i < len(nbrs) and visited[nbrs[i]]:
            i += 1
        if i == len(nbrs):
            stack.pop()
            continue
        frame[1] = i + 1
        v = nbrs[i]
        visited[v] = 1
        order.append(v)
        stack.append([v, 0])

    chain_edges = tuple((order[t], order[t + 1]) for t in range(len(order) - 1))
    return ChainOrder(root=root, order=tuple(order), chain_edges=chain_edges)


def chain_from_order(order: Sequence[int]) -> ChainOrder:
    """Wrap an explicit node ordering (e.g. the native order of a path graph)."""
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(len(order))):
        raise GraphError("order must be a permutation of 0..n-1")
    return ChainOrder(
        root=order[0],
        order=order,
        chain_edges=tuple((order[t], order[t + 1]) for t in range(len(order) - 1)),
    )


def total_variation(theta, edges) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError("theta must be a vector")
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if e.size == 0:
        return 0.0
    e = e.reshape(-1, 2)
    if e.max() >= theta.shape[0] or e.min() < 0:
        raise ValueError("edge endpoints do not match the length of theta")
    return float(np.abs(theta[e[:, 0]] - theta[e[:, 1]]).sum())


# -- generators ---------------------------------------------------------------

def gen_chain(n: int) -> Graph:
    if n < 1:
        raise GraphError("chain needs at least one node")
    return new_graph(n, [(i, i + 1) for i in range(n - 1)])


def gen_lattice(rows: int, cols: int) -> Graph:
    """4-neighbour grid; node ``r * cols + c`` sits at row ``r``, column ``c``."""
    if rows < 1 or cols < 1:
        raise GraphError("lattice dimensions must be positive")
    edges = []
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                edges.append((k, k + 1))
            if r + 1 < rows:
                edges.append((k, k + cols))
    return new_graph(rows * cols, edges)


def gen_linked_trees(num_trees: int, nodes_per_tree: int, children_per_node: int, seed) -> Graph:
    """Breadth-first filled trees joined in sequence by one random edge each.

    Tree ``i`` owns nodes ``i * nodes_per_tree`` .. ``(i + 1) * nodes_per_tree - 1``;
    local node ``k > 0`` hangs off local node ``(k - 1) // children_per_node``.
    """
    if num_trees < 1 or nodes_per_tree < 1 or children_per_node < 1:
        raise GraphError("tree sizes must be positive")
    rng = np.random.default_rng(seed)
    edges = []
    for t in range(num_trees):
        base = t * nodes_per_tree
        for k in range(1, nodes_per_tree):
            edges.append((base + (k - 1) // children_per_node, base + k))
    for t in range(num_trees - 1):
        a = t * nodes_per_tree + int(rng.integers(nodes_per_tree))
        b = (t + 1) * nodes_per_tree + int(rng.integers(nodes_per_tree))
        edges.append((a, b))
    return new_graph(num_trees * nodes_per_tree, edges)


# -- edge-list files ----------------------------------------------------------

def parse_edge_list(text: str) -> Graph:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise GraphError("empty edge list")
    header = rows[0]
    if len(header) != 2:
        raise GraphError("first line must be 'n m'")
    try:
        n, m = int(header[0]), int(header[1])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
    except ValueError as exc:
        raise GraphError(f"malformed edge list: {exc}") from None
    if len(edges) != m:
        raise GraphError(f"header declares {m} edges but {len(edges)} were listed")
    return new_graph(n, edges)


def read_edge_list(path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.num_edges}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, path) -> None:
    Path(path).write_text(format_edge_list(g))
